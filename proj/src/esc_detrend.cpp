#include "esctlr/esc_detrend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esctlr::esc_detrend {

void DetrendWindow::push(double t, double j) {
  if (!buffer.empty() && t <= buffer.back().first)
    throw std::invalid_argument(
        "detrend window: timestamps must strictly increase");
  buffer.emplace_back(t, j);
  if (buffer.size() > capacity) buffer.pop_front();
}

TrendFit trend_line(const DetrendWindow& w) {
  TrendFit fit;
  std::size_t n = w.buffer.size();
  if (n < 2) return fit;
  double t_mean = 0.0, j_mean = 0.0;
  for (const auto& [t, j] : w.buffer) {
    t_mean += t;
    j_mean += j;
  }
  t_mean /= static_cast<double>(n);
  j_mean /= static_cast<double>(n);
  // Centered time keeps the normal equations well conditioned when t is
  // large (days into a run) and the window spans only minutes.
  double s_tt = 0.0, s_tj = 0.0;
  for (const auto& [t, j] : w.buffer) {
    double tc = t - t_mean;
    s_tt += tc * tc;
    s_tj += tc * (j - j_mean);
  }
  if (s_tt <= 0.0)
    throw std::runtime_error("detrend window: degenerate time axis");
  fit.alpha = j_mean;
  fit.beta = s_tj / s_tt;
  fit.t_mean = t_mean;
  fit.valid = true;
  return fit;
}

double detrend(const DetrendWindow& w) {
  TrendFit fit = trend_line(w);
  if (!fit.valid) return 0.0;  // warm-up: no adaptation until two samples
  const auto& [t_last, j_last] = w.buffer.back();
  return j_last - (fit.alpha + fit.beta * (t_last - fit.t_mean));
}

void validate(const DetrendParams& p) {
  esc_core::validate(p.core);
  if (!(std::isfinite(p.ff.k_ff) && p.ff.k_ff >= 0.0))
    throw std::invalid_argument("feedforward: k_ff must be >= 0");
  if (!(std::isfinite(p.ff.q_ff_max) && p.ff.q_ff_max >= 0.0))
    throw std::invalid_argument("feedforward: q_ff_max must be >= 0");
  if (!(p.sat.q_min >= 0.0 && p.sat.q_min < p.sat.q_max))
    throw std::invalid_argument("saturation: need 0 <= q_min < q_max");
}

namespace {

std::size_t window_capacity(const esc_core::EscParams& p) {
  double period = esc_core::kTwoPi / p.omega_d;
  return static_cast<std::size_t>(std::lround(period / p.dt));
}

}  // namespace

DetrendState activation_reset(const DetrendParams& p) {
  DetrendState s;
  s.core = esc_core::esc_reset(p.core);
  s.window.capacity = window_capacity(p.core);
  s.ff_seed_pending = p.reset_to_feedforward;
  s.last_q = std::clamp(p.core.theta_init, p.sat.q_min, p.sat.q_max);
  return s;
}

StepResult esc_detrend_step(const DetrendState& s, const DetrendParams& p,
                            double ph, double irradiance) {
  if (!std::isfinite(ph) || !std::isfinite(irradiance)) {
    DetrendState held = s;
    held.core.fault = true;
    return StepResult{held, s.last_q, 0.0, s.last_trend};
  }

  DetrendState n = s;
  n.core.fault = false;
  double j = esc_core::cost_eval(ph, p.cost);

  double hp;
  double trend;
  if (p.mode == ConditioningMode::Regression) {
    if (n.window.capacity == 0) n.window.capacity = window_capacity(p.core);
    n.window.push(s.core.t, j);
    hp = detrend(n.window);
    trend = j - hp;  // the line's value at the latest sample
  } else {
    hp = esc_core::washout_highpass(j, p.core, n.core.eta, n.core.eta_primed);
    trend = n.core.eta;
  }

  if (s.ff_seed_pending) {
    // Optional alternative reset target: start adaptation from the
    // feedforward estimate instead of the fixed theta_init.
    n.core.theta_hat = std::min(p.ff.k_ff * irradiance, p.ff.q_ff_max);
    n.ff_seed_pending = false;
  }

  esc_core::CoreUpdate upd = esc_core::demod_update(n.core, p.core, hp);
  double q_ff = std::min(p.ff.k_ff * irradiance, p.ff.q_ff_max);
  double q_raw = (upd.theta_candidate + p.core.a * upd.sin_phase) + q_ff;

  double q_cmd;
  if (q_raw >= p.sat.q_min && q_raw <= p.sat.q_max) {
    n.core.theta_hat = upd.theta_candidate;
    q_cmd = q_raw;
  } else {
    // Anti-windup: the integrator holds while the output rides the limit;
    // filters keep running so the gradient estimate stays live.
    q_cmd = std::clamp(q_raw, p.sat.q_min, p.sat.q_max);
  }
  n.core.zeta_hat = upd.zeta_next;
  n.core.phase = esc_core::wrap_phase(s.core.phase + p.core.omega_d * p.core.dt);
  n.core.t = s.core.t + p.core.dt;
  n.core.last_u = q_cmd;
  n.last_q = q_cmd;
  n.last_trend = trend;
  return StepResult{n, q_cmd, q_ff, trend};
}

}  // namespace esctlr::esc_detrend
