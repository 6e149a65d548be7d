#include "esctlr/esc_core.hpp"

#include <cmath>
#include <stdexcept>

namespace esctlr::esc_core {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double cost_eval(double ph, const CostSpec& spec) {
  require(std::isfinite(ph), "cost_eval: ph must be finite");
  double e = ph - spec.ph_sp;
  return spec.form == CostForm::SquaredError ? e * e : std::abs(e);
}

void validate(const EscParams& p) {
  require(std::isfinite(p.a) && p.a > 0.0, "esc: a must be > 0");
  require(std::isfinite(p.omega_d) && p.omega_d > 0.0,
          "esc: omega_d must be > 0");
  require(std::isfinite(p.omega_l) && p.omega_l > 0.0 && p.omega_l < p.omega_d,
          "esc: need 0 < omega_l < omega_d");
  require(std::isfinite(p.omega_h) && p.omega_h > 0.0 && p.omega_h < p.omega_d,
          "esc: need 0 < omega_h < omega_d");
  require(std::isfinite(p.dt) && p.dt > 0.0, "esc: dt must be > 0");
  require(p.dt * p.omega_d < std::numbers::pi,
          "esc: dt*omega_d must be < pi (dither would alias)");
  require(std::isfinite(p.k), "esc: k must be finite");
  require(std::isfinite(p.theta_init), "esc: theta_init must be finite");
}

EscState esc_reset(const EscParams& p) {
  EscState s;
  s.theta_hat = p.theta_init;
  s.last_u = p.theta_init;  // what a fresh step would emit at phase 0
  return s;
}

double washout_highpass(double j, const EscParams& p, double& eta,
                        bool& eta_primed) {
  if (!eta_primed) {
    eta = j;  // snap to the first observation: no startup spike
    eta_primed = true;
  }
  double hp = j - eta;
  double alpha_h = 1.0 - std::exp(-p.omega_h * p.dt);
  eta += alpha_h * (j - eta);
  return hp;
}

CoreUpdate demod_update(const EscState& s, const EscParams& p,
                        double conditioned_j) {
  double sn = std::sin(s.phase);
  double xi = conditioned_j * p.a * sn;
  double alpha_l = 1.0 - std::exp(-p.omega_l * p.dt);
  double zeta = s.zeta_hat + alpha_l * (xi - s.zeta_hat);
  double cand = s.theta_hat + p.dt * p.k * zeta;
  return CoreUpdate{sn, zeta, cand};
}

StepResult esc_step(const EscState& s, const EscParams& p, double j) {
  if (!std::isfinite(j)) {
    EscState held = s;
    held.fault = true;
    return StepResult{held, s.last_u};
  }
  EscState n = s;
  n.fault = false;
  double hp = washout_highpass(j, p, n.eta, n.eta_primed);
  CoreUpdate upd = demod_update(s, p, hp);
  n.zeta_hat = upd.zeta_next;
  n.theta_hat = upd.theta_candidate;
  double u = upd.theta_candidate + p.a * upd.sin_phase;
  n.phase = wrap_phase(s.phase + p.omega_d * p.dt);
  n.t = s.t + p.dt;
  n.last_u = u;
  return StepResult{n, u};
}

}  // namespace esctlr::esc_core
