#include "esctlr/sysid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace esctlr::sysid {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_deg(double deg) {
  while (deg > 180.0) deg -= 360.0;
  while (deg <= -180.0) deg += 360.0;
  return deg;
}

// Solves the 4x4 system in place by Gaussian elimination with partial
// pivoting. Small enough that a linear-algebra dependency isn't warranted.
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> m,
                             std::array<double, 4> rhs) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12)
      throw std::runtime_error("fit_sinusoid: rank-deficient design");
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < 4; ++r) {
      double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < 4; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return x;
}

}  // namespace

SinusoidFit fit_sinusoid(const std::vector<std::pair<double, double>>& samples,
                         double omega) {
  if (!(omega > 0.0))
    throw std::invalid_argument("fit_sinusoid: omega must be > 0");
  if (samples.size() < 6)
    throw std::invalid_argument("fit_sinusoid: need at least 6 samples");
  double span = samples.back().first - samples.front().first;
  double period = 2.0 * kPi / omega;
  if (span + 1e-9 < period)
    throw std::invalid_argument(
        "fit_sinusoid: samples must span at least one full period");

  // Fit in centered time for conditioning; basis [1, tc, sin(w tc), cos(w tc)].
  double t_mean = 0.0;
  for (const auto& [t, y] : samples) t_mean += t;
  t_mean /= static_cast<double>(samples.size());

  std::array<std::array<double, 4>, 4> m{};
  std::array<double, 4> rhs{};
  for (const auto& [t, y] : samples) {
    double tc = t - t_mean;
    std::array<double, 4> basis{1.0, tc, std::sin(omega * tc),
                                std::cos(omega * tc)};
    for (int i = 0; i < 4; ++i) {
      rhs[i] += basis[i] * y;
      for (int j = 0; j < 4; ++j) m[i][j] += basis[i] * basis[j];
    }
  }
  std::array<double, 4> x = solve4(m, rhs);

  double ss = 0.0;
  for (const auto& [t, y] : samples) {
    double tc = t - t_mean;
    double fit = x[0] + x[1] * tc + x[2] * std::sin(omega * tc) +
                 x[3] * std::cos(omega * tc);
    ss += (y - fit) * (y - fit);
  }

  SinusoidFit out;
  out.amplitude = std::hypot(x[2], x[3]);
  // Phase back on the original time axis: sin(w tc + phi_c) = sin(w t + phi)
  // with phi = phi_c - w * t_mean.
  double phase = std::atan2(x[3], x[2]) - omega * t_mean;
  phase = std::remainder(phase, 2.0 * kPi);
  if (phase <= -kPi) phase += 2.0 * kPi;
  out.phase = phase;
  out.slope = x[1];
  out.offset = x[0] - x[1] * t_mean;
  out.rms = std::sqrt(ss / static_cast<double>(samples.size()));
  return out;
}

void validate(const ExcitationSpec& spec) {
  if (spec.periods.empty())
    throw std::invalid_argument("excitation: periods must be nonempty");
  for (double T : spec.periods)
    if (!(std::isfinite(T) && T > 0.0))
      throw std::invalid_argument("excitation: periods must be > 0");
  if (!(spec.amplitude > 0.0))
    throw std::invalid_argument("excitation: amplitude must be > 0");
  if (spec.bias - spec.amplitude < 0.0)
    throw std::invalid_argument(
        "excitation: bias - amplitude must be >= 0 (flow stays nonnegative)");
  if (spec.cycles_per_period < 2)
    throw std::invalid_argument(
        "excitation: cycles_per_period must be >= 2 (first cycle is "
        "discarded as transient)");
}

namespace {

FreqResponse fit_segment(const std::vector<LogSample>& log, double seg_start,
                         double seg_end, double period) {
  double omega = 2.0 * kPi / period;
  double fit_start = seg_start + period;  // drop the transient cycle
  std::vector<std::pair<double, double>> in, out;
  for (const auto& s : log) {
    if (s.t >= fit_start - 1e-9 && s.t < seg_end - 1e-9) {
      in.emplace_back(s.t, s.q);
      out.emplace_back(s.t, s.ph);
    }
  }
  SinusoidFit fi = fit_sinusoid(in, omega);
  SinusoidFit fo = fit_sinusoid(out, omega);

  FreqResponse r;
  r.period = period;
  double raw_gain = fi.amplitude > 0.0 ? fo.amplitude / fi.amplitude : 0.0;
  double rel_deg = wrap_deg((fo.phase - fi.phase) * 180.0 / kPi);
  // A response more than a quarter turn away opposes the input: report it
  // as a negative gain, matching the DC sign of the underlying map.
  r.gain = std::abs(rel_deg) > 90.0 ? -raw_gain : raw_gain;
  r.phase_deg = rel_deg;
  r.fit_residual_rms = fo.rms;
  r.snr = fo.rms > 0.0 ? (fo.amplitude / std::sqrt(2.0)) / fo.rms
                       : std::numeric_limits<double>::infinity();
  r.reliable = r.snr >= 2.0;
  return r;
}

}  // namespace

std::vector<FreqResponse> characterize(const std::vector<LogSample>& log,
                                       const ExcitationSpec& spec) {
  validate(spec);
  if (log.size() < 2)
    throw std::invalid_argument("characterize: log too short");
  double dt = log[1].t - log[0].t;
  for (double T : spec.periods)
    if (!(T > 2.0 * dt))
      throw std::invalid_argument(
          "characterize: every period must exceed 2*dt");

  std::vector<FreqResponse> out;
  double seg_start = log.front().t;
  for (double T : spec.periods) {
    double seg_end = seg_start + spec.cycles_per_period * T;
    out.push_back(fit_segment(log, seg_start, seg_end, T));
    seg_start = seg_end;
  }
  return out;
}

std::vector<FreqResponse> characterize(const plant_sim::PlantParams& plant,
                                       const plant_sim::PlantState& initial,
                                       const plant_sim::ProfileSpec& irradiance,
                                       const ExcitationSpec& spec, double dt) {
  validate(spec);
  plant_sim::validate(plant);
  if (!(dt > 0.0)) throw std::invalid_argument("characterize: dt must be > 0");

  double total = 0.0;
  for (double T : spec.periods) total += spec.cycles_per_period * T;
  auto n_ticks = static_cast<std::size_t>(std::llround(total / dt));

  std::vector<LogSample> log;
  log.reserve(n_ticks + 1);
  plant_sim::PlantState state = initial;

  // Open-loop excitation: per-period sinusoid segments, back to back.
  std::size_t seg = 0;
  double seg_start = 0.0;
  double seg_end = spec.cycles_per_period * spec.periods[0];
  for (std::size_t k = 0; k <= n_ticks; ++k) {
    double t = static_cast<double>(k) * dt;
    while (t >= seg_end - 1e-9 && seg + 1 < spec.periods.size()) {
      ++seg;
      seg_start = seg_end;
      seg_end += spec.cycles_per_period * spec.periods[seg];
    }
    double omega = 2.0 * kPi / spec.periods[seg];
    double q = spec.bias + spec.amplitude * std::sin(omega * (t - seg_start));
    log.push_back(LogSample{t, q, plant_sim::measure_ph(state, plant)});
    state = plant_sim::plant_step(state, plant, q,
                                  plant_sim::irradiance_profile(t, irradiance),
                                  dt);
  }
  return characterize(log, spec);
}

std::optional<double> recommend_dither(const std::vector<FreqResponse>& rs,
                                       const DitherCriteria& c) {
  std::vector<const FreqResponse*> reliable;
  for (const auto& r : rs)
    if (r.reliable) reliable.push_back(&r);
  if (reliable.size() < 2)
    throw std::invalid_argument(
        "recommend_dither: need at least 2 reliable responses");

  double max_gain = 0.0;
  for (const auto* r : reliable) max_gain = std::max(max_gain, std::abs(r->gain));

  std::optional<double> best;
  for (const auto* r : reliable) {
    double lag = std::abs(wrap_deg(r->phase_deg - c.phase_reference_deg));
    bool pass = std::abs(r->gain) >= c.gain_fraction * max_gain &&
                lag <= c.max_lag_deg;
    if (pass && (!best || r->period < *best)) best = r->period;
  }
  return best;
}

void write_report_csv(std::ostream& out, const std::vector<FreqResponse>& rs) {
  out << "period_s,gain,phase_deg,rms,reliable\n";
  char buf[160];
  for (const auto& r : rs) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%d\n", r.period,
                  r.gain, r.phase_deg, r.fit_residual_rms, r.reliable ? 1 : 0);
    out << buf;
  }
}

std::vector<LogSample> load_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("log: cannot open " + path);
  std::string line;
  // Skip metadata comments; the first remaining line is the header.
  while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
  }
  std::vector<std::string> cols;
  {
    std::istringstream hdr(line);
    std::string c;
    while (std::getline(hdr, c, ',')) cols.push_back(c);
  }
  auto col_of = [&](const std::string& name) -> int {
    auto it = std::find(cols.begin(), cols.end(), name);
    return it == cols.end() ? -1 : static_cast<int>(it - cols.begin());
  };
  int it_ = col_of("t_s");
  int iph = col_of("ph");
  int iq = col_of("q_co2_lpm");
  if (iq < 0) iq = col_of("q_applied_lpm");
  if (it_ < 0 || iph < 0 || iq < 0)
    throw std::runtime_error("log: " + path +
                             " needs columns t_s, ph, and q_co2_lpm (or "
                             "q_applied_lpm)");

  std::vector<LogSample> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cell;
    LogSample s{};
    for (int i = 0; std::getline(row, cell, ','); ++i) {
      if (i == it_) s.t = std::stod(cell);
      if (i == iph) s.ph = std::stod(cell);
      if (i == iq) s.q = std::stod(cell);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace esctlr::sysid
