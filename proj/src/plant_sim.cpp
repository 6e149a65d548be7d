#include "esctlr/plant_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "esctlr/rng.hpp"

namespace esctlr::plant_sim {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void validate(const PlantParams& p) {
  require(finite(p.tau_ph) && p.tau_ph > 0.0, "plant: tau_ph must be > 0");
  require(finite(p.gain_co2) && p.gain_co2 < 0.0,
          "plant: gain_co2 must be < 0 (CO2 injection acidifies)");
  require(finite(p.gain_photo) && p.gain_photo >= 0.0,
          "plant: gain_photo must be >= 0");
  require(finite(p.mu_max) && p.mu_max >= 0.0, "plant: mu_max must be >= 0");
  require(finite(p.k_i) && p.k_i > 0.0, "plant: k_i must be > 0");
  require(finite(p.ph_min) && finite(p.ph_max) && finite(p.ph_ambient),
          "plant: pH bounds must be finite");
  require(p.ph_min < p.ph_ambient && p.ph_ambient < p.ph_max,
          "plant: need ph_min < ph_ambient < ph_max");
  require(finite(p.noise_std) && p.noise_std >= 0.0,
          "plant: noise_std must be >= 0");
}

PlantState plant_step(const PlantState& s, const PlantParams& p, double q_co2,
                      double irradiance, double dt) {
  require(finite(q_co2) && q_co2 >= 0.0, "plant_step: q_co2 must be >= 0");
  require(finite(irradiance) && irradiance >= 0.0,
          "plant_step: irradiance must be >= 0");
  require(finite(dt) && dt > 0.0, "plant_step: dt must be > 0");
  require(finite(s.ph) && finite(s.biomass), "plant_step: non-finite state");

  // Equilibrium the pH relaxes toward while inputs are held: ambient
  // chemistry, minus CO2 acidification, plus photosynthetic alkalization.
  // tau_ph * gain_photo converts the rate-shaped photo term into an
  // equivalent equilibrium shift.
  double ph_eq = p.ph_ambient + p.gain_co2 * q_co2 +
                 p.tau_ph * p.gain_photo * irradiance * s.biomass;

  // Exact relaxation over the hold interval; no Euler step-size error.
  double decay = std::exp(-dt / p.tau_ph);
  double ph = ph_eq + (s.ph - ph_eq) * decay;
  ph = std::clamp(ph, p.ph_min, p.ph_max);

  double mu = p.mu_max * irradiance / (irradiance + p.k_i);
  double biomass = s.biomass * std::exp(mu * dt);

  return PlantState{ph, biomass, s.t + dt};
}

double measure_ph(const PlantState& s, const PlantParams& p) {
  if (p.noise_std == 0.0) return s.ph;
  // Key the stream on the time bit-pattern: same (seed, t) always yields the
  // same reading, independent of how many consumers the run has.
  rng::Splitmix64 stream{
      rng::mix(p.seed, std::bit_cast<std::uint64_t>(s.t))};
  return s.ph + p.noise_std * rng::gaussian(stream);
}

PlantState apply_event(const PlantState& s, const PlantParams& p,
                       const Event& e) {
  if (const auto* d = std::get_if<Dilution>(&e)) {
    require(finite(d->fraction) && d->fraction > 0.0 && d->fraction < 1.0,
            "dilution: fraction must be in (0,1)");
    PlantState out = s;
    out.biomass = s.biomass * (1.0 - d->fraction);
    out.ph = s.ph + d->fraction * (p.ph_ambient - s.ph);
    return out;
  }
  // Comms events only toggle the harness's actuator mask.
  return s;
}

namespace {

double half_sine_day(double t, double peak, double sunrise, double sunset) {
  double tod = std::fmod(t, 86400.0);
  if (tod < 0.0) tod += 86400.0;
  if (tod <= sunrise || tod >= sunset) return 0.0;
  constexpr double pi = 3.14159265358979323846;
  return peak * std::sin(pi * (tod - sunrise) / (sunset - sunrise));
}

}  // namespace

double irradiance_profile(double t, const ProfileSpec& profile) {
  return std::visit(
      [t](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, ClearDay>) {
          return half_sine_day(t, spec.peak, spec.sunrise, spec.sunset);
        } else if constexpr (std::is_same_v<T, Cloudy>) {
          double v = half_sine_day(t, spec.peak, spec.sunrise, spec.sunset);
          for (const auto& c : spec.clouds) {
            if (t >= c.t_start && t < c.t_end) v *= (1.0 - c.attenuation);
          }
          return std::max(v, 0.0);
        } else if constexpr (std::is_same_v<T, Constant>) {
          return spec.value;
        } else {
          const auto& rows = spec.rows;
          if (rows.empty()) return 0.0;
          if (t <= rows.front().first) return rows.front().second;
          if (t >= rows.back().first) return rows.back().second;
          auto hi = std::upper_bound(
              rows.begin(), rows.end(), t,
              [](double x, const auto& row) { return x < row.first; });
          auto lo = hi - 1;
          double w = (t - lo->first) / (hi->first - lo->first);
          return lo->second + w * (hi->second - lo->second);
        }
      },
      profile);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("trace: empty file " + path);
  if (line.rfind("t_s,", 0) != 0)
    throw std::runtime_error("trace: expected header t_s,irradiance_wm2 in " +
                             path);
  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double t, irr;
    char comma;
    if (!(row >> t >> comma >> irr) || comma != ',')
      throw std::runtime_error("trace: malformed row '" + line + "' in " +
                               path);
    if (!trace.rows.empty() && t <= trace.rows.back().first)
      throw std::runtime_error("trace: timestamps must strictly increase in " +
                               path);
    trace.rows.emplace_back(t, irr);
  }
  return trace;
}

}  // namespace esctlr::plant_sim
