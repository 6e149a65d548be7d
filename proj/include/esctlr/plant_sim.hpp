#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

// Surrogate model of a thin-layer photobioreactor's pH loop: CO2 injection
// acidifies, photosynthesis (irradiance x biomass) alkalizes, and the pH
// relaxes first-order toward the resulting equilibrium. The surrogate is a
// test bench for the controllers, not a calibrated chemistry model.
namespace esctlr::plant_sim {

struct PlantParams {
  double tau_ph = 180.0;       // pH relaxation time constant [s]
  double gain_co2 = -0.05;     // equilibrium pH shift per L/min of CO2 (< 0)
  double gain_photo = 6.2e-7;  // pH rise rate per (W/m^2)(g/L) [1/s]
  double mu_max = 2.0e-6;      // max specific growth rate [1/s]
  double k_i = 200.0;          // Monod half-saturation irradiance [W/m^2]
  double ph_ambient = 8.15;    // zero-input equilibrium pH
  double ph_min = 6.0;
  double ph_max = 10.0;
  double noise_std = 0.005;    // measurement noise sigma [pH]
  std::uint64_t seed = 42;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const PlantParams& p);

struct PlantState {
  double ph = 8.15;
  double biomass = 1.5;  // [g/L]
  double t = 0.0;        // seconds since scenario start
};

/// Advances the state by dt holding q_co2 and irradiance constant.
/// pH relaxes exactly (zero-order-hold discretization) toward
/// ph_ambient + gain_co2*q + tau_ph*gain_photo*I*X and is clamped to
/// [ph_min, ph_max]; biomass grows by exp(mu_max * I/(I + k_i) * dt).
PlantState plant_step(const PlantState& s, const PlantParams& p, double q_co2,
                      double irradiance, double dt);

/// Sensor reading: true pH plus seeded Gaussian noise. Pure function of
/// (p.seed, s.t), so trajectories stay noise-free and reruns are identical.
double measure_ph(const PlantState& s, const PlantParams& p);

struct Dilution {
  double fraction = 0.0;  // in (0,1): removed culture share
};
struct CommsFailureStart {};
struct CommsFailureEnd {};
using Event = std::variant<Dilution, CommsFailureStart, CommsFailureEnd>;

/// Dilution scales biomass by (1-f) and blends pH toward ph_ambient with
/// weight f (fresh medium resets chemistry). Comms events leave the plant
/// untouched; the harness owns the actuator-masking flag they toggle.
PlantState apply_event(const PlantState& s, const PlantParams& p,
                       const Event& e);

// --- irradiance profiles ---------------------------------------------------

struct ClearDay {
  double peak = 900.0;      // [W/m^2] at solar noon
  double sunrise = 21600.0; // seconds into the day
  double sunset = 64800.0;
  // half-sine between sunrise and sunset, zero at night, repeats daily
};

struct CloudWindow {
  double t_start = 0.0;
  double t_end = 0.0;        // absolute scenario seconds, [t_start, t_end)
  double attenuation = 0.0;  // in [0,1]: fraction of light removed
};

struct Cloudy {
  double peak = 900.0;
  double sunrise = 21600.0;
  double sunset = 64800.0;
  std::vector<CloudWindow> clouds;
};

struct Constant {
  double value = 0.0;
};

struct Trace {
  // (t_s, irradiance) rows, strictly increasing t; linear interpolation
  // between rows, clamped to the end values outside the covered range.
  std::vector<std::pair<double, double>> rows;
};

using ProfileSpec = std::variant<ClearDay, Cloudy, Constant, Trace>;

double irradiance_profile(double t, const ProfileSpec& profile);

/// Loads a trace CSV (header `t_s,irradiance_wm2`). Throws
/// std::runtime_error on missing file or non-monotonic timestamps.
Trace load_trace(const std::string& path);

}  // namespace esctlr::plant_sim
