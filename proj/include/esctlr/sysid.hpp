#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "esctlr/plant_sim.hpp"

// Sinusoidal-excitation characterization: drive the plant with fixed-period
// CO2 sinusoids, fit input and output, and report per-period gain and phase
// so a dither period can be chosen where the loop still responds usefully.
namespace esctlr::sysid {

struct ExcitationSpec {
  std::vector<double> periods{300.0, 600.0, 900.0, 1200.0};  // [s]
  double amplitude = 1.0;  // [L/min]
  double bias = 4.0;       // [L/min]; bias - amplitude must stay >= 0
  int cycles_per_period = 4;  // first cycle discarded as transient
};

void validate(const ExcitationSpec& spec);

struct SinusoidFit {
  double amplitude = 0.0;
  double phase = 0.0;   // radians, referenced to t = 0
  double offset = 0.0;  // value of the non-periodic part at t = 0
  double slope = 0.0;   // linear drift absorbed by the fit
  double rms = 0.0;     // residual RMS
};

/// Least-squares fit y ~ offset + slope*t + A sin(wt) + B cos(wt).
/// The slope term keeps slow drift out of the amplitude estimate.
/// Requires >= 6 samples spanning at least one period; throws
/// std::invalid_argument otherwise.
SinusoidFit fit_sinusoid(const std::vector<std::pair<double, double>>& samples,
                         double omega);

struct FreqResponse {
  double period = 0.0;     // [s]
  double gain = 0.0;       // signed: output amplitude / input amplitude,
                           // negative when the response opposes the input
  double phase_deg = 0.0;  // output phase minus input phase, in (-180, 180]
  double fit_residual_rms = 0.0;
  double snr = 0.0;        // (output amplitude / sqrt(2)) / residual RMS
  bool reliable = false;   // snr >= 2; below that the fitted gain is noise
};

struct LogSample {
  double t = 0.0;
  double q = 0.0;
  double ph = 0.0;
};

/// Offline characterization of a recorded excitation run. The log must hold
/// the back-to-back per-period segments in spec order (each segment
/// cycles_per_period * period long); the first cycle of each segment is
/// discarded before fitting.
std::vector<FreqResponse> characterize(const std::vector<LogSample>& log,
                                       const ExcitationSpec& spec);

/// Drives the surrogate plant itself (open loop, activation ignored):
/// q(t) = bias + amplitude*sin(2*pi*t/period) per segment, irradiance from
/// the profile, then fits as above.
std::vector<FreqResponse> characterize(const plant_sim::PlantParams& plant,
                                       const plant_sim::PlantState& initial,
                                       const plant_sim::ProfileSpec& irradiance,
                                       const ExcitationSpec& spec, double dt);

struct DitherCriteria {
  double gain_fraction = 0.5;    // of the largest reliable |gain|
  double max_lag_deg = 60.0;     // allowed lag from the phase reference
  double phase_reference_deg = 180.0;  // negative-gain loop reference
};

/// Shortest period whose reliable response passes both thresholds; empty
/// optional when none passes ("no admissible dither"). Throws
/// std::invalid_argument when fewer than 2 responses are reliable.
std::optional<double> recommend_dither(const std::vector<FreqResponse>& rs,
                                       const DitherCriteria& c);

/// CSV report: period_s,gain,phase_deg,rms,reliable
void write_report_csv(std::ostream& out, const std::vector<FreqResponse>& rs);

/// Reads an excitation log CSV. Accepts either the minimal
/// `t_s,q_co2_lpm,ph` layout or a full run log (uses q_applied_lpm).
std::vector<LogSample> load_log_csv(const std::string& path);

}  // namespace esctlr::sysid
