#pragma once

#include <numbers>

// Classical modulation-demodulation extremum seeking: a sinusoidal dither
// probes the cost surface, the washout high-pass strips the DC component,
// demodulation against the same sinusoid recovers a gradient-proportional
// signal, and an integrator walks the operating point down the cost.
namespace esctlr::esc_core {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class CostForm { SquaredError, AbsError };

struct CostSpec {
  double ph_sp = 8.0;
  CostForm form = CostForm::SquaredError;
};

/// (ph - sp)^2 or |ph - sp|; throws std::invalid_argument on non-finite ph.
double cost_eval(double ph, const CostSpec& spec);

struct EscParams {
  double a = 1.0;                        // dither amplitude [L/min]
  double omega_d = kTwoPi / 900.0;       // dither frequency [rad/s]
  double omega_l = kTwoPi / 900.0 / 3.0; // demod low-pass cutoff [rad/s]
  double omega_h = kTwoPi / 900.0 / 5.0; // washout cutoff [rad/s]
  double k = -0.4;                       // adaptation gain; < 0 descends the
                                         // cost here because zeta tracks
                                         // (a^2/2) * dJ/dtheta
  double theta_init = 1.0;               // [L/min]
  double dt = 10.0;                      // sampling period [s]
};

/// Throws std::invalid_argument naming the violated constraint
/// (a > 0, 0 < omega_l < omega_d, 0 < omega_h < omega_d, dt*omega_d < pi, ...).
void validate(const EscParams& p);

struct EscState {
  double theta_hat = 0.0;  // operating-point estimate [L/min]
  double zeta_hat = 0.0;   // low-passed demodulated gradient estimate
  double eta = 0.0;        // low-pass cost estimate (washout reference)
  double phase = 0.0;      // dither phase accumulator, wrapped to [0, 2pi)
  double t = 0.0;          // controller-local time, advances dt per step
  bool eta_primed = false; // lazy init: eta snaps to the first cost seen
  double last_u = 0.0;     // held output for the non-finite-input fail-safe
  bool fault = false;
};

/// Fresh state: theta_hat = theta_init, phase 0 (so the first output is
/// exactly theta_init), eta unprimed.
EscState esc_reset(const EscParams& p);

struct StepResult {
  EscState state;
  double u = 0.0;  // commanded operating point + dither [L/min]
};

/// One controller step given the measured cost j. Non-finite j leaves the
/// state unchanged (except the fault flag) and repeats the last output.
StepResult esc_step(const EscState& s, const EscParams& p, double j);

// Shared demod/integrate arithmetic, split out so the detrending variant
// can reproduce this exact float-op sequence (its washout mode must match
// esc_step bit-for-bit when feedforward and saturation are neutralized).
struct CoreUpdate {
  double sin_phase;
  double zeta_next;
  double theta_candidate;
};

CoreUpdate demod_update(const EscState& s, const EscParams& p,
                        double conditioned_j);

/// Washout high-pass: returns j - eta and advances eta toward j with the
/// exact first-order coefficient 1 - exp(-omega_h*dt). Primes eta to j on
/// first use so startup sees no spurious transient.
double washout_highpass(double j, const EscParams& p, double& eta,
                        bool& eta_primed);

inline double wrap_phase(double phase) {
  while (phase >= kTwoPi) phase -= kTwoPi;
  while (phase < 0.0) phase += kTwoPi;
  return phase;
}

}  // namespace esctlr::esc_core
