#pragma once

#include <cstddef>
#include <deque>
#include <utility>

#include "esctlr/esc_core.hpp"

// The deployed controller variant: the washout high-pass is replaced by a
// moving-window linear-regression detrend (robust to the slow irradiance-
// driven pH drift that biases a plain high-pass), plus an irradiance
// feedforward term, output saturation with anti-windup, and a reset hook
// fired on every activation so no stale samples leak across gaps.
namespace esctlr::esc_detrend {

struct DetrendWindow {
  std::size_t capacity = 0;  // one dither period worth of samples
  std::deque<std::pair<double, double>> buffer;  // (t, j), most-recent-last

  /// Appends a sample, evicting the oldest at capacity. Throws
  /// std::invalid_argument if t does not strictly increase.
  void push(double t, double j);
  void clear() { buffer.clear(); }
  std::size_t filled() const { return buffer.size(); }
};

struct TrendFit {
  double alpha = 0.0;  // fitted line value at the window's mean time
  double beta = 0.0;   // fitted slope
  double t_mean = 0.0;
  bool valid = false;  // false while fewer than 2 samples
};

/// Least-squares line over the window on a centered time axis.
TrendFit trend_line(const DetrendWindow& w);

/// Latest cost minus the fitted line at the latest timestamp; 0 during
/// warm-up (fewer than 2 samples). A pure line yields exactly 0, so linear
/// drift never reaches the demodulator.
double detrend(const DetrendWindow& w);

struct FeedforwardSpec {
  double k_ff = 0.0033;   // L/min per W/m^2
  double q_ff_max = 4.0;  // cap [L/min]
};

struct SaturationSpec {
  double q_min = 0.0;
  double q_max = 8.0;  // matches the on-off baseline's fixed injection rate
};

// Washout mode keeps the classic high-pass inside this variant's plumbing;
// it exists for side-by-side drift studies and the structural regression
// test against the classic core.
enum class ConditioningMode { Regression, Washout };

struct DetrendParams {
  esc_core::EscParams core;
  esc_core::CostSpec cost;
  FeedforwardSpec ff;
  SaturationSpec sat;
  ConditioningMode mode = ConditioningMode::Regression;
  bool reset_to_feedforward = false;  // seed theta from feedforward on the
                                      // first step after a reset
};

void validate(const DetrendParams& p);

struct DetrendState {
  esc_core::EscState core;
  DetrendWindow window;
  bool ff_seed_pending = false;
  double last_q = 0.0;
  double last_trend = 0.0;  // fitted trend (or eta) at the latest sample,
                            // surfaced for logging
};

/// State for a fresh activation: window emptied, zeta 0, theta back to
/// theta_init, phase 0, lazy cost init re-armed.
DetrendState activation_reset(const DetrendParams& p);

struct StepResult {
  DetrendState state;
  double q_cmd = 0.0;
  double q_ff = 0.0;
  double trend = 0.0;
};

/// One step: J = cost(ph); conditioned residual via regression (or washout);
/// demodulate, low-pass, integrate; add dither and feedforward; clamp to
/// [q_min, q_max]. While clamped the integrator holds (anti-windup), the
/// filters keep running. Non-finite inputs hold the last command and flag
/// the fault.
StepResult esc_detrend_step(const DetrendState& s, const DetrendParams& p,
                            double ph, double irradiance);

}  // namespace esctlr::esc_detrend
