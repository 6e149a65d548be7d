#pragma once

// The conventional on-off pH controller used as the comparison baseline,
// and the irradiance activation gate shared by every controller.
namespace esctlr::baseline {

struct OnOffParams {
  double ph_sp = 8.0;
  double band = 0.1;   // hysteresis half-width
  double q_on = 8.0;   // fixed injection rate while on [L/min]
};

void validate(const OnOffParams& p);

struct OnOffResult {
  bool injecting = false;
  double q_cmd = 0.0;
  bool fault = false;
};

/// Relay with hysteresis: injection starts strictly above sp + band, stops
/// strictly below sp - band, and holds inside the band. Non-finite ph holds
/// the previous state and flags the fault.
OnOffResult onoff_step(bool injecting, double ph, const OnOffParams& p);

struct ActivationParams {
  double i_on = 100.0;  // [W/m^2]
  double i_off = 20.0;
};

void validate(const ActivationParams& p);

/// Irradiance hysteresis defining the active control windows: enables
/// strictly above i_on, disables strictly below i_off, holds in between.
bool activation_step(bool active, double irradiance, const ActivationParams& p);

}  // namespace esctlr::baseline
