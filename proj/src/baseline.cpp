#include "esctlr/baseline.hpp"

#include <cmath>
#include <stdexcept>

namespace esctlr::baseline {

void validate(const OnOffParams& p) {
  if (!(std::isfinite(p.band) && p.band > 0.0))
    throw std::invalid_argument("onoff: band must be > 0");
  if (!(std::isfinite(p.q_on) && p.q_on > 0.0))
    throw std::invalid_argument("onoff: q_on must be > 0");
  if (!std::isfinite(p.ph_sp))
    throw std::invalid_argument("onoff: ph_sp must be finite");
}

OnOffResult onoff_step(bool injecting, double ph, const OnOffParams& p) {
  if (!std::isfinite(ph)) {
    return OnOffResult{injecting, injecting ? p.q_on : 0.0, true};
  }
  // Strict inequalities: values exactly on a threshold keep the prior state.
  if (ph > p.ph_sp + p.band) {
    injecting = true;
  } else if (ph < p.ph_sp - p.band) {
    injecting = false;
  }
  return OnOffResult{injecting, injecting ? p.q_on : 0.0, false};
}

void validate(const ActivationParams& p) {
  if (!(std::isfinite(p.i_on) && std::isfinite(p.i_off) && p.i_off < p.i_on))
    throw std::invalid_argument("activation: need i_off < i_on");
}

bool activation_step(bool active, double irradiance,
                     const ActivationParams& p) {
  if (irradiance > p.i_on) return true;
  if (irradiance < p.i_off) return false;
  return active;
}

}  // namespace esctlr::baseline
