#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "esctlr/baseline.hpp"
#include "esctlr/esc_core.hpp"
#include "esctlr/esc_detrend.hpp"
#include "esctlr/metrics.hpp"
#include "esctlr/plant_sim.hpp"

// Scenario-driven closed-loop execution: a fixed-step read-compute-write
// loop over the surrogate plant with irradiance gating, scripted events,
// and a deterministic CSV log per run.
namespace esctlr::harness {

inline constexpr const char* kVersion = "esctlr 0.1.0";

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OnOffController {
  baseline::OnOffParams params;
};

struct EscClassicController {
  esc_core::EscParams core;
  esc_core::CostSpec cost;
};

struct EscDetrendController {
  esc_detrend::DetrendParams params;
};

using ControllerSpec =
    std::variant<OnOffController, EscClassicController, EscDetrendController>;

struct TimedEvent {
  double t = 0.0;
  plant_sim::Event event;
};

struct Scenario {
  double duration = 259200.0;  // [s]; default three days
  double dt = 10.0;
  std::uint64_t seed = 42;
  plant_sim::ProfileSpec irradiance = plant_sim::ClearDay{};
  plant_sim::PlantParams plant;
  std::optional<double> ph0;   // initial pH; defaults to ph_ambient
  double biomass0 = 1.5;       // [g/L]
  ControllerSpec controller = EscDetrendController{};
  baseline::ActivationParams activation;
  std::vector<TimedEvent> events;  // sorted by t, within [0, duration]
};

/// Validates the whole tree; ScenarioError messages carry the field path
/// (e.g. "plant.tau_ph_s: must be > 0").
void validate(const Scenario& s);

struct LogRow {
  double t = 0.0;
  double irradiance = 0.0;
  double ph = 0.0;        // the measurement the controller saw
  double q_cmd = 0.0;     // controller output
  double q_applied = 0.0; // after comms masking / nonnegativity
  bool active = false;
  double theta_hat = 0.0;
  double zeta_hat = 0.0;
  double trend_or_eta = 0.0;  // fitted trend (regression) or eta (washout)
  double q_ff = 0.0;
  bool fault = false;
  std::string event;  // labels fired this tick, ";"-joined
};

struct RunLog {
  std::string controller_id;  // "onoff" | "esc_classic" | "esc_detrend"
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<LogRow> rows;   // exactly duration/dt + 1 rows
  metrics::BiomassSeries biomass;  // per-day averages over active samples
};

/// Executes the scenario. Tick order: irradiance, activation hysteresis
/// (controller reset on the rising edge), controller command (0 when
/// inactive), comms masking, scheduled events (fired at the first tick at or
/// after their timestamp), row snapshot, plant step.
RunLog run(const Scenario& scenario);

struct PairResult {
  RunLog esc;
  RunLog onoff;
  metrics::MetricsReport report;
};

/// Runs the scenario's ESC controller and an on-off baseline against the
/// identical plant, seed, irradiance, and events, then compares.
PairResult run_pair(const Scenario& scenario,
                    const baseline::OnOffParams& onoff = {});

// --- log serialization -------------------------------------------------------

/// Writes `# key=value` metadata lines followed by the fixed column set
/// t_s,irradiance_wm2,ph,q_cmd_lpm,q_applied_lpm,active,theta_hat,zeta_hat,
/// trend_or_eta,q_ff_lpm,fault,event. Deterministic: same scenario + seed
/// gives byte-identical output.
void write_log_csv(std::ostream& out, const RunLog& log);

RunLog read_log_csv(std::istream& in);
RunLog load_log(const std::string& path);

/// Metric samples from a run log: q = applied flow, day = floor(t/86400).
std::vector<metrics::Sample> to_samples(const RunLog& log);

// --- scenario files ----------------------------------------------------------

/// Parses scenario JSON (see docs/scenario-schema.md). Unknown keys and type
/// mismatches raise ScenarioError with the JSON path.
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);
Scenario load_scenario(const std::string& path);

/// FNV-1a over the canonical JSON form; logged so a log file can be traced
/// back to the exact configuration that produced it.
std::uint64_t scenario_hash(const Scenario& s);

/// Baseline on-off parameters that accompany a scenario in `compare` runs
/// (the optional "baseline" object in the scenario file).
baseline::OnOffParams baseline_from_json_text(const std::string& text);

int cli(int argc, const char* const* argv);

}  // namespace esctlr::harness
