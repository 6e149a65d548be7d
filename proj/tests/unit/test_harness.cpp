#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "esctlr/harness.hpp"

using namespace esctlr;
using namespace esctlr::harness;

namespace {

// The headline scenario: three clear days over the surrogate plant with the
// trend-aware seeking controller. `events` is spliced into the JSON verbatim.
std::string three_day_json(double duration_s, const std::string& events) {
  std::ostringstream out;
  out << R"({
  "duration_s": )" << duration_s << R"(,
  "dt_s": 10,
  "seed": 42,
  "irradiance": {"type": "clear_day", "peak_wm2": 900,
                 "sunrise_s": 21600, "sunset_s": 64800},
  "plant": {"tau_ph_s": 180, "gain_co2": -0.05, "gain_photo": 6.2e-7,
            "mu_max": 2e-6, "k_i_wm2": 200, "ph_ambient": 8.15,
            "noise_std": 0.005, "biomass0_gpl": 1.5},
  "activation": {"i_on_wm2": 100, "i_off_wm2": 20},
  "controller": {"type": "esc_detrend", "k": -0.4, "a_lpm": 1.0,
                 "dither_period_s": 900, "theta_init_lpm": 1.0,
                 "cost": {"ph_sp": 8.0, "form": "squared_error"},
                 "feedforward": {"k_ff": 0.0033, "q_ff_max_lpm": 4.0},
                 "saturation": {"q_min_lpm": 0.0, "q_max_lpm": 8.0},
                 "conditioning": "regression"},
  "events": [)" << events
      << "]}";
  return out.str();
}

// Short constant-light scenario with the relay controller and no measurement
// noise, for tests that pin exact applied-flow values.
std::string relay_json(double duration_s, const std::string& events) {
  std::ostringstream out;
  out << R"({
  "duration_s": )" << duration_s << R"(,
  "dt_s": 10,
  "seed": 1,
  "irradiance": {"type": "constant", "value_wm2": 500},
  "plant": {"ph_ambient": 8.15, "noise_std": 0, "biomass0_gpl": 1.5},
  "activation": {"i_on_wm2": 100, "i_off_wm2": 20},
  "controller": {"type": "onoff", "ph_sp": 8.0, "band": 0.1, "q_on_lpm": 8.0},
  "events": [)" << events
      << "]}";
  return out.str();
}

RunLog run_json(const std::string& text) {
  return run(scenario_from_json_text(text));
}

const LogRow& row_at(const RunLog& log, double t) {
  for (const auto& r : log.rows)
    if (r.t == t) return r;
  throw std::runtime_error("no row at requested time");
}

}  // namespace

TEST_CASE("a run emits duration/dt + 1 rows with the run's identity") {
  Scenario s = scenario_from_json_text(relay_json(60.0, ""));
  RunLog log = run(s);
  REQUIRE(log.rows.size() == 7);
  for (std::size_t i = 0; i < log.rows.size(); ++i)
    CHECK(log.rows[i].t == doctest::Approx(10.0 * i));
  CHECK(log.controller_id == "onoff");
  CHECK(log.seed == 1);
  CHECK(log.version == kVersion);
  CHECK(log.scenario_hash == scenario_hash(s));
  // Noise-free start: the first measurement is the ambient initial pH.
  CHECK(log.rows[0].ph == doctest::Approx(8.15));
}

TEST_CASE("ph0 overrides the ambient-start default") {
  std::string text = relay_json(60.0, "");
  auto pos = text.find("\"ph_ambient\": 8.15,");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "\"ph0\": 7.9, ");
  RunLog log = run_json(text);
  CHECK(log.rows[0].ph == doctest::Approx(7.9));
}

TEST_CASE("nothing is injected while the light stays below the gate") {
  std::string text = relay_json(600.0, "");
  auto pos = text.find("\"value_wm2\": 500");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"value_wm2\": 500").size(),
               "\"value_wm2\": 0");
  RunLog log = run_json(text);
  for (const auto& r : log.rows) {
    CHECK_FALSE(r.active);
    CHECK(r.q_cmd == 0.0);
    CHECK(r.q_applied == 0.0);
  }
  // No active samples means no biomass rows and an all-zero report that says
  // why instead of failing.
  CHECK(log.biomass.x_avg.empty());
  metrics::MetricsReport rep =
      metrics::single_report(to_samples(log), log.biomass);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].co2.a.value() == 0.0);
  CHECK(rep.rows[0].iae.a.value() == 0.0);
  CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("scenario JSON round trips to the same canonical form and hash") {
  Scenario s = scenario_from_json_text(three_day_json(259200.0, ""));
  std::string text = scenario_to_json_text(s);
  Scenario back = scenario_from_json_text(text);
  CHECK(scenario_to_json_text(back) == text);
  CHECK(scenario_hash(back) == scenario_hash(s));

  Scenario reseeded = s;
  reseeded.seed = 43;
  CHECK(scenario_hash(reseeded) != scenario_hash(s));
}

TEST_CASE("scenario validation names the offending field") {
  auto mutate = [](const std::string& from, const std::string& to) {
    std::string text = three_day_json(259200.0, "");
    auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    return text;
  };

  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(mutate("\"tau_ph_s\": 180", "\"tau_ph_s\": -1")),
      "plant: tau_ph must be > 0", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(mutate("\"q_min_lpm\": 0.0, \"q_max_lpm\": 8.0",
                                     "\"q_min_lpm\": 9.0, \"q_max_lpm\": 8.0")),
      "saturation: need 0 <= q_min < q_max", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(mutate("\"tau_ph_s\": 180", "\"bogus\": 180")),
      "plant.bogus: unknown key", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(mutate("\"seed\": 42", "\"seed\": -5")),
      "seed: expected an unsigned integer", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(mutate("\"type\": \"clear_day\"",
                                     "\"type\": \"starlight\"")),
      "irradiance.type: expected clear_day, cloudy, constant or trace",
      ScenarioError);

  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(three_day_json(
          259200.0, R"({"t_s": 1000, "type": "dilution", "fraction": 1.5})")),
      "events[0].fraction: must be in (0,1)", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(three_day_json(
          259200.0,
          R"({"t_s": 2000, "type": "comms_fail_start"},
             {"t_s": 1000, "type": "comms_fail_end"})")),
      "events[1].t_s: events must be sorted by t", ScenarioError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json_text(three_day_json(
          259200.0, R"({"t_s": 300000, "type": "comms_fail_start"})")),
      "events[0].t_s: outside [0, duration_s]", ScenarioError);

  CHECK_THROWS_AS(scenario_from_json_text("not json at all"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("no_such_scenario.json"), ScenarioError);

  // The controller must run on the scenario's grid; the parser guarantees
  // this, so only a hand-mutated struct can get it wrong.
  Scenario s = scenario_from_json_text(three_day_json(259200.0, ""));
  std::get<EscDetrendController>(s.controller).params.core.dt = 5.0;
  CHECK_THROWS_WITH_AS(validate(s),
                       "controller: sampling period must equal dt_s",
                       ScenarioError);
}

TEST_CASE("the same scenario always produces byte-identical logs") {
  std::string text = three_day_json(86400.0, "");
  std::ostringstream first, second;
  write_log_csv(first, run_json(text));
  write_log_csv(second, run_json(text));
  CHECK(first.str().rfind("# controller=esc_detrend\n", 0) == 0);
  bool identical = first.str() == second.str();
  CHECK(identical);
}

TEST_CASE("a comms failure masks the applied flow, not the command") {
  // 500 s keeps the whole run above the relay's lower threshold (the masked
  // stretch lets pH drift up, and the post-mask decay needs ~280 s to reach
  // 7.9), so the commanded flow stays pinned at 8 while the mask moves.
  RunLog log = run_json(
      relay_json(500.0, R"({"t_s": 100, "type": "comms_fail_start"},
                           {"t_s": 300, "type": "comms_fail_end"})"));
  for (const auto& r : log.rows) {
    CHECK(r.active);
    CHECK(r.q_cmd == 8.0);
  }
  // An event at t acts on the next tick's applied flow: the row that carries
  // the start label still shows the unmasked value.
  CHECK(row_at(log, 100.0).event == "comms_fail_start");
  CHECK(row_at(log, 100.0).q_applied == 8.0);
  for (double t = 110.0; t <= 300.0; t += 10.0)
    CHECK(row_at(log, t).q_applied == 0.0);
  CHECK(row_at(log, 300.0).event == "comms_fail_end");
  CHECK(row_at(log, 310.0).q_applied == 8.0);
}

TEST_CASE("a scheduled event fires at the first tick at or after its time") {
  RunLog log = run_json(relay_json(
      600.0, R"({"t_s": 95, "type": "dilution", "fraction": 0.5})"));
  int labeled = 0;
  for (const auto& r : log.rows)
    if (!r.event.empty()) {
      ++labeled;
      CHECK(r.t == 100.0);
      CHECK(r.event == "dilution(0.5)");
    }
  CHECK(labeled == 1);
}

TEST_CASE("paired runs share irradiance, events, and gating exactly") {
  Scenario s = scenario_from_json_text(three_day_json(
      86400.0, R"({"t_s": 43200, "type": "dilution", "fraction": 0.3},
                  {"t_s": 46800, "type": "comms_fail_start"},
                  {"t_s": 48600, "type": "comms_fail_end"})"));
  baseline::OnOffParams relay;
  relay.ph_sp = 8.0;
  relay.band = 0.1;
  relay.q_on = 8.0;
  PairResult pair = run_pair(s, relay);

  CHECK(pair.esc.controller_id == "esc_detrend");
  CHECK(pair.onoff.controller_id == "onoff");
  REQUIRE(pair.esc.rows.size() == pair.onoff.rows.size());
  int mismatches = 0;
  for (std::size_t i = 0; i < pair.esc.rows.size(); ++i) {
    const LogRow& a = pair.esc.rows[i];
    const LogRow& b = pair.onoff.rows[i];
    if (a.irradiance != b.irradiance || a.event != b.event ||
        a.active != b.active)
      ++mismatches;
  }
  CHECK(mismatches == 0);
  // One day plus the aggregate.
  REQUIRE(pair.report.rows.size() == 2);
  CHECK(pair.report.rows[0].label == "day 0");
  CHECK(pair.report.rows[1].label == "total/mean");

  Scenario relay_only = s;
  relay_only.controller = OnOffController{relay};
  CHECK_THROWS_WITH_AS(
      run_pair(relay_only),
      "controller.type: compare needs an extremum-seeking controller",
      ScenarioError);
}

TEST_CASE("three clear days hold pH inside the operating band") {
  RunLog log = run_json(three_day_json(259200.0, ""));

  // First activation instant of each day.
  std::map<int, double> first_active;
  bool prev = false;
  for (const auto& r : log.rows) {
    int day = static_cast<int>(std::floor(r.t / 86400.0));
    if (r.active && !prev && first_active.count(day) == 0)
      first_active[day] = r.t;
    prev = r.active;
  }
  REQUIRE(first_active.size() == 3);

  // After the first dither period of each day the loop must hold the band.
  int violations = 0;
  double worst = 8.0;
  for (const auto& r : log.rows) {
    if (!r.active) continue;
    int day = static_cast<int>(std::floor(r.t / 86400.0));
    if (r.t < first_active[day] + 900.0) continue;
    if (r.ph < 7.7 || r.ph > 8.3) ++violations;
    if (std::abs(r.ph - 8.0) > std::abs(worst - 8.0)) worst = r.ph;
  }
  CHECK_MESSAGE(violations == 0, "worst settled pH was ", worst);

  // Steady light and no setbacks: the culture should thicken day over day.
  REQUIRE(log.biomass.x_avg.size() == 3);
  CHECK(log.biomass.x_avg.at(1) > log.biomass.x_avg.at(0));
  CHECK(log.biomass.x_avg.at(2) > log.biomass.x_avg.at(1));
}

TEST_CASE("the seeking loop reabsorbs a deep mid-day dilution") {
  // 70% of the culture replaced at noon of day 2 while the controller is
  // mid-hunt; the loop must pull pH back within 0.15 of the setpoint inside
  // 90 minutes and keep it there for the rest of the light window.
  const double t_event = 129600.0;
  RunLog log = run_json(three_day_json(
      259200.0,
      R"({"t_s": 129600, "type": "dilution", "fraction": 0.7})"));

  bool disturbed = false;
  for (const auto& r : log.rows)
    if (r.t > t_event && r.t <= t_event + 1800.0)
      disturbed = disturbed || std::abs(r.ph - 8.0) > 0.05;
  CHECK(disturbed);

  int late_violations = 0;
  double worst = 8.0;
  for (const auto& r : log.rows) {
    if (!r.active || r.t < t_event + 5400.0 || r.t > 151200.0) continue;
    if (std::abs(r.ph - 8.0) > 0.15) ++late_violations;
    if (std::abs(r.ph - 8.0) > std::abs(worst - 8.0)) worst = r.ph;
  }
  CHECK_MESSAGE(late_violations == 0, "worst post-recovery pH was ", worst);

  // The wash-out shows up in the biomass ledger.
  REQUIRE(log.biomass.x_avg.size() == 3);
  CHECK(log.biomass.x_avg.at(1) < log.biomass.x_avg.at(0));
}

TEST_CASE("run logs survive the CSV round trip") {
  RunLog log = run_json(three_day_json(3600.0, ""));
  std::ostringstream out;
  write_log_csv(out, log);
  std::istringstream in(out.str());
  RunLog back = read_log_csv(in);

  CHECK(back.controller_id == log.controller_id);
  CHECK(back.scenario_hash == log.scenario_hash);
  CHECK(back.seed == log.seed);
  CHECK(back.version == log.version);
  REQUIRE(back.rows.size() == log.rows.size());
  for (std::size_t i = 0; i < log.rows.size(); i += 37) {
    const LogRow& a = log.rows[i];
    const LogRow& b = back.rows[i];
    CHECK(b.t == doctest::Approx(a.t).epsilon(1e-10));
    CHECK(b.ph == doctest::Approx(a.ph).epsilon(1e-10));
    CHECK(b.q_cmd == doctest::Approx(a.q_cmd).epsilon(1e-10));
    CHECK(b.q_applied == doctest::Approx(a.q_applied).epsilon(1e-10));
    CHECK(b.theta_hat == doctest::Approx(a.theta_hat).epsilon(1e-10));
    CHECK(b.active == a.active);
    CHECK(b.fault == a.fault);
    CHECK(b.event == a.event);
  }

  // Metric samples take the applied flow, gated rows keep their day index.
  auto samples = to_samples(back);
  REQUIRE(samples.size() == back.rows.size());
  for (std::size_t i = 0; i < samples.size(); i += 53) {
    CHECK(samples[i].q == back.rows[i].q_applied);
    CHECK(samples[i].day_index ==
          static_cast<int>(std::floor(back.rows[i].t / 86400.0)));
  }

  std::istringstream junk("nonsense\n1,2\n");
  CHECK_THROWS_AS(read_log_csv(junk), std::runtime_error);
  CHECK_THROWS_AS(load_log("no_such_log.csv"), std::runtime_error);
}
