#include "esctlr/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "esctlr/rng.hpp"

namespace esctlr::harness {

namespace {

struct ControllerRuntime {
  // Only the member matching the scenario's variant is meaningful.
  bool injecting = false;
  esc_core::EscState classic;
  esc_detrend::DetrendState detrend;
};

struct TickOutput {
  double q_cmd = 0.0;
  double theta = 0.0;
  double zeta = 0.0;
  double trend_or_eta = 0.0;
  double q_ff = 0.0;
  bool fault = false;
};

std::string event_label(const plant_sim::Event& e) {
  if (const auto* d = std::get_if<plant_sim::Dilution>(&e)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "dilution(%g)", d->fraction);
    return buf;
  }
  if (std::holds_alternative<plant_sim::CommsFailureStart>(e))
    return "comms_fail_start";
  return "comms_fail_end";
}

}  // namespace

void validate(const Scenario& s) {
  try {
    if (!(s.dt > 0.0)) throw std::invalid_argument("dt_s: must be > 0");
    if (!(s.duration >= s.dt))
      throw std::invalid_argument("duration_s: must be >= dt_s");
    plant_sim::validate(s.plant);
    baseline::validate(s.activation);
    if (s.ph0 && !(*s.ph0 >= s.plant.ph_min && *s.ph0 <= s.plant.ph_max))
      throw std::invalid_argument("plant.ph0: outside [ph_min, ph_max]");
    if (!(s.biomass0 > 0.0))
      throw std::invalid_argument("plant.biomass0_gpl: must be > 0");

    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, OnOffController>) {
            baseline::validate(c.params);
          } else if constexpr (std::is_same_v<T, EscClassicController>) {
            esc_core::validate(c.core);
            if (c.core.dt != s.dt)
              throw std::invalid_argument(
                  "controller: sampling period must equal dt_s");
          } else {
            esc_detrend::validate(c.params);
            if (c.params.core.dt != s.dt)
              throw std::invalid_argument(
                  "controller: sampling period must equal dt_s");
          }
        },
        s.controller);

    if (const auto* clear = std::get_if<plant_sim::ClearDay>(&s.irradiance)) {
      if (!(clear->peak >= 0.0 && clear->sunrise < clear->sunset))
        throw std::invalid_argument(
            "irradiance: need peak >= 0 and sunrise_s < sunset_s");
    }
    if (const auto* cloudy = std::get_if<plant_sim::Cloudy>(&s.irradiance)) {
      if (!(cloudy->peak >= 0.0 && cloudy->sunrise < cloudy->sunset))
        throw std::invalid_argument(
            "irradiance: need peak >= 0 and sunrise_s < sunset_s");
      for (const auto& c : cloudy->clouds)
        if (!(c.attenuation >= 0.0 && c.attenuation <= 1.0 &&
              c.t_start < c.t_end))
          throw std::invalid_argument(
              "irradiance.clouds: need t_start_s < t_end_s and attenuation "
              "in [0,1]");
    }
    if (const auto* constant = std::get_if<plant_sim::Constant>(&s.irradiance)) {
      if (!(constant->value >= 0.0))
        throw std::invalid_argument("irradiance.value_wm2: must be >= 0");
    }

    double prev_t = -1.0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      const auto& ev = s.events[i];
      std::string path = "events[" + std::to_string(i) + "]";
      if (!(ev.t >= 0.0 && ev.t <= s.duration))
        throw std::invalid_argument(path + ".t_s: outside [0, duration_s]");
      if (ev.t < prev_t)
        throw std::invalid_argument(path + ".t_s: events must be sorted by t");
      prev_t = ev.t;
      if (const auto* d = std::get_if<plant_sim::Dilution>(&ev.event))
        if (!(d->fraction > 0.0 && d->fraction < 1.0))
          throw std::invalid_argument(path +
                                      ".fraction: must be in (0,1)");
    }
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
}

RunLog run(const Scenario& scenario) {
  validate(scenario);

  plant_sim::PlantParams plant = scenario.plant;
  plant.seed = scenario.seed;  // one master seed per run
  plant_sim::PlantState state{scenario.ph0.value_or(plant.ph_ambient),
                              scenario.biomass0, 0.0};

  ControllerRuntime ctl;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, EscClassicController>) {
          ctl.classic = esc_core::esc_reset(c.core);
        } else if constexpr (std::is_same_v<T, EscDetrendController>) {
          ctl.detrend = esc_detrend::activation_reset(c.params);
        }
      },
      scenario.controller);

  RunLog log;
  log.controller_id = std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, OnOffController>) return "onoff";
        if constexpr (std::is_same_v<T, EscClassicController>)
          return "esc_classic";
        return "esc_detrend";
      },
      scenario.controller);
  log.scenario_hash = scenario_hash(scenario);
  log.seed = scenario.seed;
  log.version = kVersion;

  auto n_ticks = static_cast<std::size_t>(std::llround(scenario.duration /
                                                       scenario.dt));
  log.rows.reserve(n_ticks + 1);

  bool active = false;
  bool comms_failed = false;
  std::size_t next_event = 0;
  std::map<int, std::pair<double, long>> biomass_accum;  // day -> (sum, n)

  for (std::size_t k = 0; k <= n_ticks; ++k) {
    double t = static_cast<double>(k) * scenario.dt;
    double irr = plant_sim::irradiance_profile(t, scenario.irradiance);

    bool was_active = active;
    active = baseline::activation_step(active, irr, scenario.activation);
    if (active && !was_active) {
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, OnOffController>) {
              ctl.injecting = false;
            } else if constexpr (std::is_same_v<T, EscClassicController>) {
              ctl.classic = esc_core::esc_reset(c.core);
            } else {
              ctl.detrend = esc_detrend::activation_reset(c.params);
            }
          },
          scenario.controller);
    }

    double measured = plant_sim::measure_ph(state, plant);

    TickOutput out;
    if (active) {
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, OnOffController>) {
              baseline::OnOffResult r =
                  baseline::onoff_step(ctl.injecting, measured, c.params);
              ctl.injecting = r.injecting;
              out.q_cmd = r.q_cmd;
              out.fault = r.fault;
            } else if constexpr (std::is_same_v<T, EscClassicController>) {
              double j = std::isfinite(measured)
                             ? esc_core::cost_eval(measured, c.cost)
                             : measured;
              esc_core::StepResult r = esc_core::esc_step(ctl.classic, c.core, j);
              ctl.classic = r.state;
              out.q_cmd = r.u;
              out.theta = r.state.theta_hat;
              out.zeta = r.state.zeta_hat;
              out.trend_or_eta = r.state.eta;
              out.fault = r.state.fault;
            } else {
              esc_detrend::StepResult r = esc_detrend::esc_detrend_step(
                  ctl.detrend, c.params, measured, irr);
              ctl.detrend = r.state;
              out.q_cmd = r.q_cmd;
              out.theta = r.state.core.theta_hat;
              out.zeta = r.state.core.zeta_hat;
              out.trend_or_eta = r.trend;
              out.q_ff = r.q_ff;
              out.fault = r.state.core.fault;
            }
          },
          scenario.controller);
    } else {
      // Controller idle: command zero, report the frozen internals.
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, EscClassicController>) {
              out.theta = ctl.classic.theta_hat;
              out.zeta = ctl.classic.zeta_hat;
              out.trend_or_eta = ctl.classic.eta;
            } else if constexpr (std::is_same_v<T, EscDetrendController>) {
              out.theta = ctl.detrend.core.theta_hat;
              out.zeta = ctl.detrend.core.zeta_hat;
              out.trend_or_eta = ctl.detrend.last_trend;
            }
          },
          scenario.controller);
    }

    double q_applied = comms_failed ? 0.0 : std::max(out.q_cmd, 0.0);

    std::string label;
    while (next_event < scenario.events.size() &&
           scenario.events[next_event].t <= t) {
      const auto& ev = scenario.events[next_event].event;
      state = plant_sim::apply_event(state, plant, ev);
      if (std::holds_alternative<plant_sim::CommsFailureStart>(ev))
        comms_failed = true;
      if (std::holds_alternative<plant_sim::CommsFailureEnd>(ev))
        comms_failed = false;
      if (!label.empty()) label += ';';
      label += event_label(ev);
      ++next_event;
    }

    log.rows.push_back(LogRow{t, irr, measured, out.q_cmd, q_applied, active,
                              out.theta, out.zeta, out.trend_or_eta, out.q_ff,
                              out.fault, label});

    if (active) {
      int day = static_cast<int>(std::floor(t / 86400.0));
      auto& [sum, n] = biomass_accum[day];
      sum += state.biomass;
      ++n;
    }

    if (k < n_ticks)
      state = plant_sim::plant_step(state, plant, q_applied, irr, scenario.dt);
  }

  for (const auto& [day, acc] : biomass_accum)
    log.biomass.x_avg[day] = acc.first / static_cast<double>(acc.second);
  return log;
}

PairResult run_pair(const Scenario& scenario,
                    const baseline::OnOffParams& onoff) {
  if (std::holds_alternative<OnOffController>(scenario.controller))
    throw ScenarioError(
        "controller.type: compare needs an extremum-seeking controller");

  double ph_sp = std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, EscClassicController>)
          return c.cost.ph_sp;
        else if constexpr (std::is_same_v<T, EscDetrendController>)
          return c.params.cost.ph_sp;
        else
          return 8.0;
      },
      scenario.controller);

  PairResult result;
  result.esc = run(scenario);

  Scenario baseline_scenario = scenario;
  baseline_scenario.controller = OnOffController{onoff};
  result.onoff = run(baseline_scenario);

  metrics::ReportOptions opts;
  opts.ph_sp = ph_sp;
  result.report =
      metrics::compare_report(to_samples(result.esc), to_samples(result.onoff),
                              result.esc.biomass, result.onoff.biomass, opts);
  return result;
}

std::vector<metrics::Sample> to_samples(const RunLog& log) {
  std::vector<metrics::Sample> out;
  out.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    out.push_back(metrics::Sample{
        r.t, r.irradiance, r.ph, r.q_applied, r.active,
        static_cast<int>(std::floor(r.t / 86400.0))});
  }
  return out;
}

void write_log_csv(std::ostream& out, const RunLog& log) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "# controller=%s\n# scenario_hash=%016llx\n# seed=%llu\n"
                "# version=%s\n",
                log.controller_id.c_str(),
                static_cast<unsigned long long>(log.scenario_hash),
                static_cast<unsigned long long>(log.seed),
                log.version.c_str());
  out << buf;
  out << "t_s,irradiance_wm2,ph,q_cmd_lpm,q_applied_lpm,active,theta_hat,"
         "zeta_hat,trend_or_eta,q_ff_lpm,fault,event\n";
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof buf,
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%d,%.12g,%.12g,%.12g,%.12g,"
                  "%d,%s\n",
                  r.t, r.irradiance, r.ph, r.q_cmd, r.q_applied,
                  r.active ? 1 : 0, r.theta_hat, r.zeta_hat, r.trend_or_eta,
                  r.q_ff, r.fault ? 1 : 0, r.event.c_str());
    out << buf;
  }
}

RunLog read_log_csv(std::istream& in) {
  RunLog log;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2);
      std::string value = line.substr(eq + 1);
      if (key == "controller") log.controller_id = value;
      if (key == "seed") log.seed = std::stoull(value);
      if (key == "scenario_hash")
        log.scenario_hash = std::stoull(value, nullptr, 16);
      if (key == "version") log.version = value;
      continue;
    }
    if (!header_seen) {
      if (line.rfind("t_s,", 0) != 0)
        throw std::runtime_error("log: unexpected header: " + line);
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    while (cells.size() < 12) cells.emplace_back();  // trailing empty event
    if (cells.size() != 12)
      throw std::runtime_error("log: malformed row: " + line);
    LogRow r;
    r.t = std::stod(cells[0]);
    r.irradiance = std::stod(cells[1]);
    r.ph = std::stod(cells[2]);
    r.q_cmd = std::stod(cells[3]);
    r.q_applied = std::stod(cells[4]);
    r.active = cells[5] == "1";
    r.theta_hat = std::stod(cells[6]);
    r.zeta_hat = std::stod(cells[7]);
    r.trend_or_eta = std::stod(cells[8]);
    r.q_ff = std::stod(cells[9]);
    r.fault = cells[10] == "1";
    r.event = cells[11];
    log.rows.push_back(std::move(r));
  }
  return log;
}

RunLog load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("log: cannot open " + path);
  return read_log_csv(in);
}

}  // namespace esctlr::harness
