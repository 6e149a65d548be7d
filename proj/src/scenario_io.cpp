#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "esctlr/harness.hpp"
#include "esctlr/rng.hpp"
#include "json.hpp"

// Scenario file parsing and canonical serialization. Parsing is strict:
// unknown keys, wrong types, and malformed values all raise ScenarioError
// carrying the JSON path, so a typo like "dither_period" never silently
// falls back to a default.
namespace esctlr::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double num_or(const json& obj, const std::string& path, const char* key,
              double def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  return as_num(*it, path + "." + key);
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string str_at(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required key");
  if (!it->is_string()) fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

plant_sim::ProfileSpec parse_irradiance(const json& j,
                                        const std::string& path) {
  require_object(j, path);
  std::string type = str_at(j, path, "type");
  if (type == "clear_day") {
    check_keys(j, path, {"type", "peak_wm2", "sunrise_s", "sunset_s"});
    plant_sim::ClearDay p;
    p.peak = num_or(j, path, "peak_wm2", p.peak);
    p.sunrise = num_or(j, path, "sunrise_s", p.sunrise);
    p.sunset = num_or(j, path, "sunset_s", p.sunset);
    return p;
  }
  if (type == "cloudy") {
    check_keys(j, path, {"type", "peak_wm2", "sunrise_s", "sunset_s", "clouds"});
    plant_sim::Cloudy p;
    p.peak = num_or(j, path, "peak_wm2", p.peak);
    p.sunrise = num_or(j, path, "sunrise_s", p.sunrise);
    p.sunset = num_or(j, path, "sunset_s", p.sunset);
    auto it = j.find("clouds");
    if (it != j.end()) {
      if (!it->is_array()) fail(path + ".clouds", "expected an array");
      for (std::size_t i = 0; i < it->size(); ++i) {
        std::string cp = path + ".clouds[" + std::to_string(i) + "]";
        const json& c = (*it)[i];
        require_object(c, cp);
        check_keys(c, cp, {"t_start_s", "t_end_s", "attenuation"});
        plant_sim::CloudWindow w;
        w.t_start = num_or(c, cp, "t_start_s", 0.0);
        w.t_end = num_or(c, cp, "t_end_s", 0.0);
        w.attenuation = num_or(c, cp, "attenuation", 0.0);
        p.clouds.push_back(w);
      }
    }
    return p;
  }
  if (type == "constant") {
    check_keys(j, path, {"type", "value_wm2"});
    plant_sim::Constant p;
    p.value = num_or(j, path, "value_wm2", p.value);
    return p;
  }
  if (type == "trace") {
    check_keys(j, path, {"type", "file", "points"});
    if (j.contains("file") && j.contains("points"))
      fail(path, "give either file or points, not both");
    if (j.contains("file")) {
      try {
        return plant_sim::load_trace(str_at(j, path, "file"));
      } catch (const std::runtime_error& e) {
        fail(path + ".file", e.what());
      }
    }
    auto it = j.find("points");
    if (it == j.end()) fail(path, "trace needs file or points");
    if (!it->is_array()) fail(path + ".points", "expected an array");
    plant_sim::Trace tr;
    for (std::size_t i = 0; i < it->size(); ++i) {
      std::string pp = path + ".points[" + std::to_string(i) + "]";
      const json& pt = (*it)[i];
      if (!pt.is_array() || pt.size() != 2)
        fail(pp, "expected a [t_s, irradiance_wm2] pair");
      tr.rows.emplace_back(as_num(pt[0], pp + "[0]"), as_num(pt[1], pp + "[1]"));
    }
    return tr;
  }
  fail(path + ".type", "expected clear_day, cloudy, constant or trace");
}

esc_core::CostSpec parse_cost(const json& j, const std::string& path) {
  require_object(j, path);
  check_keys(j, path, {"ph_sp", "form"});
  esc_core::CostSpec c;
  c.ph_sp = num_or(j, path, "ph_sp", c.ph_sp);
  if (j.contains("form")) {
    std::string form = str_at(j, path, "form");
    if (form == "squared_error")
      c.form = esc_core::CostForm::SquaredError;
    else if (form == "abs_error")
      c.form = esc_core::CostForm::AbsError;
    else
      fail(path + ".form", "expected squared_error or abs_error");
  }
  return c;
}

// Shared by the classic and detrending variants; the dither frequency can be
// given either as a period or directly in rad/s.
esc_core::EscParams parse_core(const json& j, const std::string& path,
                               double dt) {
  esc_core::EscParams core;
  core.dt = dt;
  if (j.contains("dither_period_s") && j.contains("omega_d_rps"))
    fail(path, "give either dither_period_s or omega_d_rps, not both");
  if (j.contains("dither_period_s")) {
    double period = as_num(j.at("dither_period_s"), path + ".dither_period_s");
    if (!(period > 0.0)) fail(path + ".dither_period_s", "must be > 0");
    core.omega_d = esc_core::kTwoPi / period;
  } else if (j.contains("omega_d_rps")) {
    core.omega_d = as_num(j.at("omega_d_rps"), path + ".omega_d_rps");
  }
  core.omega_l = num_or(j, path, "omega_l_rps", core.omega_d / 3.0);
  core.omega_h = num_or(j, path, "omega_h_rps", core.omega_d / 5.0);
  core.a = num_or(j, path, "a_lpm", core.a);
  core.k = num_or(j, path, "k", core.k);
  core.theta_init = num_or(j, path, "theta_init_lpm", core.theta_init);
  return core;
}

ControllerSpec parse_controller(const json& j, const std::string& path,
                                double dt) {
  require_object(j, path);
  std::string type = str_at(j, path, "type");
  if (type == "onoff") {
    check_keys(j, path, {"type", "ph_sp", "band", "q_on_lpm"});
    baseline::OnOffParams p;
    p.ph_sp = num_or(j, path, "ph_sp", p.ph_sp);
    p.band = num_or(j, path, "band", p.band);
    p.q_on = num_or(j, path, "q_on_lpm", p.q_on);
    return OnOffController{p};
  }
  if (type == "esc_classic") {
    check_keys(j, path,
               {"type", "k", "a_lpm", "dither_period_s", "omega_d_rps",
                "omega_l_rps", "omega_h_rps", "theta_init_lpm", "cost"});
    EscClassicController c;
    c.core = parse_core(j, path, dt);
    if (j.contains("cost")) c.cost = parse_cost(j.at("cost"), path + ".cost");
    return c;
  }
  if (type == "esc_detrend") {
    check_keys(j, path,
               {"type", "k", "a_lpm", "dither_period_s", "omega_d_rps",
                "omega_l_rps", "omega_h_rps", "theta_init_lpm", "cost",
                "feedforward", "saturation", "conditioning",
                "reset_to_feedforward"});
    EscDetrendController c;
    c.params.core = parse_core(j, path, dt);
    if (j.contains("cost"))
      c.params.cost = parse_cost(j.at("cost"), path + ".cost");
    if (j.contains("feedforward")) {
      const json& ff = j.at("feedforward");
      std::string fp = path + ".feedforward";
      require_object(ff, fp);
      check_keys(ff, fp, {"k_ff", "q_ff_max_lpm"});
      c.params.ff.k_ff = num_or(ff, fp, "k_ff", c.params.ff.k_ff);
      c.params.ff.q_ff_max = num_or(ff, fp, "q_ff_max_lpm", c.params.ff.q_ff_max);
    }
    if (j.contains("saturation")) {
      const json& sat = j.at("saturation");
      std::string sp = path + ".saturation";
      require_object(sat, sp);
      check_keys(sat, sp, {"q_min_lpm", "q_max_lpm"});
      c.params.sat.q_min = num_or(sat, sp, "q_min_lpm", c.params.sat.q_min);
      c.params.sat.q_max = num_or(sat, sp, "q_max_lpm", c.params.sat.q_max);
    }
    if (j.contains("conditioning")) {
      std::string mode = str_at(j, path, "conditioning");
      if (mode == "regression")
        c.params.mode = esc_detrend::ConditioningMode::Regression;
      else if (mode == "washout")
        c.params.mode = esc_detrend::ConditioningMode::Washout;
      else
        fail(path + ".conditioning", "expected regression or washout");
    }
    c.params.reset_to_feedforward =
        bool_or(j, path, "reset_to_feedforward", c.params.reset_to_feedforward);
    return c;
  }
  fail(path + ".type", "expected onoff, esc_classic or esc_detrend");
}

json irradiance_to_json(const plant_sim::ProfileSpec& profile) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, plant_sim::ClearDay>) {
          j["type"] = "clear_day";
          j["peak_wm2"] = p.peak;
          j["sunrise_s"] = p.sunrise;
          j["sunset_s"] = p.sunset;
        } else if constexpr (std::is_same_v<T, plant_sim::Cloudy>) {
          j["type"] = "cloudy";
          j["peak_wm2"] = p.peak;
          j["sunrise_s"] = p.sunrise;
          j["sunset_s"] = p.sunset;
          j["clouds"] = json::array();
          for (const auto& c : p.clouds)
            j["clouds"].push_back({{"t_start_s", c.t_start},
                                   {"t_end_s", c.t_end},
                                   {"attenuation", c.attenuation}});
        } else if constexpr (std::is_same_v<T, plant_sim::Constant>) {
          j["type"] = "constant";
          j["value_wm2"] = p.value;
        } else {
          j["type"] = "trace";
          j["points"] = json::array();
          for (const auto& [t, v] : p.rows) j["points"].push_back({t, v});
        }
      },
      profile);
  return j;
}

json core_to_json(const esc_core::EscParams& p) {
  // Canonical form spells the frequencies out; dither_period_s is an input
  // convenience only.
  return json{{"a_lpm", p.a},          {"omega_d_rps", p.omega_d},
              {"omega_l_rps", p.omega_l}, {"omega_h_rps", p.omega_h},
              {"k", p.k},              {"theta_init_lpm", p.theta_init}};
}

json cost_to_json(const esc_core::CostSpec& c) {
  return json{{"ph_sp", c.ph_sp},
              {"form", c.form == esc_core::CostForm::SquaredError
                           ? "squared_error"
                           : "abs_error"}};
}

json controller_to_json(const ControllerSpec& spec) {
  json j;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, OnOffController>) {
          j["type"] = "onoff";
          j["ph_sp"] = c.params.ph_sp;
          j["band"] = c.params.band;
          j["q_on_lpm"] = c.params.q_on;
        } else if constexpr (std::is_same_v<T, EscClassicController>) {
          j = core_to_json(c.core);
          j["type"] = "esc_classic";
          j["cost"] = cost_to_json(c.cost);
        } else {
          j = core_to_json(c.params.core);
          j["type"] = "esc_detrend";
          j["cost"] = cost_to_json(c.params.cost);
          j["feedforward"] = {{"k_ff", c.params.ff.k_ff},
                              {"q_ff_max_lpm", c.params.ff.q_ff_max}};
          j["saturation"] = {{"q_min_lpm", c.params.sat.q_min},
                             {"q_max_lpm", c.params.sat.q_max}};
          j["conditioning"] =
              c.params.mode == esc_detrend::ConditioningMode::Regression
                  ? "regression"
                  : "washout";
          j["reset_to_feedforward"] = c.params.reset_to_feedforward;
        }
      },
      spec);
  return j;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("json: ") + e.what());
  }
  require_object(j, "scenario");
  check_keys(j, "",
             {"duration_s", "dt_s", "seed", "irradiance", "plant",
              "activation", "controller", "baseline", "events"});

  Scenario s;
  s.duration = num_or(j, "", "duration_s", s.duration);
  s.dt = num_or(j, "", "dt_s", s.dt);
  if (j.contains("seed")) {
    const json& v = j.at("seed");
    if (!v.is_number_unsigned()) fail("seed", "expected an unsigned integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (j.contains("irradiance"))
    s.irradiance = parse_irradiance(j.at("irradiance"), "irradiance");
  if (j.contains("plant")) {
    const json& p = j.at("plant");
    require_object(p, "plant");
    check_keys(p, "plant",
               {"tau_ph_s", "gain_co2", "gain_photo", "mu_max", "k_i_wm2",
                "ph_ambient", "ph_min", "ph_max", "noise_std", "ph0",
                "biomass0_gpl"});
    s.plant.tau_ph = num_or(p, "plant", "tau_ph_s", s.plant.tau_ph);
    s.plant.gain_co2 = num_or(p, "plant", "gain_co2", s.plant.gain_co2);
    s.plant.gain_photo = num_or(p, "plant", "gain_photo", s.plant.gain_photo);
    s.plant.mu_max = num_or(p, "plant", "mu_max", s.plant.mu_max);
    s.plant.k_i = num_or(p, "plant", "k_i_wm2", s.plant.k_i);
    s.plant.ph_ambient = num_or(p, "plant", "ph_ambient", s.plant.ph_ambient);
    s.plant.ph_min = num_or(p, "plant", "ph_min", s.plant.ph_min);
    s.plant.ph_max = num_or(p, "plant", "ph_max", s.plant.ph_max);
    s.plant.noise_std = num_or(p, "plant", "noise_std", s.plant.noise_std);
    if (p.contains("ph0")) s.ph0 = as_num(p.at("ph0"), "plant.ph0");
    s.biomass0 = num_or(p, "plant", "biomass0_gpl", s.biomass0);
  }
  if (j.contains("activation")) {
    const json& a = j.at("activation");
    require_object(a, "activation");
    check_keys(a, "activation", {"i_on_wm2", "i_off_wm2"});
    s.activation.i_on = num_or(a, "activation", "i_on_wm2", s.activation.i_on);
    s.activation.i_off =
        num_or(a, "activation", "i_off_wm2", s.activation.i_off);
  }
  if (j.contains("controller"))
    s.controller = parse_controller(j.at("controller"), "controller", s.dt);
  if (j.contains("baseline")) {
    // Parsed by baseline_from_json_text; only shape-checked here.
    const json& b = j.at("baseline");
    require_object(b, "baseline");
    check_keys(b, "baseline", {"ph_sp", "band", "q_on_lpm"});
  }
  if (j.contains("events")) {
    const json& evs = j.at("events");
    if (!evs.is_array()) fail("events", "expected an array");
    for (std::size_t i = 0; i < evs.size(); ++i) {
      std::string ep = "events[" + std::to_string(i) + "]";
      const json& e = evs[i];
      require_object(e, ep);
      std::string type = str_at(e, ep, "type");
      TimedEvent te;
      auto t_it = e.find("t_s");
      if (t_it == e.end()) fail(ep + ".t_s", "missing required key");
      te.t = as_num(*t_it, ep + ".t_s");
      if (type == "dilution") {
        check_keys(e, ep, {"t_s", "type", "fraction"});
        auto f_it = e.find("fraction");
        if (f_it == e.end()) fail(ep + ".fraction", "missing required key");
        te.event = plant_sim::Dilution{as_num(*f_it, ep + ".fraction")};
      } else if (type == "comms_fail_start") {
        check_keys(e, ep, {"t_s", "type"});
        te.event = plant_sim::CommsFailureStart{};
      } else if (type == "comms_fail_end") {
        check_keys(e, ep, {"t_s", "type"});
        te.event = plant_sim::CommsFailureEnd{};
      } else {
        fail(ep + ".type",
             "expected dilution, comms_fail_start or comms_fail_end");
      }
      s.events.push_back(std::move(te));
    }
  }
  validate(s);
  return s;
}

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["duration_s"] = s.duration;
  j["dt_s"] = s.dt;
  j["seed"] = s.seed;
  j["irradiance"] = irradiance_to_json(s.irradiance);
  json p;
  p["tau_ph_s"] = s.plant.tau_ph;
  p["gain_co2"] = s.plant.gain_co2;
  p["gain_photo"] = s.plant.gain_photo;
  p["mu_max"] = s.plant.mu_max;
  p["k_i_wm2"] = s.plant.k_i;
  p["ph_ambient"] = s.plant.ph_ambient;
  p["ph_min"] = s.plant.ph_min;
  p["ph_max"] = s.plant.ph_max;
  p["noise_std"] = s.plant.noise_std;
  if (s.ph0) p["ph0"] = *s.ph0;
  p["biomass0_gpl"] = s.biomass0;
  j["plant"] = std::move(p);
  j["activation"] = {{"i_on_wm2", s.activation.i_on},
                     {"i_off_wm2", s.activation.i_off}};
  j["controller"] = controller_to_json(s.controller);
  j["events"] = json::array();
  for (const auto& e : s.events) {
    json ev;
    ev["t_s"] = e.t;
    if (const auto* d = std::get_if<plant_sim::Dilution>(&e.event)) {
      ev["type"] = "dilution";
      ev["fraction"] = d->fraction;
    } else if (std::holds_alternative<plant_sim::CommsFailureStart>(e.event)) {
      ev["type"] = "comms_fail_start";
    } else {
      ev["type"] = "comms_fail_end";
    }
    j["events"].push_back(std::move(ev));
  }
  // nlohmann::json keeps keys sorted, so this dump is canonical and stable.
  return j.dump();
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str());
}

std::uint64_t scenario_hash(const Scenario& s) {
  return rng::fnv1a(scenario_to_json_text(s));
}

baseline::OnOffParams baseline_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("json: ") + e.what());
  }
  require_object(j, "scenario");
  baseline::OnOffParams p;
  if (!j.contains("baseline")) return p;
  const json& b = j.at("baseline");
  require_object(b, "baseline");
  check_keys(b, "baseline", {"ph_sp", "band", "q_on_lpm"});
  p.ph_sp = num_or(b, "baseline", "ph_sp", p.ph_sp);
  p.band = num_or(b, "baseline", "band", p.band);
  p.q_on = num_or(b, "baseline", "q_on_lpm", p.q_on);
  try {
    baseline::validate(p);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("baseline: ") + e.what());
  }
  return p;
}

}  // namespace esctlr::harness
