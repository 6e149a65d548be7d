#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esctlr/harness.hpp"
#include "esctlr/sysid.hpp"

// Command-line front end. Exit codes: 0 success, 1 configuration problems
// (bad flags, unreadable or invalid scenario/log files), 2 failures while
// simulating or writing results.
namespace esctlr::harness {

namespace {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ESC_TLR_OUT"); env && *env) return env;
  return ".";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void report_config_error(const std::exception& e) {
  std::fprintf(stderr, "esctlr: %s\n", e.what());
}

void report_runtime_error(const std::exception& e) {
  std::fprintf(stderr, "esctlr: run failed: %s\n", e.what());
}

void sync_controller_dt(Scenario& s) {
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, EscClassicController>)
          c.core.dt = s.dt;
        else if constexpr (std::is_same_v<T, EscDetrendController>)
          c.params.core.dt = s.dt;
      },
      s.controller);
}

struct RunFlags {
  std::string scenario_path;
  std::string out_flag;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
};

std::optional<Scenario> load_with_overrides(const RunFlags& f) {
  try {
    Scenario s = load_scenario(f.scenario_path);
    if (f.seed) s.seed = *f.seed;
    if (f.dt) {
      s.dt = *f.dt;
      sync_controller_dt(s);
      validate(s);
    }
    return s;
  } catch (const std::exception& e) {
    report_config_error(e);
    return std::nullopt;
  }
}

int cmd_run(const RunFlags& f) {
  auto scenario = load_with_overrides(f);
  if (!scenario) return 1;
  try {
    RunLog log = run(*scenario);
    fs::path dir = resolve_out_dir(f.out_flag);
    fs::create_directories(dir);
    {
      auto out = open_out(dir / "run.csv");
      write_log_csv(out, log);
    }
    {
      auto out = open_out(dir / "biomass.csv");
      metrics::write_biomass_csv(out, log.biomass);
    }
    std::printf("wrote %s (%zu rows) and biomass.csv\n",
                (dir / "run.csv").string().c_str(), log.rows.size());
    return 0;
  } catch (const std::exception& e) {
    report_runtime_error(e);
    return 2;
  }
}

int cmd_compare(const RunFlags& f) {
  auto scenario = load_with_overrides(f);
  if (!scenario) return 1;
  baseline::OnOffParams onoff;
  try {
    std::ifstream in(f.scenario_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    onoff = baseline_from_json_text(buf.str());
    if (std::holds_alternative<OnOffController>(scenario->controller))
      throw ScenarioError(
          "controller.type: compare needs an extremum-seeking controller");
  } catch (const std::exception& e) {
    report_config_error(e);
    return 1;
  }
  try {
    PairResult pair = run_pair(*scenario, onoff);
    fs::path dir = resolve_out_dir(f.out_flag);
    fs::create_directories(dir);
    {
      auto out = open_out(dir / "esc.csv");
      write_log_csv(out, pair.esc);
    }
    {
      auto out = open_out(dir / "onoff.csv");
      write_log_csv(out, pair.onoff);
    }
    {
      auto out = open_out(dir / "biomass_esc.csv");
      metrics::write_biomass_csv(out, pair.esc.biomass);
    }
    {
      auto out = open_out(dir / "biomass_onoff.csv");
      metrics::write_biomass_csv(out, pair.onoff.biomass);
    }
    {
      auto out = open_out(dir / "report.csv");
      metrics::write_report_csv(out, pair.report);
    }
    {
      auto out = open_out(dir / "report.txt");
      metrics::write_report_text(out, pair.report);
    }
    metrics::write_report_text(std::cout, pair.report);
    std::printf("wrote esc.csv, onoff.csv, biomass_*.csv, report.{csv,txt} in %s\n",
                dir.string().c_str());
    return 0;
  } catch (const std::exception& e) {
    report_runtime_error(e);
    return 2;
  }
}

struct CharacterizeFlags {
  std::string scenario_path;
  std::string out_flag;
  std::optional<std::uint64_t> seed;
  std::vector<double> periods{300.0, 600.0, 900.0, 1200.0};
  double amplitude = 1.0;
  double bias = 4.0;
  int cycles = 4;
};

int cmd_characterize(const CharacterizeFlags& f) {
  Scenario scenario;
  sysid::ExcitationSpec spec;
  try {
    scenario = load_scenario(f.scenario_path);
    if (f.seed) scenario.seed = *f.seed;
    spec.periods = f.periods;
    spec.amplitude = f.amplitude;
    spec.bias = f.bias;
    spec.cycles_per_period = f.cycles;
    sysid::validate(spec);
  } catch (const std::exception& e) {
    report_config_error(e);
    return 1;
  }
  try {
    plant_sim::PlantParams plant = scenario.plant;
    plant.seed = scenario.seed;
    plant_sim::PlantState initial{scenario.ph0.value_or(plant.ph_ambient),
                                  scenario.biomass0, 0.0};
    std::vector<sysid::FreqResponse> rs = sysid::characterize(
        plant, initial, scenario.irradiance, spec, scenario.dt);

    fs::path dir = resolve_out_dir(f.out_flag);
    fs::create_directories(dir);
    {
      auto out = open_out(dir / "characterization.csv");
      sysid::write_report_csv(out, rs);
    }
    for (const auto& r : rs)
      std::printf("period %6.0f s: gain %+.5f, phase %+7.1f deg, snr %6.2f%s\n",
                  r.period, r.gain, r.phase_deg, r.snr,
                  r.reliable ? "" : "  (unreliable)");
    try {
      auto rec = sysid::recommend_dither(rs, {});
      if (rec)
        std::printf("recommended dither period: %.0f s\n", *rec);
      else
        std::printf("no admissible dither period in the tested set\n");
    } catch (const std::invalid_argument& e) {
      std::printf("no recommendation: %s\n", e.what());
    }
    return 0;
  } catch (const std::exception& e) {
    report_runtime_error(e);
    return 2;
  }
}

struct MetricsFlags {
  std::string log_path;
  std::string baseline_path;
  std::string biomass_path;
  std::string baseline_biomass_path;
  std::string out_flag;
  double ph_sp = 8.0;
  double irr_norm_minutes = metrics::kIrrNormMinutesDefault;
};

int cmd_metrics(const MetricsFlags& f) {
  std::vector<metrics::Sample> primary, secondary;
  metrics::BiomassSeries bio_primary, bio_secondary;
  bool have_baseline = !f.baseline_path.empty();
  try {
    primary = to_samples(load_log(f.log_path));
    if (!f.biomass_path.empty())
      bio_primary = metrics::load_biomass_csv(f.biomass_path);
    if (have_baseline) {
      secondary = to_samples(load_log(f.baseline_path));
      if (!f.baseline_biomass_path.empty())
        bio_secondary = metrics::load_biomass_csv(f.baseline_biomass_path);
    }
  } catch (const std::exception& e) {
    report_config_error(e);
    return 1;
  }
  try {
    metrics::ReportOptions opts;
    opts.ph_sp = f.ph_sp;
    opts.irr_norm_minutes = f.irr_norm_minutes;
    metrics::MetricsReport report =
        have_baseline ? metrics::compare_report(primary, secondary, bio_primary,
                                                bio_secondary, opts)
                      : metrics::single_report(primary, bio_primary, opts);
    fs::path dir = resolve_out_dir(f.out_flag);
    fs::create_directories(dir);
    {
      auto out = open_out(dir / "report.csv");
      metrics::write_report_csv(out, report);
    }
    {
      auto out = open_out(dir / "report.txt");
      metrics::write_report_text(out, report);
    }
    metrics::write_report_text(std::cout, report);
    return 0;
  } catch (const std::invalid_argument& e) {
    // mismatched day coverage and friends: a configuration problem
    report_config_error(e);
    return 1;
  } catch (const std::exception& e) {
    report_runtime_error(e);
    return 2;
  }
}

}  // namespace

int cli(int argc, const char* const* argv) {
  CLI::App app{"pH extremum-seeking CO2 dosing: simulation and analysis"};
  app.name("esctlr");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunFlags run_flags;
  double dt_flag = 0.0;
  std::uint64_t seed_flag = 0;

  auto* run_cmd = app.add_subcommand("run", "simulate one scenario");
  run_cmd->add_option("scenario", run_flags.scenario_path, "scenario JSON file")
      ->required();
  run_cmd->add_option("--out", run_flags.out_flag,
                      "output directory (default: $ESC_TLR_OUT or .)");
  auto* run_seed = run_cmd->add_option("--seed", seed_flag, "override the seed");
  auto* run_dt = run_cmd->add_option("--dt", dt_flag, "override dt_s");

  auto* cmp_cmd = app.add_subcommand(
      "compare", "run the scenario and an on-off baseline, then compare");
  cmp_cmd->add_option("scenario", run_flags.scenario_path, "scenario JSON file")
      ->required();
  cmp_cmd->add_option("--out", run_flags.out_flag,
                      "output directory (default: $ESC_TLR_OUT or .)");
  auto* cmp_seed = cmp_cmd->add_option("--seed", seed_flag, "override the seed");
  auto* cmp_dt = cmp_cmd->add_option("--dt", dt_flag, "override dt_s");

  CharacterizeFlags ch_flags;
  auto* ch_cmd = app.add_subcommand(
      "characterize", "sinusoidal excitation sweep over the scenario's plant");
  ch_cmd->add_option("scenario", ch_flags.scenario_path, "scenario JSON file")
      ->required();
  ch_cmd->add_option("--out", ch_flags.out_flag,
                     "output directory (default: $ESC_TLR_OUT or .)");
  auto* ch_seed = ch_cmd->add_option("--seed", seed_flag, "override the seed");
  ch_cmd->add_option("--periods", ch_flags.periods,
                     "excitation periods in seconds")
      ->delimiter(',');
  ch_cmd->add_option("--amplitude", ch_flags.amplitude, "excitation amplitude");
  ch_cmd->add_option("--bias", ch_flags.bias, "excitation bias flow");
  ch_cmd->add_option("--cycles", ch_flags.cycles,
                     "cycles per period (first is discarded)");

  MetricsFlags m_flags;
  auto* m_cmd =
      app.add_subcommand("metrics", "metrics report from recorded run logs");
  m_cmd->add_option("log", m_flags.log_path, "run log CSV")->required();
  m_cmd->add_option("--baseline", m_flags.baseline_path,
                    "baseline run log CSV to compare against");
  m_cmd->add_option("--biomass", m_flags.biomass_path, "biomass series CSV");
  m_cmd->add_option("--baseline-biomass", m_flags.baseline_biomass_path,
                    "baseline biomass series CSV");
  m_cmd->add_option("--ph-sp", m_flags.ph_sp, "setpoint for the IAE metric");
  m_cmd->add_option("--irr-norm-minutes", m_flags.irr_norm_minutes,
                    "irradiance normalization constant");
  m_cmd->add_option("--out", m_flags.out_flag,
                    "output directory (default: $ESC_TLR_OUT or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run_cmd->parsed()) {
    if (run_seed->count()) run_flags.seed = seed_flag;
    if (run_dt->count()) run_flags.dt = dt_flag;
    return cmd_run(run_flags);
  }
  if (cmp_cmd->parsed()) {
    if (cmp_seed->count()) run_flags.seed = seed_flag;
    if (cmp_dt->count()) run_flags.dt = dt_flag;
    return cmd_compare(run_flags);
  }
  if (ch_cmd->parsed()) {
    if (ch_seed->count()) ch_flags.seed = seed_flag;
    return cmd_characterize(ch_flags);
  }
  return cmd_metrics(m_flags);
}

}  // namespace esctlr::harness
