#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "esctlr/sysid.hpp"
#include "support/oracles.hpp"

using namespace esctlr::sysid;

namespace {

std::vector<std::pair<double, double>> sample_fn(double t0, double t1,
                                                 double dt, auto&& fn) {
  std::vector<std::pair<double, double>> out;
  for (double t = t0; t <= t1 + 1e-9; t += dt) out.emplace_back(t, fn(t));
  return out;
}

// Exact log of a continuous first-order plant driven by the segment
// excitation, built from the closed-form solution (no integrator involved).
// The log starts with the plant already settled onto the first segment's
// periodic orbit, the way a real characterization run waits out the initial
// transient before logging; later boundaries carry only the small mismatch
// between adjacent particular solutions, which the skipped first cycle of
// each segment lets decay.
std::vector<LogSample> exact_first_order_log(const oracles::FirstOrder& plant,
                                             double ambient,
                                             const ExcitationSpec& spec,
                                             double dt) {
  std::vector<LogSample> log;
  double total = 0.0;
  for (double T : spec.periods) total += spec.cycles_per_period * T;
  auto n = static_cast<std::size_t>(std::llround(total / dt));

  std::size_t seg = 0;
  double seg_start = 0.0;
  double seg_end = spec.cycles_per_period * spec.periods[0];
  // deviation from ambient at segment start
  double y_seg_start = oracles::sine_particular(
      plant, spec.bias, spec.amplitude, 2.0 * M_PI / spec.periods[0], 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    double t = static_cast<double>(k) * dt;
    while (t >= seg_end - 1e-9 && seg + 1 < spec.periods.size()) {
      y_seg_start = oracles::first_order_exact(
          plant, y_seg_start, spec.bias, spec.amplitude,
          2.0 * M_PI / spec.periods[seg], seg_end - seg_start);
      ++seg;
      seg_start = seg_end;
      seg_end += spec.cycles_per_period * spec.periods[seg];
    }
    double omega = 2.0 * M_PI / spec.periods[seg];
    double q = spec.bias + spec.amplitude * std::sin(omega * (t - seg_start));
    double y = oracles::first_order_exact(plant, y_seg_start, spec.bias,
                                          spec.amplitude, omega, t - seg_start);
    log.push_back({t, q, ambient + y});
  }
  return log;
}

}  // namespace

TEST_CASE("fit recovers a clean sinusoid exactly") {
  double omega = 2.0 * M_PI / 600.0;
  auto pts = sample_fn(0.0, 1200.0, 10.0,
                       [&](double t) { return 2.0 * std::sin(omega * t); });
  SinusoidFit f = fit_sinusoid(pts, omega);
  CHECK(f.amplitude == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(f.phase) < 1e-9);
  CHECK(std::abs(f.offset) < 1e-9);
  CHECK(f.rms < 1e-9);
}

TEST_CASE("fit separates drift, offset and quadrature phase") {
  double omega = 2.0 * M_PI / 600.0;
  auto pts = sample_fn(0.0, 1800.0, 10.0, [&](double t) {
    return 3.0 + 0.001 * t + std::cos(omega * t);
  });
  SinusoidFit f = fit_sinusoid(pts, omega);
  CHECK(f.amplitude == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.phase == doctest::Approx(M_PI / 2.0).epsilon(1e-9));
  CHECK(f.slope == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(f.offset == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("fit phase is referenced to t = 0 even for late samples") {
  double omega = 2.0 * M_PI / 900.0;
  auto pts = sample_fn(50000.0, 52700.0, 10.0,
                       [&](double t) { return std::sin(omega * t); });
  SinusoidFit f = fit_sinusoid(pts, omega);
  CHECK(std::abs(f.phase) < 1e-9);
  CHECK(f.amplitude == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit is a least-squares optimum, not just a close guess") {
  double omega = 2.0 * M_PI / 300.0;
  // deterministic rough noise so the minimum is strict
  auto pts = sample_fn(0.0, 900.0, 5.0, [&](double t) {
    return 1.3 * std::sin(omega * t + 0.4) + 0.05 * std::sin(7.7 * t);
  });
  SinusoidFit f = fit_sinusoid(pts, omega);
  auto sse = [&](double amp, double phase) {
    double ss = 0.0;
    for (auto& [t, y] : pts) {
      double fit = f.offset + f.slope * t + amp * std::sin(omega * t + phase);
      ss += (y - fit) * (y - fit);
    }
    return ss;
  };
  double best = sse(f.amplitude, f.phase);
  for (double da : {-0.02, 0.02})
    for (double dp : {-0.02, 0.02})
      CHECK(best <= sse(f.amplitude + da, f.phase + dp) + 1e-12);
}

TEST_CASE("scaling the signal scales amplitude and residual alike") {
  double omega = 2.0 * M_PI / 600.0;
  auto noisy = [&](double t) {
    return std::sin(omega * t) + 0.01 * std::sin(3.1 * t);
  };
  auto pts = sample_fn(0.0, 1200.0, 10.0, noisy);
  auto scaled = pts;
  for (auto& [t, y] : scaled) y *= 2.5;
  SinusoidFit a = fit_sinusoid(pts, omega);
  SinusoidFit b = fit_sinusoid(scaled, omega);
  CHECK(b.amplitude == doctest::Approx(2.5 * a.amplitude).epsilon(1e-9));
  CHECK(b.rms == doctest::Approx(2.5 * a.rms).epsilon(1e-9));
  CHECK(b.phase == doctest::Approx(a.phase).epsilon(1e-9));
}

TEST_CASE("fit preconditions are enforced") {
  double omega = 2.0 * M_PI / 600.0;
  auto few = sample_fn(0.0, 40.0, 10.0, [](double) { return 1.0; });
  CHECK_THROWS_AS(fit_sinusoid(few, omega), std::invalid_argument);
  auto short_span = sample_fn(0.0, 300.0, 10.0,
                              [&](double t) { return std::sin(omega * t); });
  CHECK_THROWS_AS(fit_sinusoid(short_span, omega), std::invalid_argument);
}

TEST_CASE("excitation spec validation") {
  ExcitationSpec spec;
  validate(spec);
  spec.cycles_per_period = 1;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = ExcitationSpec{};
  spec.bias = 0.5;  // amplitude 1: flow would go negative
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = ExcitationSpec{};
  spec.periods.clear();
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("characterization nails a known first-order response") {
  // Positive-gain continuous plant sampled exactly; the fitted gain and
  // phase must match K/sqrt(1+(wt)^2) and -atan(wt) closely at every period.
  oracles::FirstOrder plant{0.04, 150.0};
  ExcitationSpec spec;
  spec.amplitude = 1.0;
  spec.bias = 4.0;
  std::vector<LogSample> log = exact_first_order_log(plant, 8.0, spec, 10.0);
  std::vector<FreqResponse> rs = characterize(log, spec);
  REQUIRE(rs.size() == 4);
  for (const auto& r : rs) {
    double omega = 2.0 * M_PI / r.period;
    double g = oracles::expected_gain(plant, omega);
    double ph = oracles::expected_phase_deg(plant, omega);
    CHECK(r.gain == doctest::Approx(g).epsilon(0.02));
    CHECK(std::abs(r.phase_deg - ph) < 2.0);
    CHECK(r.reliable);
  }
}

TEST_CASE("surrogate plant shows the expected low-pass frequency response") {
  namespace plant_sim = esctlr::plant_sim;
  plant_sim::PlantParams plant;  // default pH dynamics, noise 0.005
  plant_sim::PlantState initial{plant.ph_ambient, 1.5, 0.0};
  ExcitationSpec spec;
  std::vector<FreqResponse> rs =
      characterize(plant, initial, plant_sim::Constant{500.0}, spec, 10.0);
  REQUIRE(rs.size() == 4);
  CHECK_FALSE(rs[0].reliable);  // 300 s: response buried in sensor noise
  CHECK(rs[1].reliable);
  CHECK(rs[2].reliable);
  CHECK(rs[3].reliable);
  for (const auto& r : rs) CHECK(r.gain < 0.0);  // CO2 pushes pH down
  CHECK(std::abs(rs[2].gain) > std::abs(rs[1].gain));
  CHECK(std::abs(rs[3].gain) > std::abs(rs[2].gain));
  CHECK(recommend_dither(rs, {}) == 900.0);
}

TEST_CASE("dither recommendation rules") {
  auto resp = [](double period, double gain, double phase,
                 bool reliable) {
    FreqResponse r;
    r.period = period;
    r.gain = gain;
    r.phase_deg = phase;
    r.reliable = reliable;
    return r;
  };
  DitherCriteria c;  // >= half the best |gain|, within 60 deg of 180

  SUBCASE("shortest admissible period wins") {
    std::vector<FreqResponse> rs{
        resp(300.0, -0.01, 95.0, true),    // lag 85: too far from reference
        resp(600.0, -0.022, 125.0, true),  // passes both rules
        resp(900.0, -0.03, 130.0, true),
    };
    CHECK(recommend_dither(rs, c) == 600.0);
  }
  SUBCASE("weak responses are filtered by the gain fraction") {
    std::vector<FreqResponse> rs{
        resp(300.0, -0.01, 150.0, true),  // in phase but only a third of max
        resp(900.0, -0.03, 130.0, true),
    };
    CHECK(recommend_dither(rs, c) == 900.0);
  }
  SUBCASE("nothing admissible gives an empty answer") {
    std::vector<FreqResponse> rs{
        resp(300.0, -0.01, 60.0, true),
        resp(600.0, -0.02, 80.0, true),
    };
    CHECK_FALSE(recommend_dither(rs, c).has_value());
  }
  SUBCASE("fewer than two reliable points is an error") {
    std::vector<FreqResponse> rs{
        resp(300.0, -0.01, 150.0, false),
        resp(900.0, -0.03, 130.0, true),
    };
    CHECK_THROWS_AS(recommend_dither(rs, c), std::invalid_argument);
  }
}

TEST_CASE("report CSV round trips through the log loader") {
  oracles::FirstOrder plant{0.04, 150.0};
  ExcitationSpec spec;
  spec.periods = {300.0, 600.0};
  std::vector<LogSample> log = exact_first_order_log(plant, 8.0, spec, 10.0);

  const char* path = "sysid_log_tmp.csv";
  {
    std::ofstream out(path);
    out << "t_s,q_co2_lpm,ph\n";
    char buf[128];
    for (const auto& s : log) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", s.t, s.q, s.ph);
      out << buf;
    }
  }
  std::vector<LogSample> reloaded = load_log_csv(path);
  REQUIRE(reloaded.size() == log.size());
  CHECK(reloaded[100].q == doctest::Approx(log[100].q));
  CHECK(reloaded[100].ph == doctest::Approx(log[100].ph));
  std::remove(path);

  std::vector<FreqResponse> rs = characterize(reloaded, spec);
  std::ostringstream csv;
  write_report_csv(csv, rs);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "period_s,gain,phase_deg,rms,reliable");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}
