#include "esctlr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace esctlr::metrics {

namespace {

// Trapezoid over pairs of consecutive samples that are both active; the
// integrand is evaluated per sample by `f`. Time is converted to minutes.
template <typename F>
GatedIntegral gated_trapezoid(const std::vector<Sample>& log, F f) {
  GatedIntegral out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].active) out.saw_active = true;
    if (i == 0) continue;
    const Sample& a = log[i - 1];
    const Sample& b = log[i];
    if (a.active && b.active) {
      double dt_min = (b.t - a.t) / 60.0;
      out.value += 0.5 * (f(a) + f(b)) * dt_min;
    }
  }
  return out;
}

}  // namespace

GatedIntegral iae(const std::vector<Sample>& log, double ph_sp) {
  return gated_trapezoid(
      log, [ph_sp](const Sample& s) { return std::abs(s.ph - ph_sp); });
}

GatedIntegral co2_consumption(const std::vector<Sample>& log) {
  return gated_trapezoid(log, [](const Sample& s) { return s.q; });
}

GatedIntegral integrated_irradiance(const std::vector<Sample>& log) {
  return gated_trapezoid(log, [](const Sample& s) { return s.irradiance; });
}

std::map<int, std::vector<Sample>> split_days(const std::vector<Sample>& log) {
  std::map<int, std::vector<Sample>> out;
  for (const auto& s : log) out[s.day_index].push_back(s);
  return out;
}

std::map<int, double> eta_bio(const std::vector<Sample>& log,
                              const BiomassSeries& biomass) {
  std::map<int, double> out;
  for (const auto& [day, samples] : split_days(log)) {
    auto it = biomass.x_avg.find(day);
    if (it == biomass.x_avg.end()) continue;
    if (!(it->second > 0.0))
      throw std::invalid_argument("eta_bio: x_avg must be > 0");
    out[day] = co2_consumption(samples).value / it->second;
  }
  return out;
}

std::optional<double> eta_irr(const std::vector<Sample>& log,
                              double irr_norm_minutes) {
  GatedIntegral q = co2_consumption(log);
  GatedIntegral irr = integrated_irradiance(log);
  if (!(irr.value > 0.0)) return std::nullopt;
  return q.value / (irr.value / irr_norm_minutes);
}

std::optional<double> delta_pct(double a, double b) {
  if (b == 0.0) return std::nullopt;
  return (a - b) / std::abs(b) * 100.0;
}

BiomassSeries load_biomass_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("biomass: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("day_index,", 0) != 0)
    throw std::runtime_error("biomass: expected header day_index,x_avg_gpl in " +
                             path);
  BiomassSeries out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int day;
    char comma;
    double x;
    if (!(row >> day >> comma >> x) || comma != ',')
      throw std::runtime_error("biomass: malformed row '" + line + "' in " +
                               path);
    out.x_avg[day] = x;
  }
  return out;
}

void write_biomass_csv(std::ostream& out, const BiomassSeries& b) {
  out << "day_index,x_avg_gpl\n";
  char buf[64];
  for (const auto& [day, x] : b.x_avg) {
    std::snprintf(buf, sizeof buf, "%d,%.12g\n", day, x);
    out << buf;
  }
}

namespace {

struct DayValues {
  double co2 = 0.0;
  double iae_v = 0.0;
  std::optional<double> eta_b;
  std::optional<double> eta_i;
};

struct LogSummary {
  std::vector<int> days;
  std::map<int, DayValues> per_day;
  DayValues aggregate;  // co2 summed; the rest averaged over days
  bool saw_active = false;
};

LogSummary summarize(const std::vector<Sample>& log,
                     const BiomassSeries& biomass, const ReportOptions& opts,
                     std::vector<std::string>& warnings,
                     const std::string& tag) {
  LogSummary out;
  auto by_day = split_days(log);
  auto etas = eta_bio(log, biomass);
  double eta_b_sum = 0.0, eta_i_sum = 0.0, iae_sum = 0.0;
  int eta_b_n = 0, eta_i_n = 0;
  for (const auto& [day, samples] : by_day) {
    // Days with no active control window (a trailing midnight sample, a
    // scenario tail past the last sunset) carry no information; skip them
    // rather than emit zero rows that dilute the aggregate means.
    bool any_active = false;
    for (const auto& s : samples) any_active = any_active || s.active;
    if (!any_active) continue;
    DayValues v;
    GatedIntegral c = co2_consumption(samples);
    GatedIntegral e = iae(samples, opts.ph_sp);
    out.saw_active = out.saw_active || c.saw_active;
    v.co2 = c.value;
    v.iae_v = e.value;
    if (auto it = etas.find(day); it != etas.end()) {
      v.eta_b = it->second;
      eta_b_sum += it->second;
      ++eta_b_n;
    } else {
      warnings.push_back(tag + ": no biomass entry for day " +
                         std::to_string(day) + "; CO2/biomass omitted");
    }
    if (auto ei = eta_irr(samples, opts.irr_norm_minutes)) {
      v.eta_i = *ei;
      eta_i_sum += *ei;
      ++eta_i_n;
    } else {
      warnings.push_back(tag + ": day " + std::to_string(day) +
                         " integrated no irradiance; eta omitted");
    }
    out.aggregate.co2 += v.co2;
    iae_sum += v.iae_v;
    out.days.push_back(day);
    out.per_day[day] = v;
  }
  if (!out.days.empty())
    out.aggregate.iae_v = iae_sum / static_cast<double>(out.days.size());
  if (eta_b_n > 0) out.aggregate.eta_b = eta_b_sum / eta_b_n;
  if (eta_i_n > 0) out.aggregate.eta_i = eta_i_sum / eta_i_n;
  if (!out.saw_active)
    warnings.push_back(tag + ": no active samples; metrics are all zero");
  return out;
}

MetricTriple triple(std::optional<double> a, std::optional<double> b) {
  MetricTriple t;
  t.a = a;
  t.b = b;
  if (a && b) t.delta_pct = delta_pct(*a, *b);
  return t;
}

ReportRow make_row(const std::string& label, const DayValues& a,
                   const DayValues* b) {
  ReportRow row;
  row.label = label;
  row.co2 = triple(a.co2, b ? std::optional<double>(b->co2) : std::nullopt);
  row.eta_bio = triple(a.eta_b, b ? b->eta_b : std::nullopt);
  row.eta_irr = triple(a.eta_i, b ? b->eta_i : std::nullopt);
  row.iae = triple(a.iae_v, b ? std::optional<double>(b->iae_v) : std::nullopt);
  return row;
}

}  // namespace

MetricsReport compare_report(const std::vector<Sample>& log_a,
                             const std::vector<Sample>& log_b,
                             const BiomassSeries& biomass_a,
                             const BiomassSeries& biomass_b,
                             const ReportOptions& opts) {
  MetricsReport report;
  LogSummary a = summarize(log_a, biomass_a, opts, report.warnings, "primary");
  LogSummary b = summarize(log_b, biomass_b, opts, report.warnings, "baseline");
  if (a.days != b.days)
    throw std::invalid_argument(
        "compare_report: logs must cover the same set of days");
  for (int day : a.days) {
    report.rows.push_back(make_row("day " + std::to_string(day),
                                   a.per_day[day], &b.per_day[day]));
  }
  report.rows.push_back(make_row("total/mean", a.aggregate, &b.aggregate));
  return report;
}

MetricsReport single_report(const std::vector<Sample>& log,
                            const BiomassSeries& biomass,
                            const ReportOptions& opts) {
  MetricsReport report;
  LogSummary a = summarize(log, biomass, opts, report.warnings, "log");
  for (int day : a.days)
    report.rows.push_back(
        make_row("day " + std::to_string(day), a.per_day[day], nullptr));
  report.rows.push_back(make_row("total/mean", a.aggregate, nullptr));
  return report;
}

namespace {

std::string cell(const std::optional<double>& v, const char* fmt = "%.12g") {
  if (!v) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

void csv_metric(std::ostream& out, const std::string& label, const char* name,
                const MetricTriple& t) {
  out << label << ',' << name << ',' << cell(t.a) << ',' << cell(t.b) << ','
      << cell(t.delta_pct) << '\n';
}

}  // namespace

void write_report_csv(std::ostream& out, const MetricsReport& r) {
  out << "period,metric,primary,baseline,delta_pct\n";
  for (const auto& row : r.rows) {
    csv_metric(out, row.label, "co2_l", row.co2);
    csv_metric(out, row.label, "co2_per_biomass_l_per_g", row.eta_bio);
    csv_metric(out, row.label, "eta_irradiance", row.eta_irr);
    csv_metric(out, row.label, "iae_ph_min", row.iae);
  }
  for (const auto& w : r.warnings) out << "# warning: " << w << '\n';
}

void write_report_text(std::ostream& out, const MetricsReport& r) {
  auto fmt3 = [](const MetricTriple& t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%10s %10s %8s", cell(t.a, "%.4f").c_str(),
                  cell(t.b, "%.4f").c_str(), cell(t.delta_pct, "%.1f").c_str());
    return std::string(buf);
  };
  out << "               |             CO2 [L]            |"
         "       CO2/biomass [L/g]        |"
         "         eta [L/(W/m2)]         |"
         "          IAE [pH*min]\n";
  out << "               |   primary   baseline     d[%]  |"
         "   primary   baseline     d[%]  |"
         "   primary   baseline     d[%]  |"
         "   primary   baseline     d[%]\n";
  for (const auto& row : r.rows) {
    char head[32];
    std::snprintf(head, sizeof head, "%-14s", row.label.c_str());
    out << head << " | " << fmt3(row.co2) << " | " << fmt3(row.eta_bio)
        << " | " << fmt3(row.eta_irr) << " | " << fmt3(row.iae) << '\n';
  }
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

}  // namespace esctlr::metrics
