#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Performance metrics over active control windows: setpoint-tracking IAE,
// total CO2 use, and biomass-/irradiance-normalized consumption, plus the
// per-day comparison table between two controllers.
namespace esctlr::metrics {

struct Sample {
  double t = 0.0;           // [s]
  double irradiance = 0.0;  // [W/m^2]
  double ph = 0.0;
  double q = 0.0;           // applied CO2 flow [L/min]
  bool active = false;
  int day_index = 0;
};

struct BiomassSeries {
  std::map<int, double> x_avg;  // day_index -> average biomass [g/L]
};

BiomassSeries load_biomass_csv(const std::string& path);  // day_index,x_avg_gpl
void write_biomass_csv(std::ostream& out, const BiomassSeries& b);

struct GatedIntegral {
  double value = 0.0;
  bool saw_active = false;  // false means "no active samples" (value 0)
};

/// Trapezoidal integral of |ph - ph_sp| in pH*minutes over pairs of
/// consecutive active samples; gaps between active intervals contribute 0.
GatedIntegral iae(const std::vector<Sample>& log, double ph_sp);

/// Trapezoidal integral of q over active time, in liters (L/min x minutes).
GatedIntegral co2_consumption(const std::vector<Sample>& log);

/// Trapezoidal integral of irradiance over active time [W/m^2 * min].
GatedIntegral integrated_irradiance(const std::vector<Sample>& log);

/// CO2 consumed per average biomass, per day [L/g]. Days without a biomass
/// entry are omitted (callers surface the warning).
std::map<int, double> eta_bio(const std::vector<Sample>& log,
                              const BiomassSeries& biomass);

inline constexpr double kIrrNormMinutesDefault = 480.0;

/// Irradiance-normalized consumption: integral(q dt) divided by
/// integral(I dt)/irr_norm_minutes. The normalization constant keeps the
/// ratio duration-independent; the default 480 min reproduces the reference
/// table's magnitudes. Empty when no irradiance was integrated.
std::optional<double> eta_irr(const std::vector<Sample>& log,
                              double irr_norm_minutes = kIrrNormMinutesDefault);

/// (a - b)/|b| * 100; empty when the baseline b is 0.
std::optional<double> delta_pct(double a, double b);

/// Splits a log by day_index, preserving order.
std::map<int, std::vector<Sample>> split_days(const std::vector<Sample>& log);

struct MetricTriple {
  std::optional<double> a;          // primary (e.g. the seeking controller)
  std::optional<double> b;          // baseline; empty in single-log reports
  std::optional<double> delta_pct;  // empty when undefined
};

struct ReportRow {
  std::string label;  // "day 0", ..., "total/mean"
  MetricTriple co2;      // [L]; aggregate row = sum of days
  MetricTriple eta_bio;  // [L/g]; aggregate row = mean of days
  MetricTriple eta_irr;  // aggregate row = mean of days
  MetricTriple iae;      // [pH*min]; aggregate row = mean of days
};

struct ReportOptions {
  double ph_sp = 8.0;
  double irr_norm_minutes = kIrrNormMinutesDefault;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;
};

/// Per-day rows plus the total/mean row for two logs covering the same days.
/// Throws std::invalid_argument when the day sets differ.
MetricsReport compare_report(const std::vector<Sample>& log_a,
                             const std::vector<Sample>& log_b,
                             const BiomassSeries& biomass_a,
                             const BiomassSeries& biomass_b,
                             const ReportOptions& opts = {});

/// Same table for a single log (baseline and delta columns empty).
MetricsReport single_report(const std::vector<Sample>& log,
                            const BiomassSeries& biomass,
                            const ReportOptions& opts = {});

void write_report_csv(std::ostream& out, const MetricsReport& r);
void write_report_text(std::ostream& out, const MetricsReport& r);

}  // namespace esctlr::metrics
