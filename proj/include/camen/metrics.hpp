#pragma once

#include <string>
#include <vector>

namespace camen {

// One side of a user<->edge exchange during matching. Edge<->cloud traffic
// rides wired links and is not counted toward the interaction metric.
struct InteractionEvent {
  enum class Kind { Proposal, Response };
  Kind kind = Kind::Proposal;
  int mu = -1;
  int es = -1;
};

// NI: one per proposal, one per response/notification.
long long count_interactions(const std::vector<InteractionEvent>& log);

struct RiskRow {
  std::string party;     // "mu" | "es" | "cs"
  int id = -1;
  double r1_u = 0.0;     // certified low-utility risk level
  double r1_u_exact = 0.0;  // diagnostic: exact Pr(u < u_min)
  double r2_u = 0.0;
  double r1_e = 0.0;
  double r2_e = 0.0;
  double r_c = 0.0;
};

struct MetricsReport {
  std::string mechanism;
  long long runs = 0;
  uint64_t seed = 0;
  double tau = 0.0;
  double sw_mean = 0.0;
  double sw_stderr = 0.0;
  double ni_mean = 0.0;
  double rt_ms = 0.0;
  double ptct_mean_ms = 0.0;
  double mu_util = 0.0;
  double es_util = 0.0;
  double cs_util = 0.0;
  std::vector<RiskRow> risk_table;
};

// Stable column order, floats at 6 significant digits; identical reports
// serialize to identical bytes. `with_tau` prepends a tau column (used by
// the overbooking sweep).
std::string report_rows_to_csv(const std::vector<MetricsReport>& rows, bool with_tau = false);
std::string report_rows_to_json(const std::vector<MetricsReport>& rows, bool with_tau = false);
void export_report(const std::vector<MetricsReport>& rows, const std::string& path,
                   const std::string& format, bool with_tau = false);
std::vector<MetricsReport> parse_report_csv(const std::string& text);

}  // namespace camen
