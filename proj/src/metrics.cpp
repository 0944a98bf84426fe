#include "camen/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "camen/types.hpp"
#include "json.hpp"

namespace camen {

long long count_interactions(const std::vector<InteractionEvent>& log) {
  return static_cast<long long>(log.size());
}

namespace {

// Floats are written at 6 significant digits so identical reports are
// byte-identical files.
std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

double round6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return std::stod(buf);
}

}  // namespace

std::string report_rows_to_csv(const std::vector<MetricsReport>& rows, bool with_tau) {
  std::ostringstream out;
  if (with_tau) out << "tau,";
  out << "mechanism,runs,seed,sw_mean,sw_stderr,ni_mean,rt_ms,ptct_mean_ms,mu_util,es_util,"
         "cs_util\n";
  for (const MetricsReport& r : rows) {
    if (with_tau) out << fmt6(r.tau) << ",";
    out << r.mechanism << "," << r.runs << "," << r.seed << "," << fmt6(r.sw_mean) << ","
        << fmt6(r.sw_stderr) << "," << fmt6(r.ni_mean) << "," << fmt6(r.rt_ms) << ","
        << fmt6(r.ptct_mean_ms) << "," << fmt6(r.mu_util) << "," << fmt6(r.es_util) << ","
        << fmt6(r.cs_util) << "\n";
  }
  return out.str();
}

std::string report_rows_to_json(const std::vector<MetricsReport>& rows, bool with_tau) {
  nlohmann::ordered_json doc;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const MetricsReport& r : rows) {
    nlohmann::ordered_json row;
    if (with_tau) row["tau"] = round6(r.tau);
    row["mechanism"] = r.mechanism;
    row["runs"] = r.runs;
    row["seed"] = r.seed;
    row["sw_mean"] = round6(r.sw_mean);
    row["sw_stderr"] = round6(r.sw_stderr);
    row["ni_mean"] = round6(r.ni_mean);
    row["rt_ms"] = round6(r.rt_ms);
    row["ptct_mean_ms"] = round6(r.ptct_mean_ms);
    row["mu_util"] = round6(r.mu_util);
    row["es_util"] = round6(r.es_util);
    row["cs_util"] = round6(r.cs_util);
    nlohmann::ordered_json risks = nlohmann::ordered_json::array();
    for (const RiskRow& rr : r.risk_table) {
      nlohmann::ordered_json jr;
      jr["party"] = rr.party;
      jr["id"] = rr.id;
      jr["r1_u"] = round6(rr.r1_u);
      jr["r1_u_exact"] = round6(rr.r1_u_exact);
      jr["r2_u"] = round6(rr.r2_u);
      jr["r1_e"] = round6(rr.r1_e);
      jr["r2_e"] = round6(rr.r2_e);
      jr["r_c"] = round6(rr.r_c);
      risks.push_back(jr);
    }
    row["risk_table"] = risks;
    doc["rows"].push_back(row);
  }
  return doc.dump(2) + "\n";
}

void export_report(const std::vector<MetricsReport>& rows, const std::string& path,
                   const std::string& format, bool with_tau) {
  std::string body;
  if (format == "csv") {
    body = report_rows_to_csv(rows, with_tau);
  } else if (format == "json") {
    body = report_rows_to_json(rows, with_tau);
  } else {
    throw ConfigError("unknown report format '" + format + "' (expected csv or json)");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot open report path for writing: " + path);
  out << body;
  if (!out) throw IngestError("failed writing report: " + path);
}

std::vector<MetricsReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("empty report");
  const bool with_tau = line.rfind("tau,", 0) == 0;
  std::vector<MetricsReport> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    const size_t expect = with_tau ? 12 : 11;
    if (cells.size() != expect) throw IngestError("malformed report row: " + line);
    MetricsReport r;
    size_t c = 0;
    if (with_tau) r.tau = std::stod(cells[c++]);
    r.mechanism = cells[c++];
    r.runs = std::stoll(cells[c++]);
    r.seed = std::stoull(cells[c++]);
    r.sw_mean = std::stod(cells[c++]);
    r.sw_stderr = std::stod(cells[c++]);
    r.ni_mean = std::stod(cells[c++]);
    r.rt_ms = std::stod(cells[c++]);
    r.ptct_mean_ms = std::stod(cells[c++]);
    r.mu_util = std::stod(cells[c++]);
    r.es_util = std::stod(cells[c++]);
    r.cs_util = std::stod(cells[c++]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace camen
