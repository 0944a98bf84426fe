#include "camen/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "camen/rng.hpp"

namespace camen {

void GenConfig::validate() const {
  if (n_mus < 1 || n_ess < 1 || n_css < 1) {
    throw ConfigError("counts must be >= 1 per party");
  }
  if (candidates_mean <= 0.0) throw ConfigError("candidates_mean must be positive");
  if (cycles_per_bit <= 0.0) throw ConfigError("cycles_per_bit must be positive");
  f_u.check("f_u");
  f_e.check("f_e");
  f_c.check("f_c");
  d_u.check("d_u");
  e_t.check("e_t");
  e_u.check("e_u");
  e_e.check("e_e");
  e_c.check("e_c");
  g_e.check("g_e");
  k_e.check("k_e");
  g_c.check("g_c");
  sigma.check("sigma");
  a.check("a");
  gamma.check("gamma");
  c_hw.check("c_hw");
  if (gamma.lo <= 0.0 || gamma.lo >= gamma.hi) {
    throw ConfigError("gamma range must satisfy 0 < lo < hi");
  }
  if (a.lo <= 0.0 || a.hi > 1.0) throw ConfigError("participation range must lie in (0,1]");
  params.validate();
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number '" + value + "'");
  }
}

Range parse_range(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  std::string first, second;
  in >> first >> second;
  std::string rest;
  in >> rest;
  if (!rest.empty()) throw ConfigError("config key '" + key + "': expected one or two numbers");
  Range r;
  r.lo = parse_number(first, key);
  r.hi = second.empty() ? r.lo : parse_number(second, key);
  r.check(key);
  return r;
}

}  // namespace

GenConfig parse_config_text(const std::string& text) {
  GenConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config key '" + key + "' given twice");
    }
  }

  auto take_num = [&](const char* key, double& field) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      field = parse_number(it->second, key);
      kv.erase(it);
    }
  };
  auto take_count = [&](const char* key, long long& field) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      field = static_cast<long long>(parse_number(it->second, key));
      kv.erase(it);
    }
  };
  auto take_int = [&](const char* key, int& field) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      field = static_cast<int>(parse_number(it->second, key));
      kv.erase(it);
    }
  };
  auto take_ll = [&](const char* key, long long& field) { take_count(key, field); };
  auto take_range = [&](const char* key, Range& field) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      field = parse_range(it->second, key);
      kv.erase(it);
    }
  };

  take_count("mus", cfg.n_mus);
  take_count("ess", cfg.n_ess);
  take_count("css", cfg.n_css);
  take_num("candidates_mean", cfg.candidates_mean);
  take_num("cycles_per_bit", cfg.cycles_per_bit);
  take_range("f_u", cfg.f_u);
  take_range("f_e", cfg.f_e);
  take_range("f_c", cfg.f_c);
  take_range("d_u", cfg.d_u);
  take_range("e_t", cfg.e_t);
  take_range("e_u", cfg.e_u);
  take_range("e_e", cfg.e_e);
  take_range("e_c", cfg.e_c);
  take_range("g_e", cfg.g_e);
  take_range("k_e", cfg.k_e);
  take_range("g_c", cfg.g_c);
  take_range("sigma", cfg.sigma);
  take_range("a", cfg.a);
  take_range("gamma", cfg.gamma);
  take_range("c_hw", cfg.c_hw);
  take_num("p_inherent", cfg.p_inherent);
  take_num("q_inherent", cfg.q_inherent);

  MarketParams& p = cfg.params;
  take_num("bandwidth_w", p.bandwidth_w);
  take_num("v1", p.v1);
  take_num("v2", p.v2);
  take_num("v3", p.v3);
  take_num("q_ue", p.q_ue);
  take_num("q_eu", p.q_eu);
  take_num("q_ec", p.q_ec);
  take_num("tau", p.tau);
  take_num("rho1", p.rho1);
  take_num("rho2", p.rho2);
  take_num("rho3", p.rho3);
  take_num("rho4", p.rho4);
  take_num("rho5", p.rho5);
  take_num("p_min_ue", p.p_min_ue);
  take_num("p_min_ec", p.p_min_ec);
  take_num("dp_mu", p.dp_mu);
  take_num("dp_es", p.dp_es);
  take_num("u_min", p.u_min);
  take_int("exact_enum_limit", p.exact_enum_limit);
  take_ll("mc_expectation_samples", p.mc_expectation_samples);

  if (!kv.empty()) {
    throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  }
  cfg.validate();
  return cfg;
}

GenConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

long long sample_count(Rng& rng, const Range& r) {
  return rng.uniform_int(static_cast<long long>(std::llround(r.lo)),
                         static_cast<long long>(std::llround(r.hi)));
}

double sample_range(Rng& rng, const Range& r) {
  return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi);
}

MobileUser sample_mu(Rng& rng, int id, const GenConfig& cfg) {
  MobileUser mu;
  mu.id = id;
  mu.f_u = sample_range(rng, cfg.f_u);
  mu.e_t = sample_range(rng, cfg.e_t);
  mu.e_u = sample_range(rng, cfg.e_u);
  mu.d_u = sample_range(rng, cfg.d_u);
  mu.r_u = cfg.cycles_per_bit * mu.d_u;
  mu.a = sample_range(rng, cfg.a);
  mu.gamma_low = cfg.gamma.lo;
  mu.gamma_high = cfg.gamma.hi;
  return mu;
}

EdgeServer sample_es(Rng& rng, int id, const GenConfig& cfg) {
  EdgeServer es;
  es.id = id;
  es.f_e = sample_range(rng, cfg.f_e);
  es.e_e = sample_range(rng, cfg.e_e);
  es.k_e = sample_count(rng, cfg.k_e);
  es.g_e = std::min(sample_count(rng, cfg.g_e), es.k_e);
  es.c_hw = sample_range(rng, cfg.c_hw);
  return es;
}

CloudServer sample_cs(Rng& rng, int id, const GenConfig& cfg) {
  CloudServer cs;
  cs.id = id;
  cs.f_c = sample_range(rng, cfg.f_c);
  cs.e_c = sample_range(rng, cfg.e_c);
  cs.g_c = std::max(1LL, sample_count(rng, cfg.g_c));
  cs.sigma = sample_range(rng, cfg.sigma);
  cs.p_inherent = cfg.p_inherent;
  cs.q_inherent = cfg.q_inherent;
  cs.c_hw = sample_range(rng, cfg.c_hw);
  return cs;
}

}  // namespace

Scenario generate_scenario(const GenConfig& config, uint64_t seed) {
  config.validate();
  Scenario sc;
  sc.params = config.params;
  Rng rng = Rng(seed).derive(0xC0DE);
  for (long long i = 0; i < config.n_mus; ++i) {
    sc.mus.push_back(sample_mu(rng, static_cast<int>(i), config));
  }
  for (long long j = 0; j < config.n_ess; ++j) {
    sc.ess.push_back(sample_es(rng, static_cast<int>(j), config));
  }
  for (long long k = 0; k < config.n_css; ++k) {
    sc.css.push_back(sample_cs(rng, static_cast<int>(k), config));
  }
  // Candidate sets: independent inclusion with the configured mean size,
  // at least one server forced so nobody is accidentally local-only.
  const double incl = std::min(1.0, config.candidates_mean / static_cast<double>(config.n_ess));
  for (MobileUser& mu : sc.mus) {
    for (long long j = 0; j < config.n_ess; ++j) {
      if (rng.bernoulli(incl)) mu.candidates.push_back(static_cast<int>(j));
    }
    if (mu.candidates.empty()) {
      mu.candidates.push_back(static_cast<int>(rng.uniform_int(0, config.n_ess - 1)));
    }
  }
  sc.validate();
  return sc;
}

double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  const double lat1 = lat1_deg * kDegToRad, lat2 = lat2_deg * kDegToRad;
  const double dlat = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlon = (lon2_deg - lon1_deg) * kDegToRad;
  const double s1 = std::sin(0.5 * dlat), s2 = std::sin(0.5 * dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

struct LatLonTable {
  std::vector<std::pair<double, double>> rows;
};

// Delimiter-separated table with a header row naming latitude/longitude
// columns (case-insensitive prefixes "lat"/"lon"/"lng" accepted).
LatLonTable read_latlon_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IngestError(path + ": empty file");
  const char delim = header.find('\t') != std::string::npos ? '\t'
                     : header.find(';') != std::string::npos ? ';'
                                                             : ',';
  auto split = [&](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, delim)) cells.push_back(trim(cell));
    return cells;
  };
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  const std::vector<std::string> head = split(header);
  int lat_col = -1, lon_col = -1;
  for (size_t c = 0; c < head.size(); ++c) {
    const std::string name = lower(head[c]);
    if (lat_col < 0 && name.rfind("lat", 0) == 0) lat_col = static_cast<int>(c);
    if (lon_col < 0 && (name.rfind("lon", 0) == 0 || name.rfind("lng", 0) == 0)) {
      lon_col = static_cast<int>(c);
    }
  }
  if (lat_col < 0 || lon_col < 0) {
    throw IngestError(path + ": header must name latitude and longitude columns");
  }
  LatLonTable table;
  std::string line;
  int rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (static_cast<int>(cells.size()) <= std::max(lat_col, lon_col)) {
      throw IngestError(path + ": row " + std::to_string(rowno) + " is missing columns");
    }
    try {
      table.rows.emplace_back(std::stod(cells[static_cast<size_t>(lat_col)]),
                              std::stod(cells[static_cast<size_t>(lon_col)]));
    } catch (const std::exception&) {
      throw IngestError(path + ": row " + std::to_string(rowno) + " has unparsable coordinates");
    }
  }
  if (table.rows.empty()) throw IngestError(path + ": no data rows");
  return table;
}

}  // namespace

Scenario load_eua_scenario(const std::string& stations_file, const std::string& users_file,
                           double coverage_radius_m, const GenConfig& config, uint64_t seed) {
  if (coverage_radius_m <= 0.0) throw ConfigError("coverage radius must be positive");
  config.params.validate();
  const LatLonTable stations = read_latlon_table(stations_file);
  const LatLonTable users = read_latlon_table(users_file);

  Scenario sc;
  sc.params = config.params;
  Rng rng = Rng(seed).derive(0xE0A);
  for (size_t j = 0; j < stations.rows.size(); ++j) {
    sc.ess.push_back(sample_es(rng, static_cast<int>(j), config));
  }
  for (long long k = 0; k < config.n_css; ++k) {
    sc.css.push_back(sample_cs(rng, static_cast<int>(k), config));
  }
  for (size_t i = 0; i < users.rows.size(); ++i) {
    MobileUser mu = sample_mu(rng, static_cast<int>(i), config);
    for (size_t j = 0; j < stations.rows.size(); ++j) {
      const double d = haversine_m(users.rows[i].first, users.rows[i].second,
                                   stations.rows[j].first, stations.rows[j].second);
      if (d <= coverage_radius_m) mu.candidates.push_back(static_cast<int>(j));
    }
    // Users out of every station's range stay in the scenario as local-only.
    sc.mus.push_back(std::move(mu));
  }
  sc.validate();
  return sc;
}

}  // namespace camen
