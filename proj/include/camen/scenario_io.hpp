#pragma once

#include <string>
#include <utility>

#include "camen/types.hpp"

namespace camen {

// Scenario configuration: counts, per-field sampling ranges and market
// parameters, read from a key-value text file (see README for the schema).

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  void check(const std::string& name) const {
    if (!(lo <= hi)) throw ConfigError("range '" + name + "' is not well ordered");
  }
};

struct GenConfig {
  long long n_mus = 40;
  long long n_ess = 8;
  long long n_css = 3;
  double candidates_mean = 3.0;  // mean candidate-set size per user
  double cycles_per_bit = 600.0;

  Range f_u{1e9, 1.5e9};
  Range f_e{1e12, 3e12};
  Range f_c{1e12, 3e12};
  Range d_u{8e6, 1.2e7};  // bits (1 - 1.5 megabytes)
  Range e_t{0.5, 0.55};
  Range e_u{0.45, 0.5};
  Range e_e{0.45, 0.5};
  Range e_c{0.45, 0.5};
  Range g_e{4, 5};
  Range k_e{6, 8};
  Range g_c{8, 12};
  Range sigma{2, 4};
  Range a{0.64, 0.96};
  Range gamma{100, 400};
  Range c_hw{0.05, 0.05};
  double p_inherent = 2.0;
  double q_inherent = 1.5;

  MarketParams params;

  void validate() const;
};

// Parse a key-value config file / text. Unknown keys are an error.
GenConfig parse_config_file(const std::string& path);
GenConfig parse_config_text(const std::string& text);

// Random scenario: every field sampled uniformly from its configured range;
// pure function of (config, seed).
Scenario generate_scenario(const GenConfig& config, uint64_t seed);

// Scenario from two delimiter-separated tables with latitude/longitude
// columns: each station row becomes an edge server, each user row a mobile
// user whose candidate set is every station within `coverage_radius_m`
// great-circle meters. Attributes are sampled from `config` ranges.
Scenario load_eua_scenario(const std::string& stations_file, const std::string& users_file,
                           double coverage_radius_m, const GenConfig& config, uint64_t seed);

// Great-circle distance in meters on a 6371 km sphere.
double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

}  // namespace camen
