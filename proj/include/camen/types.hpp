#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace camen {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Task owner. Compute quantities are CPU cycles and cycles/s, powers are
// watts, data sizes are bits. `candidates` holds the ids of edge servers in
// communication range; an empty set marks the user local-only.
struct MobileUser {
  int id = 0;
  double f_u = 0.0;       // local compute capability
  double e_t = 0.0;       // transmission power
  double e_u = 0.0;       // local compute power
  double d_u = 0.0;       // task data size
  double r_u = 0.0;       // required CPU cycles
  std::vector<int> candidates;
  double a = 1.0;         // participation probability
  double gamma_low = 0.0; // channel-gain uniform bounds
  double gamma_high = 0.0;
};

struct EdgeServer {
  int id = 0;
  double f_e = 0.0;
  double e_e = 0.0;
  long long g_e = 0;   // VM count
  long long k_e = 0;   // subcarriers: max concurrent users
  double c_hw = 0.0;   // per-VM hardware cost
};

struct CloudServer {
  int id = 0;
  double f_c = 0.0;
  double e_c = 0.0;
  long long g_c = 0;        // VM count
  double sigma = 0.0;       // Poisson mean of inherent demand
  double p_inherent = 2.0;  // unit payment from inherent requestors
  double q_inherent = 1.5;  // unit compensation to inherent requestors
  double c_hw = 0.0;
};

struct MarketParams {
  double bandwidth_w = 6e6;
  double v1 = 1.0;  // valuation weight on saved time
  double v2 = 1.0;  // valuation weight on saved energy
  double v3 = 1.0;  // energy cost coefficient
  double q_ue = 3.0;  // penalty a user pays for breaking a contract
  double q_eu = 3.0;  // compensation an edge server pays a volunteer
  double q_ec = 2.0;  // penalty an edge server pays for a broken cloud slot
  double tau = 0.1;   // overbooking rate
  double rho1 = 0.3;
  double rho2 = 0.3;
  double rho3 = 0.3;
  double rho4 = 0.3;
  double rho5 = 0.3;
  double p_min_ue = 1.5;
  double p_min_ec = 1.5;
  double dp_mu = 0.1;
  double dp_es = 0.1;
  double u_min = 0.01;
  int exact_enum_limit = 16;       // cap for brute-force enumeration oracles
  long long mc_expectation_samples = 100000;

  void validate() const;
};

struct Scenario {
  std::vector<MobileUser> mus;
  std::vector<EdgeServer> ess;
  std::vector<CloudServer> css;
  MarketParams params;

  void validate() const;
};

}  // namespace camen
