#pragma once

#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "camen/metrics.hpp"
#include "camen/rng.hpp"
#include "camen/types.hpp"

namespace camen {

// Onsite matching inside one transaction: realized valuations and supplies,
// no expectation or risk machinery. Also the two runtime backup plans for
// contractual participants: volunteer selection and cloud-slot settlement.

// Exactly max(0, attending - supply) attendees with the lowest expected
// utility are volunteered; ties volunteer the lower id first.
struct AttendingMu {
  int mu = -1;
  double utility = 0.0;  // expected utility the user brings its server
};
std::vector<int> select_volunteers(const std::vector<AttendingMu>& attending,
                                   long long realized_supply);

// Booked cloud slots settle top-rank-first: the number fulfilled is
// clamp(attendance - g_e, 0, slots). Rank is by `utility` descending; ties
// within one cloud server are broken by a seeded draw, across servers by
// (cloud id, slot index).
struct SettleSlot {
  int cs = -1;
  int slot = -1;
  double utility = 0.0;
};
std::vector<char> settle_cloud_contracts(long long attendance, long long g_e,
                                         const std::vector<SettleSlot>& ranked, Rng& rng);

// ---------------------------------------------------------------------------
// Spot cross-layer matching over residual participants.

struct SpotMu {
  int mu = -1;
  double r_u = 0.0;
  std::vector<int> candidates;          // edge servers with idle resources
  std::vector<double> valuation;        // realized v per candidate
  std::vector<double> edge_cost;        // c^E per candidate
};

struct SpotEs {
  int es = -1;
  long long local_spare = 0;   // free local VMs + unused fulfilled slots
  long long access_spare = 0;  // subcarriers minus users already being served
};

struct SpotCs {
  int cs = -1;
  long long spare = 0;  // VMs left after contracts and inherent demand
  double f_c = 0.0;
  double e_c = 0.0;
  double c_hw = 0.0;
};

struct SpotInput {
  std::vector<SpotMu> mus;
  std::vector<SpotEs> ess;
  std::vector<SpotCs> css;
};

struct SpotOutcome {
  std::map<int, int> mu_to_es;                       // served users only
  std::map<int, double> mu_price;                    // final price of served users
  std::map<std::pair<int, int>, double> ue_price;    // all (mu, es) final prices
  std::map<int, std::pair<int, double>> cloud_served;  // mu -> (cs, slot price)
  std::map<std::tuple<int, int>, double> ec_price;   // (mu, cs) final slot prices
  std::vector<int> released_mus;                     // trimmed in phase 3
  std::map<int, long long> mu_rounds;                // proposal sweeps per user
  long long rounds_phase1 = 0;
  long long rounds_phase2 = 0;
  long long sweeps_phase1 = 0;
  long long sweeps_phase2 = 0;
  long long interactions = 0;
};

struct SpotOptions {
  std::vector<InteractionEvent>* trace = nullptr;
};

SpotOutcome run_spot_matching(const SpotInput& input, const MarketParams& params,
                              const SpotOptions& opts = {});

}  // namespace camen
