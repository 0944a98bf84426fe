#pragma once

#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "camen/expectation.hpp"
#include "camen/metrics.hpp"
#include "camen/types.hpp"

namespace camen {

// Forward-market matching: a price-ascending many-to-one user<->edge game,
// a many-to-many edge<->cloud game for overflow slots, and a cross-layer
// reconciliation pass that trims overcommitted servers and lets any
// participant with unacceptable final risk withdraw to the spot market.

struct ContractTermsUE {
  int mu = -1;
  int es = -1;
  double price = 0.0;
  double q_ue = 0.0;
  double q_eu = 0.0;
};

struct ContractTermsEC {
  int es = -1;
  int cs = -1;
  int slot = -1;        // task slot index within the edge server's request
  double price = 0.0;
  double q_ec = 0.0;
  double r_max = 0.0;   // homogeneous per-task resource estimate
  double e_beta = 0.0;  // final usage probability of the slot
};

struct FuturesOutcome {
  std::vector<int> mu_to_es;                      // -1 when unmatched
  std::vector<std::vector<int>> omega;            // per edge server, sorted
  std::vector<std::vector<long long>> offload_counts;  // [es][cs] booked slots
  std::vector<ContractTermsUE> ue_contracts;
  std::vector<ContractTermsEC> ec_contracts;
  std::map<std::pair<int, int>, double> e_lambda;   // (mu, es) for contracts
  std::map<std::pair<int, int>, double> ue_price;   // final price per candidate pair
  std::map<std::tuple<int, int, int>, double> ec_price;  // (es, slot, cs)
  std::set<std::pair<int, int>> pair_blacklist;   // user fled: volunteer risk
  std::vector<int> released_mus;   // trimmed or withdrawn after phase 3
  std::vector<int> withdrawn_ess;
  std::vector<int> withdrawn_css;
  std::vector<long long> requested_slots;  // per edge server
  std::vector<std::vector<double>> e_beta_requested;     // estimates sent with proposals
  std::vector<std::tuple<int, int, int>> phase2_booked;  // (es, slot, cs) before phase 3
  std::vector<double> p_j_max;             // per edge server (0 when no contracts)
  std::vector<double> r_j_max;
  long long rounds_phase1 = 0;   // max per-pair price versions
  long long rounds_phase2 = 0;
  long long sweeps_phase1 = 0;   // proposal sweeps (diagnostic)
  long long sweeps_phase2 = 0;
  long long interactions = 0;    // user<->edge proposals + responses

  long long booked_slots(int es) const;
};

struct FuturesOptions {
  bool risk_checks = true;                       // off for the no-risk variant
  std::vector<InteractionEvent>* trace = nullptr;
};

struct Proposal {
  int mu = -1;
  double price = 0.0;
};

// Candidate edge servers of one user ordered by expected utility at the given
// prices (non-ascending, ties to the lower id); risk-infeasible pairs are
// excluded. Prices/lambdas default to p_min/0 for missing pairs.
std::vector<int> mu_preference_list(const Scenario& sc, int mu,
                                    const std::map<std::pair<int, int>, double>& prices,
                                    const std::map<std::pair<int, int>, double>& lambda,
                                    const std::set<std::pair<int, int>>& blacklist,
                                    bool risk_checks = true);

struct EsAcceptResult {
  std::vector<int> accepted;                 // sorted user ids
  std::map<int, double> volunteer_prob;      // for the accepted users
  long long planned_slots = 0;
};

// Greedy selection maximizing the server's expected utility under the
// overbooked access cap and the overbooking-risk gate evaluated against the
// planned post-booking capacity.
EsAcceptResult es_accept_set(const Scenario& sc, int es, const std::vector<Proposal>& proposals,
                             bool risk_checks = true);

// Cloud servers ordered for one task slot (non-ascending expected utility of
// the slot to the edge server; ties to the lower cloud id).
std::vector<int> es_task_preference_list(const Scenario& sc, double e_beta_est, double c_ref,
                                         const std::map<int, double>& slot_prices,
                                         const MarketParams& params);

struct Phase1Result {
  std::vector<std::vector<int>> omega;
  std::vector<int> mu_to_es;
  std::map<std::pair<int, int>, double> prices;
  std::map<std::pair<int, int>, double> lambda;
  std::set<std::pair<int, int>> blacklist;
  std::vector<long long> planned_slots;
  long long rounds = 0;
  long long sweeps = 0;
  long long interactions = 0;
};

Phase1Result run_phase1(const Scenario& sc, const FuturesOptions& opts = {});

struct Phase2Result {
  // booked[es] lists the owning cloud id per booked slot (request order).
  std::vector<std::vector<std::pair<int, int>>> booked;  // per es: (slot, cs)
  std::map<std::tuple<int, int, int>, double> prices;    // (es, slot, cs)
  std::vector<long long> requested;
  std::vector<double> p_j_max;
  std::vector<double> r_j_max;
  std::vector<std::vector<double>> e_beta_est;  // per es, per requested slot
  long long rounds = 0;
  long long sweeps = 0;
};

Phase2Result run_phase2(const Scenario& sc, const Phase1Result& p1,
                        const FuturesOptions& opts = {});

FuturesOutcome run_futures_matching(const Scenario& sc, const FuturesOptions& opts = {});

// Views of the signed state in the shapes the expectation engine consumes.
std::vector<EsContractMu> es_contract_view(const Scenario& sc, const FuturesOutcome& out, int es);
std::vector<EsSlot> es_slot_view(const Scenario& sc, const FuturesOutcome& out, int es);
std::vector<CsSlot> cs_slot_view(const Scenario& sc, const FuturesOutcome& out, int cs);
std::vector<EsGroupForCs> cs_group_view(const Scenario& sc, const FuturesOutcome& out);

// Ranking key for cloud slots: gain of using the slot over breaking it.
double slot_rank_key(double c_ref, double price, const MarketParams& params);

}  // namespace camen
