#pragma once

#include <vector>

#include "camen/types.hpp"

namespace camen {

// Valuations, expectations under the three uncertainty sources (user
// participation, channel gain, inherent cloud demand), and the five risk
// quantities used to gate forward contracts.

struct ValuationBreakdown {
  double t_save = 0.0;  // seconds
  double c_save = 0.0;  // joules
  double v = 0.0;       // v1*t_save + v2*c_save
};

// Time/energy a user saves by offloading to an edge server at channel gain
// `gamma`, and the weighted valuation of those savings.
ValuationBreakdown valuation(const MobileUser& mu, const EdgeServer& es, double gamma,
                             const MarketParams& params);

// Expected valuation: the mean channel gain substituted into the rate term.
double expected_valuation(const MobileUser& mu, const EdgeServer& es, const MarketParams& params);

// Diagnostic: the true expectation of the valuation over the channel-gain
// distribution (Gauss-Legendre quadrature). The contract machinery uses
// expected_valuation(); this exposes the gap between the two.
double expected_valuation_quadrature(const MobileUser& mu, const EdgeServer& es,
                                     const MarketParams& params, int points = 64);

// Monetary cost of an edge server serving one task of `r` cycles.
double edge_cost(double r, const EdgeServer& es, const MarketParams& params);
double edge_cost(const MobileUser& mu, const EdgeServer& es, const MarketParams& params);

// Monetary cost of a cloud server processing one offloaded task of `r` cycles.
double cloud_cost(double r, const CloudServer& cs, const MarketParams& params);

// Pr(sum of independent Bernoulli(a_i) > x), exact.
double participation_tail_prob(const std::vector<double>& probs, long long x);

// ---------------------------------------------------------------------------
// Volunteer selection (contract users bumped when realized demand exceeds
// supply). An edge server volunteers the attendees that bring it the lowest
// expected utility; ties volunteer the lower id first.

struct VolunteerEntry {
  int mu = 0;
  double a = 0.0;       // participation probability
  double utility = 0.0; // ranking key: expected utility the user brings the ES
};

// Ranking key: a*(E[v] - p) + (1-a)*q_ue.
double volunteer_rank_utility(double a, double e_v, double price, const MarketParams& params);

// Pr(lambda=1) per entry, aligned with the input order. `capacity` is the
// number of users the server can actually serve (local VMs + booked slots).
// Exact for all sizes: with the documented tie-break, "entry i volunteers"
// is equivalent to "at least `capacity` higher-priority entries attend".
std::vector<double> volunteer_probabilities(const std::vector<VolunteerEntry>& entries,
                                            long long capacity);

// ---------------------------------------------------------------------------
// User-side expected utility and risks.

struct MuEvaluation {
  double utility = 0.0;       // expected utility of the contract
  double r1_certified = 0.0;  // max(0, 1 - utility/u_min): level at which the
                              // transformed low-utility check passes
  double r2 = 0.0;            // Pr(selected as volunteer)
  bool r1_ok = false;
  bool r2_ok = false;
  bool feasible = false;
};

MuEvaluation mu_expected_utility_and_risks(double a, double e_v, double price, double e_lambda,
                                           const MarketParams& params);

// Largest price at which the transformed low-utility check still passes
// (the utility is affine in price, so this inverts in closed form).
double max_price_under_r1(double a, double e_v, double e_lambda, const MarketParams& params);

// Diagnostic: exact Pr(realized utility < u_min) with the volunteer indicator
// treated as an independent Bernoulli(e_lambda). Not used for gating.
double mu_low_utility_prob_exact(const MobileUser& mu, const EdgeServer& es, double price,
                                 double e_lambda, const MarketParams& params);

// ---------------------------------------------------------------------------
// Cloud-slot usage probabilities. Booked slots are ranked by the expected
// utility they bring the edge server (descending; ties by cloud id then slot
// index); a slot is used when realized attendance exceeds the local VM count
// plus the number of higher-ranked slots.

struct SlotSpec {
  int cs = 0;
  int idx = 0;          // slot index within (es, cs)
  double utility = 0.0; // ranking key
};

// E[beta] per slot, aligned with the input order. When `average_within_cs`
// is set, slots of the same cloud server share the mean of their rank values
// (tasks offloaded to one cloud server are treated as homogeneous).
std::vector<double> fulfillment_probabilities(const std::vector<double>& attend_probs,
                                              long long g_e, const std::vector<SlotSpec>& slots,
                                              bool average_within_cs = true);

// ---------------------------------------------------------------------------
// Edge-server expected utility and risks.

struct EsContractMu {
  int mu = 0;
  double a = 0.0;
  double price = 0.0;     // p_ue
  double cost = 0.0;      // c^E for this user's task
  double e_lambda = 0.0;
};

struct EsSlot {
  int cs = 0;
  int idx = 0;
  double price = 0.0;     // p_ec
  double cost_ref = 0.0;  // c^E at the reference (max) task size
  double e_beta = 0.0;
};

struct EsEvaluation {
  double utility_ue = 0.0;  // user-facing part
  double utility_ec = 0.0;  // cloud-facing part (payments out)
  double utility = 0.0;
  double r1_worst = 0.0;    // max over slots of Pr(slot broken)
  double r2 = 0.0;          // Pr(attendance exceeds local VMs + booked slots)
  bool feasible = false;
};

EsEvaluation es_expected_utility_and_risks(const std::vector<EsContractMu>& contract_mus,
                                           const std::vector<EsSlot>& slots, long long g_e,
                                           const MarketParams& params);

// ---------------------------------------------------------------------------
// Cloud-server expected utility and risk. The contract-time computation sees
// only per-slot E[beta] marginals (what proposals carry) and treats slots as
// independent; the exact cross-server law lives below for audits.

struct CsSlot {
  double e_beta = 0.0;
  double price = 0.0;
  double cost = 0.0;  // c^C at the slot's reference task size
};

struct CsEvaluation {
  double utility = 0.0;
  double r_c = 0.0;     // Pr(demand exceeds supply) == E[theta]
  double e_eps = 0.0;   // E[inherent demand] under the capped law
  double e_n = 0.0;     // expected unserved inherent requestors (linear form)
  bool feasible = false;
};

// Inherent demand pmf: Poisson(sigma) with all mass >= cap collapsed to cap.
std::vector<double> capped_poisson_pmf(double sigma, long long cap);

CsEvaluation cs_expected_utility_and_risk(const CloudServer& cs, const std::vector<CsSlot>& slots,
                                          const MarketParams& params);

// Exact overflow risk Pr(used slots + inherent demand > g_c) where slot usage
// is driven by each edge server's attendance law. `slot_cs_by_rank[j]` lists,
// for edge-server group j, the owning cloud id of each booked slot in rank
// order; slots not owned by `cs_id` still occupy ranks.
struct EsGroupForCs {
  std::vector<double> attend_probs;
  long long g_e = 0;
  std::vector<int> slot_cs_by_rank;
};

double cs_exact_overflow_risk(const std::vector<EsGroupForCs>& groups, int cs_id, double sigma,
                              long long g_c);

// Distribution of the number of used slots owned by `cs_id` for one group.
std::vector<double> fulfilled_count_pmf(const EsGroupForCs& group, int cs_id);

}  // namespace camen
