#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "camen/futures.hpp"
#include "camen/rng.hpp"
#include "camen/spot.hpp"
#include "camen/types.hpp"

namespace camen {

// One realization of the market's uncertainty: who shows up, channel gains,
// inherent cloud demand, and messaging delays.
struct TransactionSample {
  std::vector<char> alpha;                      // per user
  std::map<std::pair<int, int>, double> gamma;  // (mu, es) for candidate pairs
  std::vector<long long> epsilon;               // per cloud server, capped at g_c
  std::vector<double> e2e_delay_ms;             // per user
};

TransactionSample sample_transaction(const Scenario& sc, Rng& rng);

struct TransactionOutcome {
  std::vector<double> mu_utility;
  std::vector<double> es_utility;
  std::vector<double> cs_utility;
  double social_welfare = 0.0;
  double social_welfare_direct = 0.0;  // transfer-free recomputation
  long long ni = 0;
  std::map<int, double> ptct_ms;       // served users
  std::vector<std::pair<int, int>> volunteers;            // (mu, es)
  std::map<std::tuple<int, int, int>, char> beta;         // (es, cs, slot)
  SpotOutcome spot;
  double decision_time_ms = 0.0;       // wall clock around matching decisions
};

// Shared utility bookkeeping so every mechanism settles identically. The
// social-welfare identity (all intra-market transfers cancel) is recomputed
// on finish() and enforced to 1e-9 relative tolerance.
class TransactionLedger {
 public:
  TransactionLedger(const Scenario& sc, const TransactionSample& sample);

  void serve_edge(int mu, int es, double price, double gamma);
  void serve_cloud(int mu, int es, int cs, double user_price, double slot_price, double gamma);
  void absent_penalty(int mu, int es);
  void volunteer_compensation(int mu, int es);
  void broken_slot(int es, int cs);
  // Extra cloud load = fulfilled forward slots + spot slots, per cloud server.
  void settle_inherent(const std::vector<long long>& cloud_load);
  void add_ptct(int mu, long long decision_rounds, double transmission_s, double execution_s);

  long long served_count(int es) const;
  TransactionOutcome finish(long long ni, SpotOutcome spot,
                            std::vector<std::pair<int, int>> volunteers,
                            std::map<std::tuple<int, int, int>, char> beta);

 private:
  const Scenario& sc_;
  const TransactionSample& sample_;
  TransactionOutcome out_;
  double direct_ = 0.0;
  std::vector<long long> served_per_es_;
};

struct ExecuteOptions {
  std::vector<InteractionEvent>* trace = nullptr;
};

// One practical transaction under pre-signed contracts: contractual users are
// settled first (cloud-slot fulfillment, volunteer selection, penalties), and
// the leftovers run the onsite matching game. Pass an empty FuturesOutcome to
// get the pure spot market.
TransactionOutcome execute_transaction(const Scenario& sc, const FuturesOutcome& futures,
                                       const TransactionSample& sample, Rng& stream,
                                       const ExecuteOptions& opts = {});

FuturesOutcome empty_futures(const Scenario& sc);

}  // namespace camen
