#pragma once

#include <optional>
#include <string>

#include "camen/metrics.hpp"
#include "camen/transaction.hpp"

namespace camen {

// The comparison mechanisms behind one interface. `hybrid` signs forward
// contracts once and falls back to onsite matching; `conventional_spot`
// rebuilds the whole matching every transaction; the greedy and random
// mechanisms trade bargaining for speed.
enum class Mechanism {
  Hybrid,
  ConventionalSpot,
  HybridNoRisk,
  MuPrioritized,
  EsPrioritized,
  RandomM,
};

const char* mechanism_tag(Mechanism m);
Mechanism parse_mechanism(const std::string& tag);
std::vector<Mechanism> all_mechanisms();

// Forward-market phase for mechanisms that have one (empty otherwise).
FuturesOutcome mechanism_futures(const Scenario& sc, Mechanism m,
                                 std::vector<InteractionEvent>* trace = nullptr);

// One practical transaction under the given mechanism.
TransactionOutcome run_mechanism_transaction(const Scenario& sc, Mechanism m,
                                             const FuturesOutcome& futures,
                                             const TransactionSample& sample, Rng& stream,
                                             const ExecuteOptions& opts = {});

struct McOptions {
  int threads = 1;
};

// Futures phase once, then `runs` independent transactions on derived random
// streams. Deterministic for fixed (scenario, mechanism, runs, seed),
// including under parallel execution.
MetricsReport run_monte_carlo(const Scenario& sc, Mechanism m, long long runs, uint64_t seed,
                              const McOptions& opts = {});

}  // namespace camen
