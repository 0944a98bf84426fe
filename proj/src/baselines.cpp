#include "camen/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "camen/expectation.hpp"

namespace camen {

const char* mechanism_tag(Mechanism m) {
  switch (m) {
    case Mechanism::Hybrid: return "hybrid";
    case Mechanism::ConventionalSpot: return "conventional_spot";
    case Mechanism::HybridNoRisk: return "hybrid_no_risk";
    case Mechanism::MuPrioritized: return "mu_prioritized";
    case Mechanism::EsPrioritized: return "es_prioritized";
    case Mechanism::RandomM: return "random_m";
  }
  throw ConfigError("unknown mechanism");
}

Mechanism parse_mechanism(const std::string& tag) {
  for (Mechanism m : all_mechanisms()) {
    if (tag == mechanism_tag(m)) return m;
  }
  throw ConfigError("unknown mechanism tag '" + tag + "'");
}

std::vector<Mechanism> all_mechanisms() {
  return {Mechanism::Hybrid,        Mechanism::ConventionalSpot, Mechanism::HybridNoRisk,
          Mechanism::MuPrioritized, Mechanism::EsPrioritized,    Mechanism::RandomM};
}

FuturesOutcome mechanism_futures(const Scenario& sc, Mechanism m,
                                 std::vector<InteractionEvent>* trace) {
  FuturesOptions opts;
  opts.trace = trace;
  switch (m) {
    case Mechanism::Hybrid:
      opts.risk_checks = true;
      return run_futures_matching(sc, opts);
    case Mechanism::HybridNoRisk:
      opts.risk_checks = false;
      return run_futures_matching(sc, opts);
    default:
      return empty_futures(sc);
  }
}

namespace {

struct Capacity {
  std::vector<long long> local_used;
  std::vector<long long> total_used;
  std::vector<long long> cs_used;

  Capacity(const Scenario& sc, const TransactionSample& sample)
      : local_used(sc.ess.size(), 0), total_used(sc.ess.size(), 0), cs_used(sc.css.size(), 0) {
    cs_spare_.reserve(sc.css.size());
    for (size_t k = 0; k < sc.css.size(); ++k) {
      cs_spare_.push_back(std::max(0LL, sc.css[k].g_c - sample.epsilon[k]));
    }
  }

  bool local_free(const Scenario& sc, int es) const {
    return local_used[static_cast<size_t>(es)] < sc.ess[static_cast<size_t>(es)].g_e &&
           total_used[static_cast<size_t>(es)] < sc.ess[static_cast<size_t>(es)].k_e;
  }
  bool access_free(const Scenario& sc, int es) const {
    return total_used[static_cast<size_t>(es)] < sc.ess[static_cast<size_t>(es)].k_e;
  }
  int any_cs_free() const {
    for (size_t k = 0; k < cs_used.size(); ++k) {
      if (cs_used[k] < cs_spare_[k]) return static_cast<int>(k);
    }
    return -1;
  }
  int cheapest_cs_free(const Scenario& sc, double r_u) const {
    int best = -1;
    double best_cost = 0.0;
    for (size_t k = 0; k < cs_used.size(); ++k) {
      if (cs_used[k] >= cs_spare_[k]) continue;
      const double cost = cloud_cost(r_u, sc.css[k], sc.params);
      if (best < 0 || cost < best_cost) {
        best = static_cast<int>(k);
        best_cost = cost;
      }
    }
    return best;
  }
  std::vector<int> free_cs_list() const {
    std::vector<int> out;
    for (size_t k = 0; k < cs_used.size(); ++k) {
      if (cs_used[k] < cs_spare_[k]) out.push_back(static_cast<int>(k));
    }
    return out;
  }

 private:
  std::vector<long long> cs_spare_;
};

// Shared tail for the three bargain-free mechanisms: settle inherent demand,
// count two exchanges per attending user, one decision round per served task.
TransactionOutcome finish_greedy(const Scenario& sc, const TransactionSample& sample,
                                 TransactionLedger& ledger, const Capacity& cap,
                                 const std::vector<std::tuple<int, int, int, double>>& served) {
  std::vector<long long> cloud_load(sc.css.size(), 0);
  for (size_t k = 0; k < sc.css.size(); ++k) {
    cloud_load[k] = cap.cs_used[k];
  }
  ledger.settle_inherent(cloud_load);
  long long attending = 0;
  for (char a : sample.alpha) attending += a;
  for (const auto& [mu, es, cs, gamma] : served) {
    const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
    const double rate = sc.params.bandwidth_w * std::log2(1.0 + user.e_t * gamma);
    const double f_exec =
        cs >= 0 ? sc.css[static_cast<size_t>(cs)].f_c : sc.ess[static_cast<size_t>(es)].f_e;
    ledger.add_ptct(mu, 1, user.d_u / rate, user.r_u / f_exec);
  }
  return ledger.finish(2 * attending, SpotOutcome{}, {}, {});
}

TransactionOutcome run_mu_prioritized(const Scenario& sc, const TransactionSample& sample) {
  TransactionLedger ledger(sc, sample);
  Capacity cap(sc, sample);
  std::vector<std::tuple<int, int, int, double>> served;
  for (const MobileUser& user : sc.mus) {
    if (!sample.alpha[static_cast<size_t>(user.id)]) continue;
    int best_es = -1, best_cs = -1;
    double best_u = 0.0, best_gamma = 0.0, best_price = 0.0;
    for (int es : user.candidates) {
      const bool local = cap.local_free(sc, es);
      int cs = -1;
      if (!local) {
        if (!cap.access_free(sc, es)) continue;
        cs = cap.cheapest_cs_free(sc, user.r_u);
        if (cs < 0) continue;
      }
      const double gamma = sample.gamma.at({user.id, es});
      const double v = valuation(user, sc.ess[static_cast<size_t>(es)], gamma, sc.params).v;
      const double price = edge_cost(user, sc.ess[static_cast<size_t>(es)], sc.params);
      const double u = v - price;
      if (u > best_u || (u == best_u && best_es >= 0 && es < best_es)) {
        if (u <= 0.0) continue;
        best_es = es;
        best_cs = local ? -1 : cs;
        best_u = u;
        best_gamma = gamma;
        best_price = price;
      }
    }
    if (best_es < 0) continue;  // processes locally
    if (best_cs < 0) {
      ledger.serve_edge(user.id, best_es, best_price, best_gamma);
      ++cap.local_used[static_cast<size_t>(best_es)];
    } else {
      const double slot_price = cloud_cost(user.r_u, sc.css[static_cast<size_t>(best_cs)],
                                           sc.params);
      ledger.serve_cloud(user.id, best_es, best_cs, best_price, slot_price, best_gamma);
      ++cap.cs_used[static_cast<size_t>(best_cs)];
    }
    ++cap.total_used[static_cast<size_t>(best_es)];
    served.emplace_back(user.id, best_es, best_cs, best_gamma);
  }
  return finish_greedy(sc, sample, ledger, cap, served);
}

TransactionOutcome run_es_prioritized(const Scenario& sc, const TransactionSample& sample) {
  TransactionLedger ledger(sc, sample);
  Capacity cap(sc, sample);
  std::vector<std::tuple<int, int, int, double>> served;
  std::vector<char> assigned(sc.mus.size(), 0);
  for (const EdgeServer& server : sc.ess) {
    // Candidates still available to this server, best margin first.
    struct Cand {
      int mu;
      double v;
      double gamma;
    };
    std::vector<Cand> cands;
    for (const MobileUser& user : sc.mus) {
      if (!sample.alpha[static_cast<size_t>(user.id)] || assigned[static_cast<size_t>(user.id)]) {
        continue;
      }
      if (std::find(user.candidates.begin(), user.candidates.end(), server.id) ==
          user.candidates.end()) {
        continue;
      }
      const double gamma = sample.gamma.at({user.id, server.id});
      cands.push_back({user.id, valuation(user, server, gamma, sc.params).v, gamma});
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      const double ma = a.v - edge_cost(sc.mus[static_cast<size_t>(a.mu)], server, sc.params);
      const double mb = b.v - edge_cost(sc.mus[static_cast<size_t>(b.mu)], server, sc.params);
      if (ma != mb) return ma > mb;
      return a.mu < b.mu;
    });
    for (const Cand& c : cands) {
      if (!cap.access_free(sc, server.id)) break;
      const MobileUser& user = sc.mus[static_cast<size_t>(c.mu)];
      if (cap.local_free(sc, server.id)) {
        if (c.v - edge_cost(user, server, sc.params) <= 0.0) continue;
        ledger.serve_edge(c.mu, server.id, c.v, c.gamma);
        ++cap.local_used[static_cast<size_t>(server.id)];
        served.emplace_back(c.mu, server.id, -1, c.gamma);
      } else {
        const int cs = cap.cheapest_cs_free(sc, user.r_u);
        if (cs < 0) break;
        const double slot_price = cloud_cost(user.r_u, sc.css[static_cast<size_t>(cs)], sc.params);
        if (c.v - slot_price <= 0.0) continue;
        ledger.serve_cloud(c.mu, server.id, cs, c.v, slot_price, c.gamma);
        ++cap.cs_used[static_cast<size_t>(cs)];
        served.emplace_back(c.mu, server.id, cs, c.gamma);
      }
      ++cap.total_used[static_cast<size_t>(server.id)];
      assigned[static_cast<size_t>(c.mu)] = 1;
    }
  }
  return finish_greedy(sc, sample, ledger, cap, served);
}

TransactionOutcome run_random_m(const Scenario& sc, const TransactionSample& sample, Rng& stream) {
  TransactionLedger ledger(sc, sample);
  Capacity cap(sc, sample);
  std::vector<std::tuple<int, int, int, double>> served;
  std::vector<int> order;
  for (const MobileUser& user : sc.mus) {
    if (sample.alpha[static_cast<size_t>(user.id)]) order.push_back(user.id);
  }
  stream.shuffle(order);
  for (int mu_id : order) {
    const MobileUser& user = sc.mus[static_cast<size_t>(mu_id)];
    std::vector<std::pair<int, int>> options;  // (es, cs or -1)
    for (int es : user.candidates) {
      if (cap.local_free(sc, es)) {
        options.emplace_back(es, -1);
      } else if (cap.access_free(sc, es) && cap.any_cs_free() >= 0) {
        options.emplace_back(es, -2);  // cloud server drawn below
      }
    }
    if (options.empty()) continue;
    const auto& [es, kind] =
        options[static_cast<size_t>(stream.uniform_int(0, static_cast<long long>(options.size()) - 1))];
    const double gamma = sample.gamma.at({mu_id, es});
    const double v = valuation(user, sc.ess[static_cast<size_t>(es)], gamma, sc.params).v;
    const double price = 0.5 * (edge_cost(user, sc.ess[static_cast<size_t>(es)], sc.params) + v);
    if (kind == -1) {
      ledger.serve_edge(mu_id, es, price, gamma);
      ++cap.local_used[static_cast<size_t>(es)];
      served.emplace_back(mu_id, es, -1, gamma);
    } else {
      const std::vector<int> free = cap.free_cs_list();
      const int cs = free[static_cast<size_t>(
          stream.uniform_int(0, static_cast<long long>(free.size()) - 1))];
      const double slot_price = cloud_cost(user.r_u, sc.css[static_cast<size_t>(cs)], sc.params);
      ledger.serve_cloud(mu_id, es, cs, price, slot_price, gamma);
      ++cap.cs_used[static_cast<size_t>(cs)];
      served.emplace_back(mu_id, es, cs, gamma);
    }
    ++cap.total_used[static_cast<size_t>(es)];
  }
  return finish_greedy(sc, sample, ledger, cap, served);
}

}  // namespace

TransactionOutcome run_mechanism_transaction(const Scenario& sc, Mechanism m,
                                             const FuturesOutcome& futures,
                                             const TransactionSample& sample, Rng& stream,
                                             const ExecuteOptions& opts) {
  switch (m) {
    case Mechanism::Hybrid:
    case Mechanism::HybridNoRisk:
    case Mechanism::ConventionalSpot:
      return execute_transaction(sc, futures, sample, stream, opts);
    case Mechanism::MuPrioritized:
      return run_mu_prioritized(sc, sample);
    case Mechanism::EsPrioritized:
      return run_es_prioritized(sc, sample);
    case Mechanism::RandomM:
      return run_random_m(sc, sample, stream);
  }
  throw ConfigError("unknown mechanism");
}

namespace {

struct RunStats {
  double sw = 0.0;
  double ni = 0.0;
  double ptct = 0.0;
  double rt_ms = 0.0;
  double mu_util = 0.0;
  double es_util = 0.0;
  double cs_util = 0.0;
};

std::vector<RiskRow> collect_risk_rows(const Scenario& sc, const FuturesOutcome& futures,
                                       size_t per_party) {
  std::vector<RiskRow> rows;
  size_t taken = 0;
  for (const ContractTermsUE& c : futures.ue_contracts) {
    if (taken >= per_party) break;
    const MobileUser& user = sc.mus[static_cast<size_t>(c.mu)];
    const double e_v = expected_valuation(user, sc.ess[static_cast<size_t>(c.es)], sc.params);
    const double el = futures.e_lambda.at({c.mu, c.es});
    const MuEvaluation eval = mu_expected_utility_and_risks(user.a, e_v, c.price, el, sc.params);
    RiskRow row;
    row.party = "mu";
    row.id = c.mu;
    row.r1_u = eval.r1_certified;
    row.r1_u_exact = mu_low_utility_prob_exact(user, sc.ess[static_cast<size_t>(c.es)], c.price,
                                               el, sc.params);
    row.r2_u = eval.r2;
    rows.push_back(row);
    ++taken;
  }
  taken = 0;
  for (int j = 0; j < static_cast<int>(sc.ess.size()) && taken < per_party; ++j) {
    const auto contracts = es_contract_view(sc, futures, j);
    if (contracts.empty()) continue;
    const EsEvaluation eval = es_expected_utility_and_risks(
        contracts, es_slot_view(sc, futures, j), sc.ess[static_cast<size_t>(j)].g_e, sc.params);
    RiskRow row;
    row.party = "es";
    row.id = j;
    row.r1_e = eval.r1_worst;
    row.r2_e = eval.r2;
    rows.push_back(row);
    ++taken;
  }
  taken = 0;
  const std::vector<EsGroupForCs> groups = cs_group_view(sc, futures);
  for (int k = 0; k < static_cast<int>(sc.css.size()) && taken < per_party; ++k) {
    bool involved = false;
    for (const ContractTermsEC& c : futures.ec_contracts) {
      if (c.cs == k) involved = true;
    }
    if (!involved) continue;
    RiskRow row;
    row.party = "cs";
    row.id = k;
    row.r_c = cs_exact_overflow_risk(groups, k, sc.css[static_cast<size_t>(k)].sigma,
                                     sc.css[static_cast<size_t>(k)].g_c);
    rows.push_back(row);
    ++taken;
  }
  return rows;
}

}  // namespace

MetricsReport run_monte_carlo(const Scenario& sc, Mechanism m, long long runs, uint64_t seed,
                              const McOptions& opts) {
  if (runs < 1) throw ConfigError("runs must be >= 1");
  using Clock = std::chrono::steady_clock;

  const Clock::time_point f0 = Clock::now();
  std::vector<InteractionEvent>* no_trace = nullptr;
  const FuturesOutcome futures = mechanism_futures(sc, m, no_trace);
  const double futures_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - f0).count();

  const Rng root(seed);
  std::vector<RunStats> stats(static_cast<size_t>(runs));
  auto worker = [&](long long begin, long long step) {
    for (long long r = begin; r < runs; r += step) {
      Rng stream = root.derive(static_cast<uint64_t>(r) + 1);
      const TransactionSample sample = sample_transaction(sc, stream);
      const Clock::time_point t0 = Clock::now();
      const TransactionOutcome out = run_mechanism_transaction(sc, m, futures, sample, stream);
      const Clock::time_point t1 = Clock::now();
      RunStats& st = stats[static_cast<size_t>(r)];
      st.sw = out.social_welfare;
      st.ni = static_cast<double>(out.ni);
      st.rt_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (!out.ptct_ms.empty()) {
        for (const auto& [mu, ms] : out.ptct_ms) st.ptct += ms;
        st.ptct /= static_cast<double>(out.ptct_ms.size());
      }
      for (double u : out.mu_utility) st.mu_util += u;
      for (double u : out.es_utility) st.es_util += u;
      for (double u : out.cs_utility) st.cs_util += u;
    }
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker, static_cast<long long>(t), static_cast<long long>(threads));
    }
    for (std::thread& t : pool) t.join();
  }

  MetricsReport report;
  report.mechanism = mechanism_tag(m);
  report.runs = runs;
  report.seed = seed;
  report.tau = sc.params.tau;
  double sw_sum = 0.0, sw_sq = 0.0;
  for (const RunStats& st : stats) {
    sw_sum += st.sw;
    report.ni_mean += st.ni;
    report.rt_ms += st.rt_ms;
    report.ptct_mean_ms += st.ptct;
    report.mu_util += st.mu_util;
    report.es_util += st.es_util;
    report.cs_util += st.cs_util;
  }
  const double n = static_cast<double>(runs);
  report.sw_mean = sw_sum / n;
  for (const RunStats& st : stats) {
    sw_sq += (st.sw - report.sw_mean) * (st.sw - report.sw_mean);
  }
  report.sw_stderr = runs > 1 ? std::sqrt(sw_sq / (n * (n - 1.0))) : 0.0;
  // Forward-market effort is amortized over the transactions it serves.
  report.ni_mean = (report.ni_mean + static_cast<double>(futures.interactions)) / n;
  report.rt_ms = (report.rt_ms + futures_ms) / n;
  report.ptct_mean_ms /= n;
  report.mu_util /= n;
  report.es_util /= n;
  report.cs_util /= n;
  report.risk_table = collect_risk_rows(sc, futures, 8);
  return report;
}

}  // namespace camen
