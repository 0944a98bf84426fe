#include "camen/futures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace camen {

namespace {

constexpr double kPriceEps = 1e-9;

long long floor_eps(double x) { return static_cast<long long>(std::floor(x + 1e-9)); }
long long ceil_eps(double x) { return static_cast<long long>(std::ceil(x - 1e-9)); }

double pair_price(const std::map<std::pair<int, int>, double>& prices, int mu, int es,
                  double fallback) {
  auto it = prices.find({mu, es});
  return it == prices.end() ? fallback : it->second;
}

double pair_lambda(const std::map<std::pair<int, int>, double>& lambda, int mu, int es) {
  auto it = lambda.find({mu, es});
  return it == lambda.end() ? 0.0 : it->second;
}

// Per-user margin the edge server sees during selection (volunteer risk not
// yet known, so it is evaluated at zero).
double accept_margin(const MobileUser& mu, double price, double cost, const MarketParams& params) {
  return mu.a * (price - cost) + (1.0 - mu.a) * params.q_ue;
}

// Number of cloud slots an edge server plans to request for a tentative
// accepted set: enough to cover the demand beyond its overbooked local VMs,
// trimmed to the slots whose estimated usage keeps the per-slot break risk
// acceptable.
long long planned_slot_count(const std::vector<double>& attend, long long g_e, double tau,
                             const MarketParams& params, bool risk_checks) {
  const long long n = static_cast<long long>(attend.size());
  const double local = (1.0 + tau) * static_cast<double>(g_e);
  if (static_cast<double>(n) <= local + 1e-9) return 0;
  const long long requested = ceil_eps((static_cast<double>(n) - local) / (1.0 + tau));
  if (!risk_checks) return requested;
  const std::vector<double> pmf = poisson_binomial_pmf(attend);
  long long plan = 0;
  for (long long idx = 0; idx < requested; ++idx) {
    const double e_beta = pmf_tail(pmf, g_e + idx);
    if (1.0 - e_beta <= params.rho3 + 1e-12) {
      ++plan;
    } else {
      break;  // usage probability only drops with rank
    }
  }
  return plan;
}

}  // namespace

long long FuturesOutcome::booked_slots(int es) const {
  long long total = 0;
  for (long long c : offload_counts[static_cast<size_t>(es)]) total += c;
  return total;
}

double slot_rank_key(double c_ref, double price, const MarketParams& params) {
  return c_ref + params.q_ec - price;
}

std::vector<int> mu_preference_list(const Scenario& sc, int mu,
                                    const std::map<std::pair<int, int>, double>& prices,
                                    const std::map<std::pair<int, int>, double>& lambda,
                                    const std::set<std::pair<int, int>>& blacklist,
                                    bool risk_checks) {
  const MobileUser& user = sc.mus.at(static_cast<size_t>(mu));
  std::vector<std::pair<double, int>> scored;
  for (int es : user.candidates) {
    if (blacklist.count({mu, es})) continue;
    const double p = pair_price(prices, mu, es, sc.params.p_min_ue);
    const double e_v = expected_valuation(user, sc.ess[static_cast<size_t>(es)], sc.params);
    const double el = pair_lambda(lambda, mu, es);
    const MuEvaluation eval = mu_expected_utility_and_risks(user.a, e_v, p, el, sc.params);
    if (risk_checks) {
      if (p > e_v + kPriceEps) continue;  // payment must not exceed the expected valuation
      if (!eval.feasible) continue;
    }
    scored.emplace_back(eval.utility, es);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(scored.size());
  for (const auto& [u, es] : scored) out.push_back(es);
  return out;
}

EsAcceptResult es_accept_set(const Scenario& sc, int es, const std::vector<Proposal>& proposals,
                             bool risk_checks) {
  const EdgeServer& server = sc.ess.at(static_cast<size_t>(es));
  const MarketParams& params = sc.params;
  const long long access_cap = floor_eps((1.0 + params.tau) * static_cast<double>(server.k_e));

  struct Cand {
    int mu;
    double margin;
    double a;
  };
  std::vector<Cand> cands;
  cands.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    const MobileUser& user = sc.mus.at(static_cast<size_t>(p.mu));
    const double cost = edge_cost(user, server, params);
    cands.push_back({p.mu, accept_margin(user, p.price, cost, params), user.a});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.margin != b.margin) return a.margin > b.margin;
    return a.mu < b.mu;
  });

  EsAcceptResult out;
  std::vector<double> attend;
  for (const Cand& c : cands) {
    if (c.margin <= 0.0) break;
    if (static_cast<long long>(out.accepted.size()) + 1 > access_cap) break;
    attend.push_back(c.a);
    const long long plan = planned_slot_count(attend, server.g_e, params.tau, params, risk_checks);
    const double supply_cap = (1.0 + params.tau) * static_cast<double>(server.g_e + plan);
    bool ok = static_cast<double>(attend.size()) <= supply_cap + 1e-9;
    if (ok && risk_checks) {
      ok = participation_tail_prob(attend, server.g_e + plan) <= params.rho4 + 1e-12;
    }
    if (ok) {
      out.accepted.push_back(c.mu);
      out.planned_slots = plan;
    } else {
      attend.pop_back();  // a later, smaller proposer may still fit
    }
  }
  std::sort(out.accepted.begin(), out.accepted.end());

  // Volunteer probabilities for the notification step.
  std::vector<VolunteerEntry> entries;
  entries.reserve(out.accepted.size());
  for (int mu : out.accepted) {
    const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
    double price = params.p_min_ue;
    for (const Proposal& p : proposals) {
      if (p.mu == mu) price = p.price;
    }
    const double e_v = expected_valuation(user, server, params);
    entries.push_back({mu, user.a, volunteer_rank_utility(user.a, e_v, price, params)});
  }
  const std::vector<double> probs =
      volunteer_probabilities(entries, server.g_e + out.planned_slots);
  for (size_t i = 0; i < entries.size(); ++i) {
    out.volunteer_prob[entries[i].mu] = probs[i];
  }
  return out;
}

Phase1Result run_phase1(const Scenario& sc, const FuturesOptions& opts) {
  const MarketParams& params = sc.params;
  const int n_mus = static_cast<int>(sc.mus.size());
  const int n_ess = static_cast<int>(sc.ess.size());

  Phase1Result res;
  res.mu_to_es.assign(static_cast<size_t>(n_mus), -1);
  res.omega.assign(static_cast<size_t>(n_ess), {});
  res.planned_slots.assign(static_cast<size_t>(n_ess), 0);

  std::map<std::pair<int, int>, long long> versions;
  for (const MobileUser& mu : sc.mus) {
    for (int es : mu.candidates) {
      res.prices[{mu.id, es}] = params.p_min_ue;
      versions[{mu.id, es}] = 1;
    }
  }

  // Generous abort guard; the per-pair version bound is the real invariant.
  double max_e_v = 0.0;
  long long pair_count = 0;
  for (const MobileUser& mu : sc.mus) {
    for (int es : mu.candidates) {
      max_e_v = std::max(max_e_v, expected_valuation(mu, sc.ess[static_cast<size_t>(es)], params));
      ++pair_count;
    }
  }
  const long long per_pair_bound =
      ceil_eps(std::max(0.0, max_e_v - params.p_min_ue) / params.dp_mu) + 1;
  const long long sweep_guard = 4 * per_pair_bound + 2 * pair_count + 16;

  std::vector<std::pair<int, int>> prev_proposals;
  while (true) {
    ++res.sweeps;
    if (res.sweeps > sweep_guard) {
      throw InternalError("user-edge matching failed to settle within the sweep guard");
    }
    std::vector<std::vector<Proposal>> proposals(static_cast<size_t>(n_ess));
    std::vector<std::pair<int, int>> proposal_pairs;
    for (int i = 0; i < n_mus; ++i) {
      const std::vector<int> prefs =
          mu_preference_list(sc, i, res.prices, res.lambda, res.blacklist, opts.risk_checks);
      if (prefs.empty()) continue;
      const int target = prefs.front();
      proposals[static_cast<size_t>(target)].push_back(
          {i, res.prices[{i, target}]});
      proposal_pairs.emplace_back(i, target);
      ++res.interactions;
      if (opts.trace) opts.trace->push_back({InteractionEvent::Kind::Proposal, i, target});
    }

    std::fill(res.mu_to_es.begin(), res.mu_to_es.end(), -1);
    for (int j = 0; j < n_ess; ++j) {
      res.omega[static_cast<size_t>(j)].clear();
      if (proposals[static_cast<size_t>(j)].empty()) {
        res.planned_slots[static_cast<size_t>(j)] = 0;
        continue;
      }
      const EsAcceptResult acc = es_accept_set(sc, j, proposals[static_cast<size_t>(j)],
                                               opts.risk_checks);
      res.omega[static_cast<size_t>(j)] = acc.accepted;
      res.planned_slots[static_cast<size_t>(j)] = acc.planned_slots;
      for (int mu : acc.accepted) res.mu_to_es[static_cast<size_t>(mu)] = j;
      res.interactions += static_cast<long long>(proposals[static_cast<size_t>(j)].size());
      if (opts.trace) {
        for (const Proposal& p : proposals[static_cast<size_t>(j)]) {
          opts.trace->push_back({InteractionEvent::Kind::Response, p.mu, j});
        }
      }
      // Notify accepted users of their volunteer odds; a user whose odds
      // breach its tolerance walks away from this server for good.
      for (const auto& [mu, prob] : acc.volunteer_prob) {
        res.lambda[{mu, j}] = prob;
        if (opts.risk_checks && prob > params.rho2 + 1e-12) {
          res.blacklist.insert({mu, j});
        }
      }
    }

    bool changed = false;
    for (const auto& [mu, es] : proposal_pairs) {
      if (res.mu_to_es[static_cast<size_t>(mu)] == es) continue;  // accepted
      const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
      const double e_v = expected_valuation(user, sc.ess[static_cast<size_t>(es)], params);
      double cap = e_v;
      if (opts.risk_checks) {
        cap = std::min(cap, max_price_under_r1(user.a, e_v, 0.0, params));
      }
      double& price = res.prices[{mu, es}];
      if (price < cap - kPriceEps) {
        price = std::min(price + params.dp_mu, cap);
        long long& v = versions[{mu, es}];
        ++v;
        if (v > per_pair_bound + 1) {
          throw InternalError("pair price escalated beyond its analytic bound");
        }
        changed = true;
      }
    }

    if (!changed && proposal_pairs == prev_proposals) break;
    prev_proposals = std::move(proposal_pairs);
  }

  for (const auto& [pair, v] : versions) res.rounds = std::max(res.rounds, v);
  return res;
}

std::vector<int> es_task_preference_list(const Scenario& sc, double e_beta_est, double c_ref,
                                         const std::map<int, double>& slot_prices,
                                         const MarketParams& params) {
  std::vector<std::pair<double, int>> scored;
  for (const auto& [cs, price] : slot_prices) {
    const double utility = -(e_beta_est * (price - c_ref) + (1.0 - e_beta_est) * params.q_ec);
    scored.emplace_back(utility, cs);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(scored.size());
  for (const auto& [u, cs] : scored) out.push_back(cs);
  return out;
}

Phase2Result run_phase2(const Scenario& sc, const Phase1Result& p1, const FuturesOptions& opts) {
  const MarketParams& params = sc.params;
  const int n_ess = static_cast<int>(sc.ess.size());
  const int n_css = static_cast<int>(sc.css.size());

  Phase2Result res;
  res.booked.assign(static_cast<size_t>(n_ess), {});
  res.requested.assign(static_cast<size_t>(n_ess), 0);
  res.p_j_max.assign(static_cast<size_t>(n_ess), 0.0);
  res.r_j_max.assign(static_cast<size_t>(n_ess), 0.0);
  res.e_beta_est.assign(static_cast<size_t>(n_ess), {});

  // Only edge servers whose accepted demand exceeds their overbooked local
  // VMs shop for cloud slots.
  std::vector<double> c_ref(static_cast<size_t>(n_ess), 0.0);
  for (int j = 0; j < n_ess; ++j) {
    const std::vector<int>& members = p1.omega[static_cast<size_t>(j)];
    if (members.empty()) continue;
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    double pmax = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    std::vector<double> attend;
    for (int mu : members) {
      pmax = std::min(pmax, pair_price(p1.prices, mu, j, params.p_min_ue));
      rmax = std::max(rmax, sc.mus[static_cast<size_t>(mu)].r_u);
      attend.push_back(sc.mus[static_cast<size_t>(mu)].a);
    }
    res.p_j_max[static_cast<size_t>(j)] = pmax;
    res.r_j_max[static_cast<size_t>(j)] = rmax;
    c_ref[static_cast<size_t>(j)] = edge_cost(rmax, server, params);
    const long long req =
        planned_slot_count(attend, server.g_e, params.tau, params, opts.risk_checks);
    res.requested[static_cast<size_t>(j)] = req;
    const std::vector<double> pmf = poisson_binomial_pmf(attend);
    for (long long idx = 0; idx < req; ++idx) {
      res.e_beta_est[static_cast<size_t>(j)].push_back(pmf_tail(pmf, server.g_e + idx));
    }
  }

  std::map<std::tuple<int, int, int>, long long> versions;
  double global_cap = 0.0;
  long long pair_count = 0;
  for (int j = 0; j < n_ess; ++j) {
    for (long long s = 0; s < res.requested[static_cast<size_t>(j)]; ++s) {
      for (int k = 0; k < n_css; ++k) {
        res.prices[{j, static_cast<int>(s), k}] = params.p_min_ec;
        versions[{j, static_cast<int>(s), k}] = 1;
        ++pair_count;
      }
      global_cap = std::max(global_cap, res.p_j_max[static_cast<size_t>(j)]);
    }
  }
  const long long per_pair_bound =
      ceil_eps(std::max(0.0, global_cap - params.p_min_ec) / params.dp_es) + 1;
  const long long sweep_guard = 4 * per_pair_bound + 2 * pair_count + 16;

  struct SlotProposal {
    int es;
    int slot;
    double price;
    double e_beta;
    double cost;  // cloud-side cost of the homogeneous task
  };

  std::vector<std::pair<std::pair<int, int>, int>> prev_proposals;
  while (true) {
    ++res.sweeps;
    if (res.sweeps > sweep_guard) {
      throw InternalError("edge-cloud matching failed to settle within the sweep guard");
    }
    std::vector<std::vector<SlotProposal>> proposals(static_cast<size_t>(n_css));
    std::vector<std::pair<std::pair<int, int>, int>> proposal_pairs;
    for (int j = 0; j < n_ess; ++j) {
      for (long long s = 0; s < res.requested[static_cast<size_t>(j)]; ++s) {
        std::map<int, double> slot_prices;
        for (int k = 0; k < n_css; ++k) {
          slot_prices[k] = res.prices[{j, static_cast<int>(s), k}];
        }
        const double e_beta = res.e_beta_est[static_cast<size_t>(j)][static_cast<size_t>(s)];
        const std::vector<int> prefs =
            es_task_preference_list(sc, e_beta, c_ref[static_cast<size_t>(j)], slot_prices, params);
        if (prefs.empty()) continue;
        const int k = prefs.front();
        proposals[static_cast<size_t>(k)].push_back(
            {j, static_cast<int>(s), slot_prices[k], e_beta,
             cloud_cost(res.r_j_max[static_cast<size_t>(j)], sc.css[static_cast<size_t>(k)],
                        params)});
        proposal_pairs.push_back({{j, static_cast<int>(s)}, k});
      }
    }

    for (auto& b : res.booked) b.clear();
    std::vector<std::vector<std::pair<int, int>>> booked_at(static_cast<size_t>(n_css));
    for (int k = 0; k < n_css; ++k) {
      std::vector<SlotProposal>& cands = proposals[static_cast<size_t>(k)];
      std::sort(cands.begin(), cands.end(), [&](const SlotProposal& a, const SlotProposal& b) {
        const double ma = a.e_beta * (a.price - a.cost) + (1.0 - a.e_beta) * params.q_ec;
        const double mb = b.e_beta * (b.price - b.cost) + (1.0 - b.e_beta) * params.q_ec;
        if (ma != mb) return ma > mb;
        if (a.es != b.es) return a.es < b.es;
        return a.slot < b.slot;
      });
      const CloudServer& cloud = sc.css[static_cast<size_t>(k)];
      std::vector<double> betas;
      for (const SlotProposal& cand : cands) {
        if (cand.price < cand.cost - kPriceEps) continue;  // below serving cost
        const double margin =
            cand.e_beta * (cand.price - cand.cost) + (1.0 - cand.e_beta) * params.q_ec;
        if (margin <= 0.0) break;
        if (static_cast<long long>(betas.size()) + 1 > cloud.g_c) break;
        if (opts.risk_checks) {
          betas.push_back(cand.e_beta);
          const std::vector<double> eps_pmf = capped_poisson_pmf(cloud.sigma, cloud.g_c);
          const std::vector<double> beta_pmf = poisson_binomial_pmf(betas);
          double risk = 0.0;
          for (long long h = 0; h <= cloud.g_c; ++h) {
            risk += eps_pmf[static_cast<size_t>(h)] * pmf_tail(beta_pmf, cloud.g_c - h);
          }
          if (risk > params.rho5 + 1e-12) {
            betas.pop_back();
            continue;
          }
        }
        if (!opts.risk_checks) betas.push_back(cand.e_beta);
        booked_at[static_cast<size_t>(k)].push_back({cand.es, cand.slot});
      }
    }

    bool changed = false;
    for (const auto& [slot_pair, k] : proposal_pairs) {
      const auto& [j, s] = slot_pair;
      const auto& winners = booked_at[static_cast<size_t>(k)];
      const bool accepted =
          std::find(winners.begin(), winners.end(), std::make_pair(j, s)) != winners.end();
      if (accepted) {
        res.booked[static_cast<size_t>(j)].push_back({s, k});
        continue;
      }
      double& price = res.prices[{j, s, k}];
      const double cap = res.p_j_max[static_cast<size_t>(j)];
      if (price < cap - kPriceEps) {
        price = std::min(price + params.dp_es, cap);
        long long& v = versions[{j, s, k}];
        ++v;
        if (v > per_pair_bound + 1) {
          throw InternalError("slot price escalated beyond its analytic bound");
        }
        changed = true;
      }
    }

    if (!changed && proposal_pairs == prev_proposals) break;
    prev_proposals = std::move(proposal_pairs);
  }

  for (auto& b : res.booked) {
    std::sort(b.begin(), b.end());
  }
  for (const auto& [key, v] : versions) res.rounds = std::max(res.rounds, v);
  return res;
}

namespace {

struct SignedState {
  std::vector<std::vector<int>> omega;
  std::vector<int> mu_to_es;
  // Booked slots per edge server: (slot index, cloud id, price).
  std::vector<std::vector<std::tuple<int, int, double>>> slots;
};

// Trim servers whose accepted demand exceeds the overbooked supply backed by
// the slots they actually secured. Returns the released users.
std::vector<int> trim_to_supply(const Scenario& sc, SignedState& st,
                                const std::map<std::pair<int, int>, double>& prices) {
  std::vector<int> released;
  for (int j = 0; j < static_cast<int>(sc.ess.size()); ++j) {
    std::vector<int>& members = st.omega[static_cast<size_t>(j)];
    const long long cap = floor_eps(
        (1.0 + sc.params.tau) *
        static_cast<double>(sc.ess[static_cast<size_t>(j)].g_e +
                            static_cast<long long>(st.slots[static_cast<size_t>(j)].size())));
    if (static_cast<long long>(members.size()) <= cap) continue;
    std::vector<std::pair<double, int>> ranked;
    for (int mu : members) {
      const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
      const double cost = edge_cost(user, sc.ess[static_cast<size_t>(j)], sc.params);
      const double p = pair_price(prices, mu, j, sc.params.p_min_ue);
      ranked.emplace_back(accept_margin(user, p, cost, sc.params), mu);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    members.clear();
    for (size_t i = 0; i < ranked.size(); ++i) {
      if (static_cast<long long>(i) < cap) {
        members.push_back(ranked[i].second);
      } else {
        st.mu_to_es[static_cast<size_t>(ranked[i].second)] = -1;
        released.push_back(ranked[i].second);
      }
    }
    std::sort(members.begin(), members.end());
  }
  return released;
}

}  // namespace

FuturesOutcome run_futures_matching(const Scenario& sc, const FuturesOptions& opts) {
  sc.validate();
  const MarketParams& params = sc.params;
  const int n_ess = static_cast<int>(sc.ess.size());
  const int n_css = static_cast<int>(sc.css.size());

  const Phase1Result p1 = run_phase1(sc, opts);
  const Phase2Result p2 = run_phase2(sc, p1, opts);

  FuturesOutcome out;
  out.ue_price = p1.prices;
  out.ec_price = p2.prices;
  out.pair_blacklist = p1.blacklist;
  out.requested_slots = p2.requested;
  out.e_beta_requested = p2.e_beta_est;
  for (int j = 0; j < n_ess; ++j) {
    for (const auto& [slot, cs] : p2.booked[static_cast<size_t>(j)]) {
      out.phase2_booked.push_back({j, slot, cs});
    }
  }
  out.p_j_max = p2.p_j_max;
  out.r_j_max = p2.r_j_max;
  out.rounds_phase1 = p1.rounds;
  out.rounds_phase2 = p2.rounds;
  out.sweeps_phase1 = p1.sweeps;
  out.sweeps_phase2 = p2.sweeps;
  out.interactions = p1.interactions;

  SignedState st;
  st.omega = p1.omega;
  st.mu_to_es = p1.mu_to_es;
  st.slots.assign(static_cast<size_t>(n_ess), {});
  for (int j = 0; j < n_ess; ++j) {
    for (const auto& [slot, cs] : p2.booked[static_cast<size_t>(j)]) {
      st.slots[static_cast<size_t>(j)].push_back({slot, cs, p2.prices.at({j, slot, cs})});
    }
  }

  // Phase 3: trim to the secured supply, then audit final risks; anyone whose
  // risk lands beyond its threshold abandons the forward market entirely.
  std::vector<int> released = trim_to_supply(sc, st, p1.prices);
  std::set<int> gone_ess, gone_css;

  const int max_iters = static_cast<int>(sc.mus.size() + sc.ess.size() + sc.css.size()) + 4;
  for (int iter = 0;; ++iter) {
    if (iter > max_iters) throw InternalError("phase-3 risk reconciliation did not settle");
    bool changed = false;
    if (opts.risk_checks) {
      // Final volunteer odds and slot-usage odds at the secured supply.
      std::vector<std::map<int, double>> lambda_now(static_cast<size_t>(n_ess));
      std::vector<std::vector<double>> beta_now(static_cast<size_t>(n_ess));
      for (int j = 0; j < n_ess; ++j) {
        const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
        const std::vector<int>& members = st.omega[static_cast<size_t>(j)];
        std::vector<VolunteerEntry> entries;
        std::vector<double> attend;
        for (int mu : members) {
          const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
          const double e_v = expected_valuation(user, server, params);
          const double p = pair_price(p1.prices, mu, j, params.p_min_ue);
          entries.push_back({mu, user.a, volunteer_rank_utility(user.a, e_v, p, params)});
          attend.push_back(user.a);
        }
        const long long supply =
            server.g_e + static_cast<long long>(st.slots[static_cast<size_t>(j)].size());
        const std::vector<double> probs = volunteer_probabilities(entries, supply);
        for (size_t i = 0; i < entries.size(); ++i) {
          lambda_now[static_cast<size_t>(j)][entries[i].mu] = probs[i];
        }
        std::vector<SlotSpec> specs;
        for (const auto& [slot, cs, price] : st.slots[static_cast<size_t>(j)]) {
          specs.push_back({cs, slot, slot_rank_key(edge_cost(p2.r_j_max[static_cast<size_t>(j)],
                                                             server, params),
                                                   price, params)});
        }
        beta_now[static_cast<size_t>(j)] =
            fulfillment_probabilities(attend, server.g_e, specs, true);
      }

      // Users first.
      for (int j = 0; j < n_ess && !changed; ++j) {
        for (int mu : st.omega[static_cast<size_t>(j)]) {
          const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
          const double e_v = expected_valuation(user, sc.ess[static_cast<size_t>(j)], params);
          const double p = pair_price(p1.prices, mu, j, params.p_min_ue);
          const MuEvaluation eval = mu_expected_utility_and_risks(
              user.a, e_v, p, lambda_now[static_cast<size_t>(j)].at(mu), params);
          if (!eval.feasible) {
            auto& members = st.omega[static_cast<size_t>(j)];
            members.erase(std::find(members.begin(), members.end(), mu));
            st.mu_to_es[static_cast<size_t>(mu)] = -1;
            released.push_back(mu);
            changed = true;
            break;
          }
        }
      }
      // Edge servers.
      for (int j = 0; j < n_ess && !changed; ++j) {
        if (gone_ess.count(j) || st.omega[static_cast<size_t>(j)].empty()) continue;
        const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
        std::vector<double> attend;
        for (int mu : st.omega[static_cast<size_t>(j)]) {
          attend.push_back(sc.mus[static_cast<size_t>(mu)].a);
        }
        double r1_worst = 0.0;
        for (double b : beta_now[static_cast<size_t>(j)]) r1_worst = std::max(r1_worst, 1.0 - b);
        const double r2 = participation_tail_prob(
            attend,
            server.g_e + static_cast<long long>(st.slots[static_cast<size_t>(j)].size()));
        if (r1_worst > params.rho3 + 1e-12 || r2 > params.rho4 + 1e-12) {
          for (int mu : st.omega[static_cast<size_t>(j)]) {
            st.mu_to_es[static_cast<size_t>(mu)] = -1;
            released.push_back(mu);
          }
          st.omega[static_cast<size_t>(j)].clear();
          st.slots[static_cast<size_t>(j)].clear();
          gone_ess.insert(j);
          changed = true;
        }
      }
      // Cloud servers, judged on the exact cross-server law.
      for (int k = 0; k < n_css && !changed; ++k) {
        if (gone_css.count(k)) continue;
        std::vector<EsGroupForCs> groups;
        bool involved = false;
        for (int j = 0; j < n_ess; ++j) {
          if (st.slots[static_cast<size_t>(j)].empty()) continue;
          EsGroupForCs g;
          g.g_e = sc.ess[static_cast<size_t>(j)].g_e;
          for (int mu : st.omega[static_cast<size_t>(j)]) {
            g.attend_probs.push_back(sc.mus[static_cast<size_t>(mu)].a);
          }
          std::vector<SlotSpec> specs;
          const double ref_cost =
              edge_cost(p2.r_j_max[static_cast<size_t>(j)], sc.ess[static_cast<size_t>(j)], params);
          for (const auto& [slot, cs, price] : st.slots[static_cast<size_t>(j)]) {
            specs.push_back({cs, slot, slot_rank_key(ref_cost, price, params)});
          }
          std::sort(specs.begin(), specs.end(), [](const SlotSpec& a, const SlotSpec& b) {
            if (a.utility != b.utility) return a.utility > b.utility;
            if (a.cs != b.cs) return a.cs < b.cs;
            return a.idx < b.idx;
          });
          for (const SlotSpec& s : specs) {
            g.slot_cs_by_rank.push_back(s.cs);
            if (s.cs == k) involved = true;
          }
          groups.push_back(std::move(g));
        }
        if (!involved) continue;
        const CloudServer& cloud = sc.css[static_cast<size_t>(k)];
        const double risk = cs_exact_overflow_risk(groups, k, cloud.sigma, cloud.g_c);
        if (risk > params.rho5 + 1e-12) {
          for (int j = 0; j < n_ess; ++j) {
            auto& slots = st.slots[static_cast<size_t>(j)];
            slots.erase(std::remove_if(slots.begin(), slots.end(),
                                       [&](const auto& t) { return std::get<1>(t) == k; }),
                        slots.end());
          }
          gone_css.insert(k);
          changed = true;
        }
      }
    }
    if (changed) {
      for (int mu : trim_to_supply(sc, st, p1.prices)) released.push_back(mu);
      continue;
    }
    break;
  }

  // Sign contracts for the surviving state.
  out.mu_to_es = st.mu_to_es;
  out.omega = st.omega;
  out.offload_counts.assign(static_cast<size_t>(n_ess),
                            std::vector<long long>(static_cast<size_t>(n_css), 0));
  for (int j = 0; j < n_ess; ++j) {
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    for (int mu : st.omega[static_cast<size_t>(j)]) {
      out.ue_contracts.push_back(
          {mu, j, pair_price(p1.prices, mu, j, params.p_min_ue), params.q_ue, params.q_eu});
    }
    std::vector<double> attend;
    std::vector<VolunteerEntry> entries;
    for (int mu : st.omega[static_cast<size_t>(j)]) {
      const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
      attend.push_back(user.a);
      entries.push_back({mu, user.a,
                         volunteer_rank_utility(user.a, expected_valuation(user, server, params),
                                                pair_price(p1.prices, mu, j, params.p_min_ue),
                                                params)});
    }
    const long long supply =
        server.g_e + static_cast<long long>(st.slots[static_cast<size_t>(j)].size());
    const std::vector<double> probs = volunteer_probabilities(entries, supply);
    for (size_t i = 0; i < entries.size(); ++i) {
      out.e_lambda[{entries[i].mu, j}] = probs[i];
    }
    std::vector<SlotSpec> specs;
    const double ref_cost = edge_cost(p2.r_j_max[static_cast<size_t>(j)], server, params);
    for (const auto& [slot, cs, price] : st.slots[static_cast<size_t>(j)]) {
      specs.push_back({cs, slot, slot_rank_key(ref_cost, price, params)});
    }
    const std::vector<double> betas = fulfillment_probabilities(attend, server.g_e, specs, true);
    for (size_t s = 0; s < st.slots[static_cast<size_t>(j)].size(); ++s) {
      const auto& [slot, cs, price] = st.slots[static_cast<size_t>(j)][s];
      out.offload_counts[static_cast<size_t>(j)][static_cast<size_t>(cs)] += 1;
      out.ec_contracts.push_back({j, cs, slot, price, params.q_ec,
                                  p2.r_j_max[static_cast<size_t>(j)], betas[s]});
    }
  }
  std::sort(out.released_mus.begin(), out.released_mus.end());
  out.released_mus = released;
  std::sort(out.released_mus.begin(), out.released_mus.end());
  out.released_mus.erase(std::unique(out.released_mus.begin(), out.released_mus.end()),
                         out.released_mus.end());
  out.withdrawn_ess.assign(gone_ess.begin(), gone_ess.end());
  out.withdrawn_css.assign(gone_css.begin(), gone_css.end());
  return out;
}

std::vector<EsContractMu> es_contract_view(const Scenario& sc, const FuturesOutcome& out, int es) {
  std::vector<EsContractMu> view;
  for (int mu : out.omega[static_cast<size_t>(es)]) {
    const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
    EsContractMu m;
    m.mu = mu;
    m.a = user.a;
    m.price = out.ue_price.at({mu, es});
    m.cost = edge_cost(user, sc.ess[static_cast<size_t>(es)], sc.params);
    m.e_lambda = out.e_lambda.at({mu, es});
    view.push_back(m);
  }
  return view;
}

std::vector<EsSlot> es_slot_view(const Scenario& sc, const FuturesOutcome& out, int es) {
  std::vector<EsSlot> view;
  for (const ContractTermsEC& c : out.ec_contracts) {
    if (c.es != es) continue;
    EsSlot s;
    s.cs = c.cs;
    s.idx = c.slot;
    s.price = c.price;
    s.cost_ref = edge_cost(c.r_max, sc.ess[static_cast<size_t>(es)], sc.params);
    s.e_beta = c.e_beta;
    view.push_back(s);
  }
  return view;
}

std::vector<CsSlot> cs_slot_view(const Scenario& sc, const FuturesOutcome& out, int cs) {
  std::vector<CsSlot> view;
  for (const ContractTermsEC& c : out.ec_contracts) {
    if (c.cs != cs) continue;
    CsSlot s;
    s.e_beta = c.e_beta;
    s.price = c.price;
    s.cost = cloud_cost(c.r_max, sc.css[static_cast<size_t>(cs)], sc.params);
    view.push_back(s);
  }
  return view;
}

std::vector<EsGroupForCs> cs_group_view(const Scenario& sc, const FuturesOutcome& out) {
  std::vector<EsGroupForCs> groups;
  for (int j = 0; j < static_cast<int>(sc.ess.size()); ++j) {
    std::vector<SlotSpec> specs;
    const double ref_cost = out.r_j_max.empty()
                                ? 0.0
                                : edge_cost(out.r_j_max[static_cast<size_t>(j)],
                                            sc.ess[static_cast<size_t>(j)], sc.params);
    for (const ContractTermsEC& c : out.ec_contracts) {
      if (c.es != j) continue;
      specs.push_back({c.cs, c.slot, slot_rank_key(ref_cost, c.price, sc.params)});
    }
    if (specs.empty()) continue;
    std::sort(specs.begin(), specs.end(), [](const SlotSpec& a, const SlotSpec& b) {
      if (a.utility != b.utility) return a.utility > b.utility;
      if (a.cs != b.cs) return a.cs < b.cs;
      return a.idx < b.idx;
    });
    EsGroupForCs g;
    g.g_e = sc.ess[static_cast<size_t>(j)].g_e;
    for (int mu : out.omega[static_cast<size_t>(j)]) {
      g.attend_probs.push_back(sc.mus[static_cast<size_t>(mu)].a);
    }
    for (const SlotSpec& s : specs) g.slot_cs_by_rank.push_back(s.cs);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace camen
