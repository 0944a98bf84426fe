#include "camen/transaction.hpp"

#include <algorithm>
#include <cmath>

#include "camen/expectation.hpp"

namespace camen {

TransactionSample sample_transaction(const Scenario& sc, Rng& rng) {
  TransactionSample s;
  s.alpha.reserve(sc.mus.size());
  for (const MobileUser& mu : sc.mus) {
    s.alpha.push_back(rng.bernoulli(mu.a) ? 1 : 0);
  }
  for (const MobileUser& mu : sc.mus) {
    for (int es : mu.candidates) {
      s.gamma[{mu.id, es}] = rng.uniform(mu.gamma_low, mu.gamma_high);
    }
  }
  for (const CloudServer& cs : sc.css) {
    s.epsilon.push_back(std::min(rng.poisson(cs.sigma), cs.g_c));
  }
  for (size_t i = 0; i < sc.mus.size(); ++i) {
    s.e2e_delay_ms.push_back(rng.uniform(1.0, 15.0));
  }
  return s;
}

TransactionLedger::TransactionLedger(const Scenario& sc, const TransactionSample& sample)
    : sc_(sc), sample_(sample) {
  out_.mu_utility.assign(sc.mus.size(), 0.0);
  out_.es_utility.assign(sc.ess.size(), 0.0);
  out_.cs_utility.assign(sc.css.size(), 0.0);
  served_per_es_.assign(sc.ess.size(), 0);
}

void TransactionLedger::serve_edge(int mu, int es, double price, double gamma) {
  const MobileUser& user = sc_.mus[static_cast<size_t>(mu)];
  const EdgeServer& server = sc_.ess[static_cast<size_t>(es)];
  const double v = valuation(user, server, gamma, sc_.params).v;
  const double cost = edge_cost(user, server, sc_.params);
  out_.mu_utility[static_cast<size_t>(mu)] += v - price;
  out_.es_utility[static_cast<size_t>(es)] += price - cost;
  direct_ += v - cost;
  ++served_per_es_[static_cast<size_t>(es)];
}

void TransactionLedger::serve_cloud(int mu, int es, int cs, double user_price, double slot_price,
                                    double gamma) {
  const MobileUser& user = sc_.mus[static_cast<size_t>(mu)];
  const EdgeServer& server = sc_.ess[static_cast<size_t>(es)];
  const CloudServer& cloud = sc_.css[static_cast<size_t>(cs)];
  const double v = valuation(user, server, gamma, sc_.params).v;
  const double e_cost = edge_cost(user, server, sc_.params);
  const double c_cost = cloud_cost(user.r_u, cloud, sc_.params);
  out_.mu_utility[static_cast<size_t>(mu)] += v - user_price;
  // The edge server collects the user's payment, saves its own serving cost
  // by offloading, and pays the cloud server for the slot.
  out_.es_utility[static_cast<size_t>(es)] += (user_price - e_cost) + (e_cost - slot_price);
  out_.cs_utility[static_cast<size_t>(cs)] += slot_price - c_cost;
  direct_ += v - c_cost;
  ++served_per_es_[static_cast<size_t>(es)];
}

void TransactionLedger::absent_penalty(int mu, int es) {
  out_.mu_utility[static_cast<size_t>(mu)] -= sc_.params.q_ue;
  out_.es_utility[static_cast<size_t>(es)] += sc_.params.q_ue;
}

void TransactionLedger::volunteer_compensation(int mu, int es) {
  out_.mu_utility[static_cast<size_t>(mu)] += sc_.params.q_eu;
  out_.es_utility[static_cast<size_t>(es)] -= sc_.params.q_eu;
}

void TransactionLedger::broken_slot(int es, int cs) {
  out_.es_utility[static_cast<size_t>(es)] -= sc_.params.q_ec;
  out_.cs_utility[static_cast<size_t>(cs)] += sc_.params.q_ec;
}

void TransactionLedger::settle_inherent(const std::vector<long long>& cloud_load) {
  for (size_t k = 0; k < sc_.css.size(); ++k) {
    const CloudServer& cloud = sc_.css[k];
    const long long eps = sample_.epsilon[k];
    const long long overflow = std::max(0LL, cloud_load[k] + eps - cloud.g_c);
    if (overflow > eps) {
      throw InternalError("cloud server booked beyond its physical VM count");
    }
    const long long served = eps - overflow;
    const double util = static_cast<double>(served) * cloud.p_inherent -
                        static_cast<double>(overflow) * cloud.q_inherent;
    out_.cs_utility[k] += util;
    direct_ += util;
  }
}

void TransactionLedger::add_ptct(int mu, long long decision_rounds, double transmission_s,
                                 double execution_s) {
  const double decision_ms =
      static_cast<double>(decision_rounds) * 2.0 * sample_.e2e_delay_ms[static_cast<size_t>(mu)];
  if (transmission_s < 0.0 || execution_s < 0.0) {
    throw InternalError("task completion time components must be non-negative");
  }
  out_.ptct_ms[mu] = decision_ms + 1000.0 * (transmission_s + execution_s);
}

long long TransactionLedger::served_count(int es) const {
  return served_per_es_[static_cast<size_t>(es)];
}

TransactionOutcome TransactionLedger::finish(long long ni, SpotOutcome spot,
                                             std::vector<std::pair<int, int>> volunteers,
                                             std::map<std::tuple<int, int, int>, char> beta) {
  out_.ni = ni;
  out_.spot = std::move(spot);
  out_.volunteers = std::move(volunteers);
  out_.beta = std::move(beta);
  double sum = 0.0;
  for (double u : out_.mu_utility) sum += u;
  for (double u : out_.es_utility) sum += u;
  for (double u : out_.cs_utility) sum += u;
  out_.social_welfare = sum;
  out_.social_welfare_direct = direct_;
  const double scale = std::max({1.0, std::fabs(sum), std::fabs(direct_)});
  if (std::fabs(sum - direct_) > 1e-9 * scale) {
    throw InternalError("social-welfare transfer-cancellation identity violated");
  }
  return std::move(out_);
}

FuturesOutcome empty_futures(const Scenario& sc) {
  FuturesOutcome out;
  out.mu_to_es.assign(sc.mus.size(), -1);
  out.omega.assign(sc.ess.size(), {});
  out.offload_counts.assign(sc.ess.size(), std::vector<long long>(sc.css.size(), 0));
  out.requested_slots.assign(sc.ess.size(), 0);
  out.e_beta_requested.assign(sc.ess.size(), {});
  out.p_j_max.assign(sc.ess.size(), 0.0);
  out.r_j_max.assign(sc.ess.size(), 0.0);
  return out;
}

TransactionOutcome execute_transaction(const Scenario& sc, const FuturesOutcome& futures,
                                       const TransactionSample& sample, Rng& stream,
                                       const ExecuteOptions& opts) {
  const MarketParams& params = sc.params;
  const int n_ess = static_cast<int>(sc.ess.size());
  const int n_css = static_cast<int>(sc.css.size());
  TransactionLedger ledger(sc, sample);
  long long ni = 0;

  // (1) Realized attendance of contractual users.
  std::vector<std::vector<int>> attending(static_cast<size_t>(n_ess));
  for (int j = 0; j < n_ess; ++j) {
    for (int mu : futures.omega[static_cast<size_t>(j)]) {
      if (sample.alpha[static_cast<size_t>(mu)]) {
        attending[static_cast<size_t>(j)].push_back(mu);
        ++ni;  // the user signals it is taking part
      } else {
        ledger.absent_penalty(mu, j);
      }
    }
  }

  // (2) Cloud-contract settlement per edge server.
  std::map<std::tuple<int, int, int>, char> beta;
  std::vector<long long> fulfilled_per_es(static_cast<size_t>(n_ess), 0);
  std::vector<long long> cloud_load(static_cast<size_t>(n_css), 0);
  std::vector<std::vector<ContractTermsEC>> fulfilled_slots(static_cast<size_t>(n_ess));
  for (int j = 0; j < n_ess; ++j) {
    std::vector<ContractTermsEC> slots;
    for (const ContractTermsEC& c : futures.ec_contracts) {
      if (c.es == j) slots.push_back(c);
    }
    if (slots.empty()) continue;
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    const double ref_cost = edge_cost(futures.r_j_max[static_cast<size_t>(j)], server, params);
    std::vector<SettleSlot> ranked;
    for (const ContractTermsEC& c : slots) {
      ranked.push_back({c.cs, c.slot, slot_rank_key(ref_cost, c.price, params)});
    }
    const std::vector<char> used = settle_cloud_contracts(
        static_cast<long long>(attending[static_cast<size_t>(j)].size()), server.g_e, ranked,
        stream);
    for (size_t s = 0; s < slots.size(); ++s) {
      beta[{j, slots[s].cs, slots[s].slot}] = used[s];
      if (used[s]) {
        ++fulfilled_per_es[static_cast<size_t>(j)];
        ++cloud_load[static_cast<size_t>(slots[s].cs)];
        fulfilled_slots[static_cast<size_t>(j)].push_back(slots[s]);
      } else {
        ledger.broken_slot(j, slots[s].cs);
      }
    }
    // Cheaper slots settle first.
    std::sort(fulfilled_slots[static_cast<size_t>(j)].begin(),
              fulfilled_slots[static_cast<size_t>(j)].end(),
              [&](const ContractTermsEC& a, const ContractTermsEC& b) {
                const double ka = slot_rank_key(ref_cost, a.price, params);
                const double kb = slot_rank_key(ref_cost, b.price, params);
                if (ka != kb) return ka > kb;
                if (a.cs != b.cs) return a.cs < b.cs;
                return a.slot < b.slot;
              });
  }

  // (3) Volunteer selection against the realized supply.
  std::vector<std::pair<int, int>> volunteers;
  std::vector<std::vector<int>> served(static_cast<size_t>(n_ess));
  for (int j = 0; j < n_ess; ++j) {
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    std::vector<AttendingMu> pool;
    for (int mu : attending[static_cast<size_t>(j)]) {
      const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
      const double e_v = expected_valuation(user, server, params);
      const double price = futures.ue_price.at({mu, j});
      pool.push_back({mu, volunteer_rank_utility(user.a, e_v, price, params)});
    }
    const long long supply = server.g_e + fulfilled_per_es[static_cast<size_t>(j)];
    const std::vector<int> vols = select_volunteers(pool, supply);
    for (int mu : vols) {
      volunteers.emplace_back(mu, j);
      ledger.volunteer_compensation(mu, j);
      ++ni;  // the server notifies the volunteer
    }
    for (int mu : attending[static_cast<size_t>(j)]) {
      if (!std::binary_search(vols.begin(), vols.end(), mu)) {
        served[static_cast<size_t>(j)].push_back(mu);
      }
    }
  }

  // (4) Futures-side settlements: served users pay their contract price;
  // the largest offloadable tasks ride the fulfilled cloud slots.
  for (int j = 0; j < n_ess; ++j) {
    std::vector<int>& keep = served[static_cast<size_t>(j)];
    std::sort(keep.begin(), keep.end(), [&](int a, int b) {
      const double ra = sc.mus[static_cast<size_t>(a)].r_u;
      const double rb = sc.mus[static_cast<size_t>(b)].r_u;
      if (ra != rb) return ra > rb;
      return a < b;
    });
    const size_t n_cloud = fulfilled_slots[static_cast<size_t>(j)].size();
    if (keep.size() >
        static_cast<size_t>(sc.ess[static_cast<size_t>(j)].g_e) + n_cloud) {
      throw InternalError("served contractual users exceed the realized supply");
    }
    for (size_t i = 0; i < keep.size(); ++i) {
      const int mu = keep[i];
      const double price = futures.ue_price.at({mu, j});
      const double gamma = sample.gamma.at({mu, j});
      if (i < n_cloud) {
        const ContractTermsEC& slot = fulfilled_slots[static_cast<size_t>(j)][i];
        ledger.serve_cloud(mu, j, slot.cs, price, slot.price, gamma);
      } else {
        ledger.serve_edge(mu, j, price, gamma);
      }
    }
  }

  // (5) Residual pool: attendees without a contract plus the volunteers.
  std::vector<char> is_volunteer(sc.mus.size(), 0);
  for (const auto& [mu, es] : volunteers) is_volunteer[static_cast<size_t>(mu)] = 1;
  std::vector<long long> local_spare(static_cast<size_t>(n_ess), 0);
  std::vector<long long> access_spare(static_cast<size_t>(n_ess), 0);
  for (int j = 0; j < n_ess; ++j) {
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    const long long busy = ledger.served_count(j);
    local_spare[static_cast<size_t>(j)] =
        std::max(0LL, server.g_e + fulfilled_per_es[static_cast<size_t>(j)] - busy);
    access_spare[static_cast<size_t>(j)] = std::max(0LL, server.k_e - busy);
  }

  SpotInput spot_in;
  for (const MobileUser& user : sc.mus) {
    if (!sample.alpha[static_cast<size_t>(user.id)]) continue;
    const bool contracted = futures.mu_to_es[static_cast<size_t>(user.id)] >= 0;
    if (contracted && !is_volunteer[static_cast<size_t>(user.id)]) continue;
    SpotMu smu;
    smu.mu = user.id;
    smu.r_u = user.r_u;
    for (int es : user.candidates) {
      if (access_spare[static_cast<size_t>(es)] <= 0) continue;
      const double gamma = sample.gamma.at({user.id, es});
      smu.candidates.push_back(es);
      smu.valuation.push_back(valuation(user, sc.ess[static_cast<size_t>(es)], gamma, params).v);
      smu.edge_cost.push_back(edge_cost(user, sc.ess[static_cast<size_t>(es)], params));
    }
    if (!smu.candidates.empty()) spot_in.mus.push_back(std::move(smu));
  }
  for (int j = 0; j < n_ess; ++j) {
    if (access_spare[static_cast<size_t>(j)] <= 0) continue;
    spot_in.ess.push_back({j, local_spare[static_cast<size_t>(j)],
                           access_spare[static_cast<size_t>(j)]});
  }
  for (int k = 0; k < n_css; ++k) {
    const CloudServer& cloud = sc.css[k];
    const long long spare =
        std::max(0LL, cloud.g_c - cloud_load[static_cast<size_t>(k)] - sample.epsilon[k]);
    spot_in.css.push_back({k, spare, cloud.f_c, cloud.e_c, cloud.c_hw});
  }

  // (6) Onsite matching for the residual pool.
  SpotOptions spot_opts;
  spot_opts.trace = opts.trace;
  SpotOutcome spot = run_spot_matching(spot_in, params, spot_opts);
  ni += spot.interactions;

  // (7) Spot settlements.
  std::vector<long long> spot_cloud(static_cast<size_t>(n_css), 0);
  for (const auto& [mu, es] : spot.mu_to_es) {
    const double price = spot.mu_price.at(mu);
    const double gamma = sample.gamma.at({mu, es});
    auto cloud_it = spot.cloud_served.find(mu);
    if (cloud_it != spot.cloud_served.end()) {
      const auto& [cs, slot_price] = cloud_it->second;
      ledger.serve_cloud(mu, es, cs, price, slot_price, gamma);
      ++spot_cloud[static_cast<size_t>(cs)];
    } else {
      ledger.serve_edge(mu, es, price, gamma);
    }
  }

  // (8) Inherent requestors and capacity checks.
  std::vector<long long> total_cloud(cloud_load);
  for (int k = 0; k < n_css; ++k) {
    total_cloud[static_cast<size_t>(k)] += spot_cloud[static_cast<size_t>(k)];
  }
  ledger.settle_inherent(total_cloud);
  for (int j = 0; j < n_ess; ++j) {
    const EdgeServer& server = sc.ess[static_cast<size_t>(j)];
    if (ledger.served_count(j) > server.k_e) {
      throw InternalError("edge server exceeded its subcarrier limit");
    }
  }

  // (9) Task completion times for every served user.
  auto record_ptct = [&](int mu, int es, int cs_or_neg, double gamma, long long rounds) {
    const MobileUser& user = sc.mus[static_cast<size_t>(mu)];
    const double rate = params.bandwidth_w * std::log2(1.0 + user.e_t * gamma);
    const double f_exec = cs_or_neg >= 0 ? sc.css[static_cast<size_t>(cs_or_neg)].f_c
                                         : sc.ess[static_cast<size_t>(es)].f_e;
    ledger.add_ptct(mu, rounds, user.d_u / rate, user.r_u / f_exec);
  };
  for (int j = 0; j < n_ess; ++j) {
    std::vector<int> keep = served[static_cast<size_t>(j)];
    std::sort(keep.begin(), keep.end(), [&](int a, int b) {
      const double ra = sc.mus[static_cast<size_t>(a)].r_u;
      const double rb = sc.mus[static_cast<size_t>(b)].r_u;
      if (ra != rb) return ra > rb;
      return a < b;
    });
    const size_t n_cloud = fulfilled_slots[static_cast<size_t>(j)].size();
    for (size_t i = 0; i < keep.size(); ++i) {
      const int cs = i < n_cloud ? fulfilled_slots[static_cast<size_t>(j)][i].cs : -1;
      record_ptct(keep[i], j, cs, sample.gamma.at({keep[i], j}), 0);
    }
  }
  for (const auto& [mu, es] : spot.mu_to_es) {
    auto cloud_it = spot.cloud_served.find(mu);
    const int cs = cloud_it != spot.cloud_served.end() ? cloud_it->second.first : -1;
    record_ptct(mu, es, cs, sample.gamma.at({mu, es}), spot.mu_rounds.at(mu));
  }

  return ledger.finish(ni, std::move(spot), std::move(volunteers), std::move(beta));
}

}  // namespace camen
