#include "camen/spot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace camen {

namespace {
constexpr double kPriceEps = 1e-9;

long long ceil_eps(double x) { return static_cast<long long>(std::ceil(x - 1e-9)); }
}  // namespace

std::vector<int> select_volunteers(const std::vector<AttendingMu>& attending,
                                   long long realized_supply) {
  if (realized_supply < 0) throw ConfigError("realized supply must be >= 0");
  const long long excess = static_cast<long long>(attending.size()) - realized_supply;
  if (excess <= 0) return {};
  std::vector<AttendingMu> order = attending;
  std::sort(order.begin(), order.end(), [](const AttendingMu& a, const AttendingMu& b) {
    if (a.utility != b.utility) return a.utility < b.utility;
    return a.mu < b.mu;
  });
  std::vector<int> volunteers;
  volunteers.reserve(static_cast<size_t>(excess));
  for (long long i = 0; i < excess; ++i) {
    volunteers.push_back(order[static_cast<size_t>(i)].mu);
  }
  std::sort(volunteers.begin(), volunteers.end());
  return volunteers;
}

std::vector<char> settle_cloud_contracts(long long attendance, long long g_e,
                                         const std::vector<SettleSlot>& ranked, Rng& rng) {
  const long long n = static_cast<long long>(ranked.size());
  long long fulfilled = attendance - g_e;
  fulfilled = std::clamp(fulfilled, 0LL, n);
  // Pre-drawn jitter resolves ties among one server's homogeneous slots.
  std::vector<double> jitter(ranked.size());
  for (double& x : jitter) x = rng.next_double();
  std::vector<size_t> order(ranked.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (ranked[a].utility != ranked[b].utility) return ranked[a].utility > ranked[b].utility;
    if (ranked[a].cs != ranked[b].cs) return ranked[a].cs < ranked[b].cs;
    if (jitter[a] != jitter[b]) return jitter[a] < jitter[b];
    return ranked[a].slot < ranked[b].slot;
  });
  std::vector<char> out(ranked.size(), 0);
  for (long long i = 0; i < fulfilled; ++i) {
    out[order[static_cast<size_t>(i)]] = 1;
  }
  return out;
}

SpotOutcome run_spot_matching(const SpotInput& input, const MarketParams& params,
                              const SpotOptions& opts) {
  SpotOutcome out;
  const int n_mus = static_cast<int>(input.mus.size());

  std::map<int, const SpotEs*> es_by_id;
  for (const SpotEs& es : input.ess) es_by_id[es.es] = &es;

  // ---- Phase 1: user <-> edge, realized valuations, ascending prices.
  struct PairState {
    double price;
    long long versions;
  };
  std::map<std::pair<int, int>, PairState> pairs;
  double max_v = 0.0;
  for (const SpotMu& mu : input.mus) {
    for (size_t c = 0; c < mu.candidates.size(); ++c) {
      pairs[{mu.mu, mu.candidates[c]}] = {params.p_min_ue, 1};
      max_v = std::max(max_v, mu.valuation[c]);
    }
  }
  const long long per_pair_bound =
      ceil_eps(std::max(0.0, max_v - params.p_min_ue) / params.dp_mu) + 1;
  const long long sweep_guard = 4 * per_pair_bound + 2 * static_cast<long long>(pairs.size()) + 16;

  std::map<int, std::vector<int>> accepted;  // es -> mu ids
  std::vector<std::pair<int, int>> prev_proposals;
  while (true) {
    ++out.sweeps_phase1;
    if (out.sweeps_phase1 > sweep_guard) {
      throw InternalError("spot user-edge matching failed to settle within the sweep guard");
    }
    struct Prop {
      int mu;
      double price;
      double margin;
    };
    std::map<int, std::vector<Prop>> proposals;
    std::vector<std::pair<int, int>> proposal_pairs;
    for (int i = 0; i < n_mus; ++i) {
      const SpotMu& mu = input.mus[i];
      double best_u = 0.0;
      int best = -1;
      double best_price = 0.0, best_margin = 0.0;
      for (size_t c = 0; c < mu.candidates.size(); ++c) {
        const int es = mu.candidates[c];
        const double p = pairs[{mu.mu, es}].price;
        if (p > mu.valuation[c] + kPriceEps) continue;  // would buy at a loss
        const double u = mu.valuation[c] - p;
        if (best < 0 || u > best_u || (u == best_u && es < best)) {
          best = es;
          best_u = u;
          best_price = p;
          best_margin = p - mu.edge_cost[c];
        }
      }
      if (best < 0) continue;
      proposals[best].push_back({mu.mu, best_price, best_margin});
      proposal_pairs.emplace_back(mu.mu, best);
      ++out.interactions;
      ++out.mu_rounds[mu.mu];
      if (opts.trace) opts.trace->push_back({InteractionEvent::Kind::Proposal, mu.mu, best});
    }

    accepted.clear();
    for (auto& [es, props] : proposals) {
      std::sort(props.begin(), props.end(), [](const Prop& a, const Prop& b) {
        if (a.margin != b.margin) return a.margin > b.margin;
        return a.mu < b.mu;
      });
      const long long cap = es_by_id.at(es)->access_spare;
      std::vector<int>& keep = accepted[es];
      for (const Prop& p : props) {
        if (p.margin <= 0.0) break;
        if (static_cast<long long>(keep.size()) >= cap) break;
        keep.push_back(p.mu);
      }
      out.interactions += static_cast<long long>(props.size());
      if (opts.trace) {
        for (const Prop& p : props) {
          opts.trace->push_back({InteractionEvent::Kind::Response, p.mu, es});
        }
      }
    }

    bool changed = false;
    for (const auto& [mu_id, es] : proposal_pairs) {
      const auto& keep = accepted[es];
      if (std::find(keep.begin(), keep.end(), mu_id) != keep.end()) continue;
      const SpotMu& mu = input.mus[static_cast<size_t>(
          std::find_if(input.mus.begin(), input.mus.end(),
                       [&](const SpotMu& m) { return m.mu == mu_id; }) -
          input.mus.begin())];
      double cap = 0.0;
      for (size_t c = 0; c < mu.candidates.size(); ++c) {
        if (mu.candidates[c] == es) cap = mu.valuation[c];
      }
      PairState& st = pairs[{mu_id, es}];
      if (st.price < cap - kPriceEps) {
        st.price = std::min(st.price + params.dp_mu, cap);
        ++st.versions;
        if (st.versions > per_pair_bound + 1) {
          throw InternalError("spot pair price escalated beyond its analytic bound");
        }
        changed = true;
      }
    }
    if (!changed && proposal_pairs == prev_proposals) break;
    prev_proposals = std::move(proposal_pairs);
  }

  for (const auto& [key, st] : pairs) {
    out.ue_price[key] = st.price;
    out.rounds_phase1 = std::max(out.rounds_phase1, st.versions);
  }

  // Index helpers for the matched set.
  std::map<int, const SpotMu*> mu_by_id;
  for (const SpotMu& mu : input.mus) mu_by_id[mu.mu] = &mu;
  auto cand_index = [&](const SpotMu& mu, int es) {
    for (size_t c = 0; c < mu.candidates.size(); ++c) {
      if (mu.candidates[c] == es) return c;
    }
    throw InternalError("matched server is not a candidate");
  };

  for (const auto& [es, keep] : accepted) {
    for (int mu_id : keep) {
      out.mu_to_es[mu_id] = es;
      out.mu_price[mu_id] = pairs[{mu_id, es}].price;
    }
  }

  // ---- Phase 2: per-task cloud slots for demand beyond local spare.
  struct Task {
    int mu;
    int es;
    double p_ue;   // cap for the slot price
    double r_u;
  };
  std::vector<Task> tasks;
  for (const auto& [es, keep] : accepted) {
    const long long local = es_by_id.at(es)->local_spare;
    if (static_cast<long long>(keep.size()) <= local) continue;
    std::vector<std::pair<double, int>> by_price;
    for (int mu_id : keep) by_price.emplace_back(pairs[{mu_id, es}].price, mu_id);
    // The priciest tasks shop for cloud slots: they can afford the widest
    // price range before their cap binds.
    std::sort(by_price.begin(), by_price.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const long long overflow = static_cast<long long>(keep.size()) - local;
    for (long long t = 0; t < overflow; ++t) {
      const auto& [p, mu_id] = by_price[static_cast<size_t>(t)];
      tasks.push_back({mu_id, es, p, mu_by_id.at(mu_id)->r_u});
    }
  }

  std::map<std::pair<int, int>, PairState> slot_pairs;  // (task idx, cs)
  double max_cap = 0.0;
  for (size_t t = 0; t < tasks.size(); ++t) {
    for (const SpotCs& cs : input.css) {
      slot_pairs[{static_cast<int>(t), cs.cs}] = {params.p_min_ec, 1};
    }
    max_cap = std::max(max_cap, tasks[t].p_ue);
  }
  const long long slot_bound = ceil_eps(std::max(0.0, max_cap - params.p_min_ec) / params.dp_es) + 1;
  const long long slot_guard = 4 * slot_bound + 2 * static_cast<long long>(slot_pairs.size()) + 16;

  std::map<int, long long> cs_spare;
  std::map<int, const SpotCs*> cs_by_id;
  for (const SpotCs& cs : input.css) {
    cs_spare[cs.cs] = cs.spare;
    cs_by_id[cs.cs] = &cs;
  }
  auto cs_cost = [&](const SpotCs& cs, double r) {
    return params.v3 * r * cs.e_c / cs.f_c + cs.c_hw;
  };

  std::map<int, std::pair<int, double>> slot_booked;  // task -> (cs, price)
  std::vector<std::pair<int, int>> prev_slot_props;
  while (!tasks.empty()) {
    ++out.sweeps_phase2;
    if (out.sweeps_phase2 > slot_guard) {
      throw InternalError("spot edge-cloud matching failed to settle within the sweep guard");
    }
    struct SlotProp {
      int task;
      double price;
      double margin;
    };
    std::map<int, std::vector<SlotProp>> proposals;
    std::vector<std::pair<int, int>> proposal_pairs;
    for (size_t t = 0; t < tasks.size(); ++t) {
      // Cheapest current price first; ties to the lower cloud id.
      int best = -1;
      double best_price = 0.0;
      for (const SpotCs& cs : input.css) {
        const double p = slot_pairs[{static_cast<int>(t), cs.cs}].price;
        if (p > tasks[t].p_ue + kPriceEps) continue;
        if (best < 0 || p < best_price - kPriceEps) {
          best = cs.cs;
          best_price = p;
        }
      }
      if (best < 0) continue;
      const double cost = cs_cost(*cs_by_id.at(best), tasks[t].r_u);
      proposals[best].push_back({static_cast<int>(t), best_price, best_price - cost});
      proposal_pairs.emplace_back(static_cast<int>(t), best);
    }

    slot_booked.clear();
    std::map<int, std::vector<int>> booked_at;
    for (auto& [cs, props] : proposals) {
      std::sort(props.begin(), props.end(), [](const SlotProp& a, const SlotProp& b) {
        if (a.margin != b.margin) return a.margin > b.margin;
        return a.task < b.task;
      });
      long long spare = cs_spare.at(cs);
      for (const SlotProp& p : props) {
        if (p.margin <= 0.0) break;
        if (spare <= 0) break;
        booked_at[cs].push_back(p.task);
        --spare;
      }
    }
    for (const auto& [cs, winners] : booked_at) {
      for (int t : winners) {
        slot_booked[t] = {cs, slot_pairs[{t, cs}].price};
      }
    }

    bool changed = false;
    for (const auto& [t, cs] : proposal_pairs) {
      if (slot_booked.count(t) && slot_booked[t].first == cs) continue;
      PairState& st = slot_pairs[{t, cs}];
      const double cap = tasks[static_cast<size_t>(t)].p_ue;
      if (st.price < cap - kPriceEps) {
        st.price = std::min(st.price + params.dp_es, cap);
        ++st.versions;
        if (st.versions > slot_bound + 1) {
          throw InternalError("spot slot price escalated beyond its analytic bound");
        }
        changed = true;
      }
    }
    if (!changed && proposal_pairs == prev_slot_props) break;
    prev_slot_props = std::move(proposal_pairs);
  }

  for (const auto& [key, st] : slot_pairs) {
    const auto& [t, cs] = key;
    out.ec_price[{tasks[static_cast<size_t>(t)].mu, cs}] = st.price;
    out.rounds_phase2 = std::max(out.rounds_phase2, st.versions);
  }

  // ---- Phase 3: trim each server's spot set to its realized supply.
  for (auto& [es, keep] : accepted) {
    const long long local = es_by_id.at(es)->local_spare;
    auto has_slot = [&](int mu_id) {
      for (size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].mu == mu_id && tasks[t].es == es && slot_booked.count(static_cast<int>(t))) {
          return true;
        }
      }
      return false;
    };
    while (true) {
      long long slots_kept = 0;
      for (int mu_id : keep) {
        if (has_slot(mu_id)) ++slots_kept;
      }
      if (static_cast<long long>(keep.size()) <= local + slots_kept) break;
      // Drop the weakest margin; spare slot-backed tasks as long as possible.
      int drop = -1;
      double drop_margin = 0.0;
      bool drop_has_slot = true;
      for (int mu_id : keep) {
        const SpotMu& mu = *mu_by_id.at(mu_id);
        const size_t c = cand_index(mu, es);
        const double margin = pairs[{mu_id, es}].price - mu.edge_cost[c];
        const bool backed = has_slot(mu_id);
        const bool better = drop < 0 || (backed == drop_has_slot
                                             ? (margin < drop_margin ||
                                                (margin == drop_margin && mu_id > drop))
                                             : (!backed && drop_has_slot));
        if (better) {
          drop = mu_id;
          drop_margin = margin;
          drop_has_slot = backed;
        }
      }
      keep.erase(std::find(keep.begin(), keep.end(), drop));
      out.mu_to_es.erase(drop);
      out.mu_price.erase(drop);
      out.released_mus.push_back(drop);
      // A booked slot of a dropped task is discarded.
      for (size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].mu == drop && tasks[t].es == es) slot_booked.erase(static_cast<int>(t));
      }
    }
  }

  for (const auto& [t, booking] : slot_booked) {
    const Task& task = tasks[static_cast<size_t>(t)];
    if (out.mu_to_es.count(task.mu)) {
      out.cloud_served[task.mu] = booking;
    }
  }
  std::sort(out.released_mus.begin(), out.released_mus.end());
  return out;
}

}  // namespace camen
