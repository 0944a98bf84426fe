#include "camen/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camen/poisson_binomial.hpp"

namespace camen {

namespace {

double transmission_rate(const MobileUser& mu, double gamma, const MarketParams& params) {
  const double snr = mu.e_t * gamma;
  if (gamma <= 0.0 || snr <= 0.0) {
    throw ConfigError("channel gain and received SNR must be positive");
  }
  return params.bandwidth_w * std::log2(1.0 + snr);
}

}  // namespace

ValuationBreakdown valuation(const MobileUser& mu, const EdgeServer& es, double gamma,
                             const MarketParams& params) {
  ValuationBreakdown out;
  if (mu.r_u == 0.0 && mu.d_u == 0.0) return out;  // empty task saves nothing
  const double rate = transmission_rate(mu, gamma, params);
  const double t_tx = mu.d_u / rate;
  out.t_save = mu.r_u / mu.f_u - (mu.r_u / es.f_e + t_tx);
  out.c_save = mu.r_u * mu.e_u / mu.f_u - mu.d_u * mu.e_t / rate;
  out.v = params.v1 * out.t_save + params.v2 * out.c_save;
  return out;
}

double expected_valuation(const MobileUser& mu, const EdgeServer& es, const MarketParams& params) {
  const double mean_gamma = 0.5 * (mu.gamma_low + mu.gamma_high);
  return valuation(mu, es, mean_gamma, params).v;
}

double expected_valuation_quadrature(const MobileUser& mu, const EdgeServer& es,
                                     const MarketParams& params, int points) {
  // Composite Gauss-Legendre (2-point) over the uniform gamma range.
  const double lo = mu.gamma_low, hi = mu.gamma_high;
  const int segments = std::max(1, points / 2);
  const double h = (hi - lo) / segments;
  const double offset = h * 0.5 / std::sqrt(3.0);
  double acc = 0.0;
  for (int s = 0; s < segments; ++s) {
    const double mid = lo + (s + 0.5) * h;
    acc += valuation(mu, es, mid - offset, params).v;
    acc += valuation(mu, es, mid + offset, params).v;
  }
  return acc / (2.0 * segments);
}

double edge_cost(double r, const EdgeServer& es, const MarketParams& params) {
  return params.v3 * r * es.e_e / es.f_e + es.c_hw;
}

double edge_cost(const MobileUser& mu, const EdgeServer& es, const MarketParams& params) {
  return edge_cost(mu.r_u, es, params);
}

double cloud_cost(double r, const CloudServer& cs, const MarketParams& params) {
  return params.v3 * r * cs.e_c / cs.f_c + cs.c_hw;
}

double participation_tail_prob(const std::vector<double>& probs, long long x) {
  return poisson_binomial_tail(probs, x);
}

double volunteer_rank_utility(double a, double e_v, double price, const MarketParams& params) {
  return a * (e_v - price) + (1.0 - a) * params.q_ue;
}

std::vector<double> volunteer_probabilities(const std::vector<VolunteerEntry>& entries,
                                            long long capacity) {
  if (capacity < 0) throw ConfigError("volunteer capacity must be >= 0");
  std::vector<double> out(entries.size(), 0.0);
  if (capacity >= static_cast<long long>(entries.size())) return out;
  // Entry i volunteers iff it attends and at least `capacity` entries that
  // would be kept in preference to it attend as well. "Kept in preference"
  // means higher utility, or equal utility with higher id (the lower id is
  // volunteered first on ties).
  std::vector<double> better;
  better.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    better.clear();
    for (size_t j = 0; j < entries.size(); ++j) {
      if (j == i) continue;
      const bool kept_first = entries[j].utility > entries[i].utility ||
                              (entries[j].utility == entries[i].utility &&
                               entries[j].mu > entries[i].mu);
      if (kept_first) better.push_back(entries[j].a);
    }
    out[i] = entries[i].a * poisson_binomial_tail(better, capacity - 1);
  }
  return out;
}

MuEvaluation mu_expected_utility_and_risks(double a, double e_v, double price, double e_lambda,
                                           const MarketParams& params) {
  if (params.u_min <= 0.0) throw ConfigError("u_min must be positive");
  MuEvaluation out;
  out.utility = (1.0 - e_lambda) * a * (e_v - price) - (1.0 - a) * params.q_ue +
                a * e_lambda * params.q_eu;
  out.r1_certified = std::clamp(1.0 - out.utility / params.u_min, 0.0, 1.0);
  out.r2 = e_lambda;
  out.r1_ok = out.utility / params.u_min > 1.0 - params.rho1;
  out.r2_ok = out.r2 <= params.rho2;
  out.feasible = out.r1_ok && out.r2_ok;
  return out;
}

double max_price_under_r1(double a, double e_v, double e_lambda, const MarketParams& params) {
  // utility(p) = (1-el)*a*(e_v - p) - (1-a)*q_ue + a*el*q_eu, affine in p.
  const double slope = (1.0 - e_lambda) * a;
  const double threshold = (1.0 - params.rho1) * params.u_min;
  const double at_zero =
      (1.0 - e_lambda) * a * e_v - (1.0 - a) * params.q_ue + a * e_lambda * params.q_eu;
  if (slope <= 0.0) {
    // Price does not affect the utility; the check either always or never holds.
    return at_zero > threshold ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
  }
  return (at_zero - threshold) / slope;
}

double mu_low_utility_prob_exact(const MobileUser& mu, const EdgeServer& es, double price,
                                 double e_lambda, const MarketParams& params) {
  double prob = 0.0;
  // Absent: utility is -q_ue.
  if (-params.q_ue < params.u_min) prob += 1.0 - mu.a;
  // Attending volunteer: utility is q_eu.
  if (params.q_eu < params.u_min) prob += mu.a * e_lambda;
  // Attending and served: utility is v(gamma) - price, increasing in gamma.
  const double lo_v = valuation(mu, es, mu.gamma_low, params).v;
  const double hi_v = valuation(mu, es, mu.gamma_high, params).v;
  double served_prob;
  const double need = price + params.u_min;
  if (hi_v < need) {
    served_prob = 1.0;
  } else if (lo_v >= need) {
    served_prob = 0.0;
  } else {
    double lo = mu.gamma_low, hi = mu.gamma_high;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (mu.gamma_high - mu.gamma_low); ++it) {
      const double mid = 0.5 * (lo + hi);
      (valuation(mu, es, mid, params).v < need ? lo : hi) = mid;
    }
    served_prob = (0.5 * (lo + hi) - mu.gamma_low) / (mu.gamma_high - mu.gamma_low);
  }
  prob += mu.a * (1.0 - e_lambda) * served_prob;
  return std::clamp(prob, 0.0, 1.0);
}

std::vector<double> fulfillment_probabilities(const std::vector<double>& attend_probs,
                                              long long g_e, const std::vector<SlotSpec>& slots,
                                              bool average_within_cs) {
  if (g_e < 0) throw ConfigError("local VM count must be >= 0");
  const size_t n = slots.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (slots[a].utility != slots[b].utility) return slots[a].utility > slots[b].utility;
    if (slots[a].cs != slots[b].cs) return slots[a].cs < slots[b].cs;
    return slots[a].idx < slots[b].idx;
  });
  const std::vector<double> pmf = poisson_binomial_pmf(attend_probs);
  std::vector<double> raw(n, 0.0);
  for (size_t rank = 0; rank < n; ++rank) {
    raw[order[rank]] = pmf_tail(pmf, g_e + static_cast<long long>(rank));
  }
  if (!average_within_cs) return raw;
  // Homogeneous tasks toward one cloud server share the mean usage
  // probability of their rank positions; the sum over slots is unchanged.
  std::vector<double> out(n, 0.0);
  std::vector<char> done(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    double sum = 0.0;
    size_t count = 0;
    for (size_t j = 0; j < n; ++j) {
      if (slots[j].cs == slots[i].cs) {
        sum += raw[j];
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    for (size_t j = 0; j < n; ++j) {
      if (slots[j].cs == slots[i].cs) {
        out[j] = mean;
        done[j] = 1;
      }
    }
  }
  return out;
}

EsEvaluation es_expected_utility_and_risks(const std::vector<EsContractMu>& contract_mus,
                                           const std::vector<EsSlot>& slots, long long g_e,
                                           const MarketParams& params) {
  EsEvaluation out;
  std::vector<double> attend;
  attend.reserve(contract_mus.size());
  for (const EsContractMu& m : contract_mus) {
    attend.push_back(m.a);
    out.utility_ue += m.a * (1.0 - m.e_lambda) * (m.price - m.cost);
    out.utility_ue += (1.0 - m.a) * params.q_ue - m.a * m.e_lambda * params.q_eu;
  }
  for (const EsSlot& s : slots) {
    out.utility_ec -= s.e_beta * (s.price - s.cost_ref) + (1.0 - s.e_beta) * params.q_ec;
    out.r1_worst = std::max(out.r1_worst, 1.0 - s.e_beta);
  }
  out.utility = out.utility_ue + out.utility_ec;
  out.r2 = participation_tail_prob(attend, g_e + static_cast<long long>(slots.size()));
  out.feasible = out.r1_worst <= params.rho3 && out.r2 <= params.rho4;
  return out;
}

std::vector<double> capped_poisson_pmf(double sigma, long long cap) {
  if (cap < 0) throw ConfigError("inherent-demand cap must be >= 0");
  std::vector<double> pmf(static_cast<size_t>(cap) + 1, 0.0);
  double below = 0.0;
  double term = std::exp(-sigma);
  for (long long h = 0; h < cap; ++h) {
    pmf[static_cast<size_t>(h)] = term;
    below += term;
    term *= sigma / static_cast<double>(h + 1);
  }
  pmf[static_cast<size_t>(cap)] = std::max(0.0, 1.0 - below);
  return pmf;
}

CsEvaluation cs_expected_utility_and_risk(const CloudServer& cs, const std::vector<CsSlot>& slots,
                                          const MarketParams& params) {
  CsEvaluation out;
  std::vector<double> betas;
  betas.reserve(slots.size());
  double slot_income = 0.0;
  double beta_sum = 0.0;
  for (const CsSlot& s : slots) {
    betas.push_back(s.e_beta);
    beta_sum += s.e_beta;
    slot_income += s.e_beta * (s.price - s.cost) + (1.0 - s.e_beta) * params.q_ec;
  }
  const std::vector<double> eps_pmf = capped_poisson_pmf(cs.sigma, cs.g_c);
  for (size_t h = 0; h < eps_pmf.size(); ++h) {
    out.e_eps += static_cast<double>(h) * eps_pmf[h];
  }
  const std::vector<double> beta_pmf = poisson_binomial_pmf(betas);
  for (long long h = 0; h <= cs.g_c; ++h) {
    out.r_c += eps_pmf[static_cast<size_t>(h)] * pmf_tail(beta_pmf, cs.g_c - h);
  }
  out.e_n = beta_sum + out.e_eps - static_cast<double>(cs.g_c);
  // Inherent requestors pay p_inherent when served; unserved ones are
  // compensated at q_inherent (an outflow).
  const double inherent = out.r_c * ((out.e_eps - out.e_n) * cs.p_inherent -
                                     out.e_n * cs.q_inherent) +
                          (1.0 - out.r_c) * out.e_eps * cs.p_inherent;
  out.utility = slot_income + inherent;
  out.feasible = out.r_c <= params.rho5;
  return out;
}

std::vector<double> fulfilled_count_pmf(const EsGroupForCs& group, int cs_id) {
  // Number of this group's slots owned by cs_id that are used, as a function
  // of realized attendance: slots are used top-rank-first once attendance
  // exceeds the local VM count.
  const long long total_slots = static_cast<long long>(group.slot_cs_by_rank.size());
  std::vector<long long> owned_among_top(static_cast<size_t>(total_slots) + 1, 0);
  for (long long c = 1; c <= total_slots; ++c) {
    owned_among_top[static_cast<size_t>(c)] =
        owned_among_top[static_cast<size_t>(c - 1)] +
        (group.slot_cs_by_rank[static_cast<size_t>(c - 1)] == cs_id ? 1 : 0);
  }
  const std::vector<double> att_pmf = poisson_binomial_pmf(group.attend_probs);
  std::vector<double> out(static_cast<size_t>(owned_among_top[static_cast<size_t>(total_slots)]) + 1,
                          0.0);
  for (size_t att = 0; att < att_pmf.size(); ++att) {
    long long used = static_cast<long long>(att) - group.g_e;
    used = std::clamp(used, 0LL, total_slots);
    out[static_cast<size_t>(owned_among_top[static_cast<size_t>(used)])] += att_pmf[att];
  }
  return out;
}

double cs_exact_overflow_risk(const std::vector<EsGroupForCs>& groups, int cs_id, double sigma,
                              long long g_c) {
  // Convolve the per-group used-slot counts (groups are independent since
  // each user contracts with at most one edge server).
  std::vector<double> dist(1, 1.0);
  for (const EsGroupForCs& g : groups) {
    const std::vector<double> part = fulfilled_count_pmf(g, cs_id);
    std::vector<double> next(dist.size() + part.size() - 1, 0.0);
    for (size_t i = 0; i < dist.size(); ++i) {
      for (size_t j = 0; j < part.size(); ++j) {
        next[i + j] += dist[i] * part[j];
      }
    }
    dist.swap(next);
  }
  const std::vector<double> eps_pmf = capped_poisson_pmf(sigma, g_c);
  double risk = 0.0;
  for (long long h = 0; h <= g_c; ++h) {
    risk += eps_pmf[static_cast<size_t>(h)] * pmf_tail(dist, g_c - h);
  }
  return std::clamp(risk, 0.0, 1.0);
}

}  // namespace camen
