#include "camen/poisson_binomial.hpp"

namespace camen {

std::vector<double> poisson_binomial_pmf(const std::vector<double>& probs) {
  std::vector<double> pmf(1, 1.0);
  pmf.reserve(probs.size() + 1);
  for (double p : probs) {
    pmf.push_back(0.0);
    for (size_t k = pmf.size() - 1; k > 0; --k) {
      pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    }
    pmf[0] *= (1.0 - p);
  }
  return pmf;
}

double pmf_tail(const std::vector<double>& pmf, long long threshold) {
  if (threshold < 0) return 1.0;
  if (threshold + 1 >= static_cast<long long>(pmf.size())) return 0.0;
  double tail = 0.0;
  // Sum smallest terms first to keep the accumulation well conditioned.
  for (size_t k = pmf.size(); k > static_cast<size_t>(threshold + 1); --k) {
    tail += pmf[k - 1];
  }
  return tail < 0.0 ? 0.0 : (tail > 1.0 ? 1.0 : tail);
}

double poisson_binomial_tail(const std::vector<double>& probs, long long threshold) {
  if (threshold < 0) return 1.0;
  if (threshold >= static_cast<long long>(probs.size())) return 0.0;
  return pmf_tail(poisson_binomial_pmf(probs), threshold);
}

}  // namespace camen
