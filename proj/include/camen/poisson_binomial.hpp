#pragma once

#include <vector>

namespace camen {

// Distribution of a sum of independent, non-identically distributed Bernoulli
// variables. This kernel backs every attendance-dependent expectation in the
// market: volunteer probabilities, cloud-slot usage probabilities, and the
// overbooking risks of edge and cloud servers.

// pmf[k] = Pr(sum == k), k in [0, probs.size()]. O(n^2) dynamic program.
std::vector<double> poisson_binomial_pmf(const std::vector<double>& probs);

// Pr(sum > threshold). Negative thresholds give 1, thresholds >= n give 0.
double poisson_binomial_tail(const std::vector<double>& probs, long long threshold);

// Pr(sum > threshold) for a sum whose pmf is already known.
double pmf_tail(const std::vector<double>& pmf, long long threshold);

}  // namespace camen
