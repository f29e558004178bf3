#pragma once

#include "agmf/mixture.hpp"

#include <cstddef>

namespace agmf {

/// Moment-matched merge of two components.
GaussianComponent merge_pair(const GaussianComponent& a, const GaussianComponent& b);

/// Upper bound on the KL divergence caused by merging a and b:
/// 0.5 * [(wa + wb) ln|C| - wa ln|Ca| - wb ln|Cb|] with C the merged covariance.
double merge_cost(const GaussianComponent& a, const GaussianComponent& b);

/// Greedily merges the cheapest pair until at most `target` components are
/// left. Merging preserves the total weight, mean and covariance. Ties are
/// broken by the lower index pair so the result is deterministic.
GaussianMixture reduce(const GaussianMixture& mixture, std::size_t target);

}  // namespace agmf
