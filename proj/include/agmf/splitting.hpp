#pragma once

#include "agmf/mixture.hpp"
#include "agmf/statlin.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace agmf {

/// Univariate mixture approximating N(0, 1) that a component is replaced by
/// along one eigenvector.
struct SplitLibrary {
  std::vector<double> offsets;
  std::vector<double> weights;
  std::vector<double> variances;

  /// 0.5 N(-offset, 1 - offset^2) + 0.5 N(offset, 1 - offset^2).
  static SplitLibrary two_component(double offset = 0.5);

  /// Throws InvalidInput unless weights, mean and variance of the library
  /// match the standard Gaussian within 1e-12.
  void validate() const;
};

struct SplitScore {
  std::size_t component = 0;
  double score = 0.0;
  double epsilon = 0.0;
};

/// weight^gamma * (1 - exp(-epsilon))^(1 - gamma), with 0^0 = 1.
double selection_score(double weight, double epsilon, double gamma);

std::vector<SplitScore> selection_scores(const GaussianMixture& mixture,
                                         std::span<const Linearization> linearizations,
                                         double gamma);

/// How the squared residual is integrated along an eigenvector.
struct DirectionQuadrature {
  enum class Kind {
    kGaussHermite,  ///< probabilists' Gauss-Hermite rule with `nodes` nodes
    kSchemePoints,  ///< the univariate point set of the linearization scheme
  };
  Kind kind = Kind::kGaussHermite;
  int nodes = 10;
};

/// Accumulated squared residual of `lin` along each eigenvector of the
/// component covariance, weighted by the Gaussian along that line. Entries for
/// eigenvalues that are zero relative to the largest one are reported as 0
/// and are never chosen as split directions.
std::vector<double> direction_scores(const GaussianComponent& component, const VectorFunction& g,
                                     const Linearization& lin, const SchemeConfig& scheme,
                                     const DirectionQuadrature& quadrature = {});

/// Index of the best split direction: highest score among splittable
/// eigenvectors, ties going to the larger eigenvalue. Returns values.size()
/// if no direction has positive variance.
std::size_t best_direction(std::span<const double> scores, const EigenDecomposition& eig);

/// True if eigenvalue `l` carries enough variance to be split.
bool splittable_direction(const EigenDecomposition& eig, std::size_t l);

/// Replaces the component by the library mixture along eigenvector
/// `direction`. Throws NumericalError if a child covariance is indefinite.
std::vector<GaussianComponent> split_component(const GaussianComponent& component,
                                               std::size_t direction,
                                               const EigenDecomposition& eig,
                                               const SplitLibrary& library);

struct SplitOutcome {
  GaussianMixture mixture;
  std::size_t component = 0;
  std::size_t direction = 0;
  Vector axis;
};

/// Splits the component with the highest selection score along its best
/// direction. The children take the parent's position in the component list.
SplitOutcome select_and_split(const GaussianMixture& mixture,
                              std::span<const Linearization> linearizations,
                              const VectorFunction& g, double gamma, const SchemeConfig& scheme,
                              const SplitLibrary& library,
                              const DirectionQuadrature& quadrature = {});

}  // namespace agmf
