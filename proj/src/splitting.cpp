#include "agmf/splitting.hpp"

#include "agmf/errors.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace agmf {

namespace {

constexpr double kLibraryTolerance = 1e-12;
constexpr double kFlatDirection = 1e-12;

struct UnivariateRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes and weights for E[f(nu)], nu ~ N(0, 1).
UnivariateRule compute_gauss_hermite(int count) {
  using Workspace = std::unique_ptr<gsl_integration_fixed_workspace,
                                    decltype(&gsl_integration_fixed_free)>;
  Workspace ws(gsl_integration_fixed_alloc(gsl_integration_fixed_hermite,
                                           static_cast<std::size_t>(count), 0.0, 1.0, 0.0, 0.0),
               &gsl_integration_fixed_free);
  if (!ws) throw InvalidInput("Gauss-Hermite rule allocation failed");
  const double* x = gsl_integration_fixed_nodes(ws.get());
  const double* w = gsl_integration_fixed_weights(ws.get());
  UnivariateRule rule;
  for (int i = 0; i < count; ++i) {
    rule.nodes.push_back(std::numbers::sqrt2 * x[i]);
    rule.weights.push_back(w[i] / std::sqrt(std::numbers::pi));
  }
  return rule;
}

const UnivariateRule& gauss_hermite(int count) {
  static std::mutex mutex;
  static std::map<int, UnivariateRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(count);
  if (it == cache.end()) it = cache.emplace(count, compute_gauss_hermite(count)).first;
  return it->second;
}

UnivariateRule scheme_rule(const SchemeConfig& scheme) {
  const PointRule rule = point_rule(scheme, 1);
  UnivariateRule out;
  out.nodes.push_back(0.0);
  out.weights.push_back(rule.center_weight);
  for (double nu : rule.scaling) {
    out.nodes.push_back(nu);
    out.weights.push_back(rule.offset_weight);
  }
  return out;
}

std::vector<double> scores_along(const GaussianComponent& component, const EigenDecomposition& eig,
                                 const VectorFunction& g, const Linearization& lin,
                                 const SchemeConfig& scheme,
                                 const DirectionQuadrature& quadrature) {
  UnivariateRule local;
  const UnivariateRule* rule = &local;
  if (quadrature.kind == DirectionQuadrature::Kind::kGaussHermite) {
    if (quadrature.nodes < 1) throw InvalidInput("direction quadrature needs at least one node");
    rule = &gauss_hermite(quadrature.nodes);
  } else {
    local = scheme_rule(scheme);
  }

  const auto n = static_cast<std::size_t>(eig.values.size());
  std::vector<double> scores(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    if (!splittable_direction(eig, l)) continue;
    const Vector step = std::sqrt(eig.values(static_cast<Eigen::Index>(l))) *
                        eig.vectors.col(static_cast<Eigen::Index>(l));
    double d = 0.0;
    for (std::size_t j = 0; j < rule->nodes.size(); ++j) {
      const Vector x = component.mean() + rule->nodes[j] * step;
      d += rule->weights[j] * residual_at(lin, g, x).squaredNorm();
    }
    scores[l] = d;
  }
  return scores;
}

}  // namespace

SplitLibrary SplitLibrary::two_component(double offset) {
  if (!(std::abs(offset) < 1.0)) throw InvalidInput("split offset must lie in (-1, 1)");
  const double variance = 1.0 - offset * offset;
  return {{-offset, offset}, {0.5, 0.5}, {variance, variance}};
}

void SplitLibrary::validate() const {
  if (offsets.empty() || offsets.size() != weights.size() || offsets.size() != variances.size()) {
    throw InvalidInput("split library entries must be non-empty and of equal length");
  }
  double mass = 0.0;
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    if (weights[j] < 0.0 || variances[j] < 0.0) {
      throw InvalidInput("split library weights and variances must be nonnegative");
    }
    mass += weights[j];
    mean += weights[j] * offsets[j];
    second += weights[j] * (variances[j] + offsets[j] * offsets[j]);
  }
  if (std::abs(mass - 1.0) > kLibraryTolerance || std::abs(mean) > kLibraryTolerance ||
      std::abs(second - 1.0) > kLibraryTolerance) {
    throw InvalidInput("split library does not preserve the moments of N(0, 1)");
  }
}

double selection_score(double weight, double epsilon, double gamma) {
  const double error_term = -std::expm1(-std::max(epsilon, 0.0));
  return std::clamp(std::pow(weight, gamma) * std::pow(error_term, 1.0 - gamma), 0.0, 1.0);
}

std::vector<SplitScore> selection_scores(const GaussianMixture& mixture,
                                         std::span<const Linearization> linearizations,
                                         double gamma) {
  if (linearizations.size() != mixture.size()) {
    throw InvalidInput("selection_scores: one linearization per component required");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
  std::vector<SplitScore> scores;
  scores.reserve(mixture.size());
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    const double eps = error_trace(linearizations[i]);
    scores.push_back({i, selection_score(mixture[i].weight(), eps, gamma), eps});
  }
  return scores;
}

bool splittable_direction(const EigenDecomposition& eig, std::size_t l) {
  const double largest = eig.values.size() > 0 ? eig.values(0) : 0.0;
  const double value = eig.values(static_cast<Eigen::Index>(l));
  return value > 0.0 && value > kFlatDirection * largest;
}

std::vector<double> direction_scores(const GaussianComponent& component, const VectorFunction& g,
                                     const Linearization& lin, const SchemeConfig& scheme,
                                     const DirectionQuadrature& quadrature) {
  return scores_along(component, eigendecompose(component.cov()), g, lin, scheme, quadrature);
}

std::size_t best_direction(std::span<const double> scores, const EigenDecomposition& eig) {
  std::size_t best = scores.size();
  for (std::size_t l = 0; l < scores.size(); ++l) {
    if (!splittable_direction(eig, l)) continue;
    if (best == scores.size() || scores[l] > scores[best]) best = l;
  }
  return best;
}

std::vector<GaussianComponent> split_component(const GaussianComponent& component,
                                               std::size_t direction,
                                               const EigenDecomposition& eig,
                                               const SplitLibrary& library) {
  library.validate();
  if (direction >= static_cast<std::size_t>(eig.values.size())) {
    throw InvalidInput("split direction out of range");
  }
  const auto l = static_cast<Eigen::Index>(direction);
  const double lambda = eig.values(l);
  if (!(lambda > 0.0)) throw InvalidInput("cannot split along a zero-variance direction");
  const Vector axis = eig.vectors.col(l);
  const Matrix outer = axis * axis.transpose();
  const double spread = std::sqrt(lambda);

  std::vector<GaussianComponent> children;
  children.reserve(library.offsets.size());
  for (std::size_t j = 0; j < library.offsets.size(); ++j) {
    children.emplace_back(component.weight() * library.weights[j],
                          component.mean() + spread * library.offsets[j] * axis,
                          component.cov() + lambda * (library.variances[j] - 1.0) * outer);
  }
  return children;
}

SplitOutcome select_and_split(const GaussianMixture& mixture,
                              std::span<const Linearization> linearizations,
                              const VectorFunction& g, double gamma, const SchemeConfig& scheme,
                              const SplitLibrary& library,
                              const DirectionQuadrature& quadrature) {
  const std::vector<SplitScore> scores = selection_scores(mixture, linearizations, gamma);
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].score > scores[chosen].score) chosen = i;
  }
  const GaussianComponent& parent = mixture[chosen];
  const EigenDecomposition eig = eigendecompose(parent.cov());
  const std::vector<double> d =
      scores_along(parent, eig, g, linearizations[chosen], scheme, quadrature);
  const std::size_t direction = best_direction(d, eig);
  if (direction == d.size()) throw InvalidInput("selected component has no splittable direction");

  std::vector<GaussianComponent> components;
  components.reserve(mixture.size() + library.offsets.size() - 1);
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    if (i != chosen) {
      components.push_back(mixture[i]);
      continue;
    }
    for (auto& child : split_component(parent, direction, eig, library)) {
      components.push_back(std::move(child));
    }
  }
  return {GaussianMixture(std::move(components), mixture.is_normalized()), chosen, direction,
          eig.vectors.col(static_cast<Eigen::Index>(direction))};
}

}  // namespace agmf
