#include "agmf/filter.hpp"

#include "agmf/errors.hpp"
#include "agmf/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace agmf {

namespace {

constexpr double kAffineTolerance = 1e-10;
constexpr double kLogLikelihoodFloor = -690.7755278982137;  // ln(1e-300)

Linearization linearize_component(const VectorFunction& g, const GaussianComponent& c,
                                  const SchemeConfig& scheme) {
  return linearize(g, c.mean(), c.cov(), scheme);
}

std::size_t choose_component(const std::vector<GaussianComponent>& components,
                             const std::vector<Linearization>& lins,
                             const std::vector<bool>& frozen, const FilterConfig& config,
                             double& best_score) {
  std::size_t chosen = components.size();
  best_score = -1.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (frozen[i] || locally_affine(lins[i])) continue;
    const double score =
        config.policy == SplitPolicy::kAdaptive
            ? selection_score(components[i].weight(), error_trace(lins[i]), config.gamma)
            : components[i].weight();
    if (score > best_score) {
      best_score = score;
      chosen = i;
    }
  }
  return chosen;
}

}  // namespace

void StateSpaceModel::validate() const {
  if (state_dim < 1) throw InvalidInput("model state dimension must be positive");
  if (!system || !measurement) throw InvalidInput("model functions must be set");
  if (!process_noise.is_normalized() || !measurement_noise.is_normalized()) {
    throw InvalidInput("noise mixtures must be normalized");
  }
}

void FilterConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(gamma)) throw InvalidInput("gamma must lie in [0, 1]");
  if (!unit(eps_max)) throw InvalidInput("eps_max must lie in [0, 1]");
  if (!unit(d_max)) throw InvalidInput("d_max must lie in [0, 1]");
  if (l_max < 1) throw InvalidInput("l_max must be positive");
  if (reduce_pred < 1 || reduce_pred > l_max || reduce_filt < 1 || reduce_filt > l_max) {
    throw InvalidInput("reduction thresholds must lie in [1, l_max]");
  }
  split_library.validate();
}

GaussianMixture joint_components(const GaussianMixture& state, const GaussianMixture& noise) {
  const Eigen::Index nx = state.dim();
  const Eigen::Index nw = noise.dim();
  std::vector<GaussianComponent> out;
  out.reserve(state.size() * noise.size());
  for (const auto& a : state) {
    for (const auto& b : noise) {
      Vector mean(nx + nw);
      mean << a.mean(), b.mean();
      Matrix cov = Matrix::Zero(nx + nw, nx + nw);
      cov.topLeftCorner(nx, nx) = a.cov();
      cov.bottomRightCorner(nw, nw) = b.cov();
      out.emplace_back(a.weight() * b.weight(), std::move(mean), std::move(cov));
    }
  }
  if (state.is_normalized() && noise.is_normalized()) {
    return GaussianMixture::normalize(std::move(out));
  }
  return GaussianMixture(std::move(out), false);
}

bool locally_affine(const Linearization& lin) {
  return error_trace(lin) <= kAffineTolerance * std::max(1.0, lin.y_cov.trace());
}

AdaptResult adapt(const GaussianMixture& joint, const VectorFunction& g,
                  const FilterConfig& config) {
  config.validate();
  const std::size_t extra = config.split_library.offsets.size() - 1;
  const bool track_isd = config.d_max < 1.0;

  std::vector<GaussianComponent> components(joint.begin(), joint.end());
  std::vector<Linearization> lins;
  lins.reserve(components.size());
  for (const auto& c : components) lins.push_back(linearize_component(g, c, config.scheme));
  std::vector<bool> frozen(components.size(), false);
  std::vector<SplitRecord> splits;

  while (true) {
    double best_score = 0.0;
    const std::size_t chosen = choose_component(components, lins, frozen, config, best_score);
    if (chosen == components.size()) break;
    if (components.size() + extra > config.l_max) break;
    if (config.policy == SplitPolicy::kAdaptive && best_score < config.eps_max) break;

    const GaussianComponent& parent = components[chosen];
    const EigenDecomposition eig = eigendecompose(parent.cov());
    std::size_t direction = static_cast<std::size_t>(eig.values.size());
    if (config.policy == SplitPolicy::kAdaptive) {
      const std::vector<double> d =
          direction_scores(parent, g, lins[chosen], config.scheme, config.quadrature);
      direction = best_direction(d, eig);
    } else if (splittable_direction(eig, 0)) {
      direction = 0;
    }
    if (direction == static_cast<std::size_t>(eig.values.size())) {
      frozen[chosen] = true;
      continue;
    }

    std::vector<GaussianComponent> children =
        split_component(parent, direction, eig, config.split_library);
    std::vector<GaussianComponent> candidate;
    candidate.reserve(components.size() + extra);
    candidate.insert(candidate.end(), components.begin(), components.begin() + chosen);
    candidate.insert(candidate.end(), children.begin(), children.end());
    candidate.insert(candidate.end(), components.begin() + chosen + 1, components.end());
    if (track_isd &&
        normalized_isd(joint, GaussianMixture(candidate, joint.is_normalized())) > config.d_max) {
      break;
    }

    std::vector<Linearization> child_lins;
    child_lins.reserve(children.size());
    for (const auto& c : children) child_lins.push_back(linearize_component(g, c, config.scheme));
    splits.push_back({chosen, direction, eig.vectors.col(static_cast<Eigen::Index>(direction))});

    components = std::move(candidate);
    lins.erase(lins.begin() + static_cast<std::ptrdiff_t>(chosen));
    lins.insert(lins.begin() + static_cast<std::ptrdiff_t>(chosen), child_lins.begin(),
                child_lins.end());
    frozen.erase(frozen.begin() + static_cast<std::ptrdiff_t>(chosen));
    frozen.insert(frozen.begin() + static_cast<std::ptrdiff_t>(chosen), children.size(), false);
  }

  return {GaussianMixture(std::move(components), joint.is_normalized()), std::move(lins),
          std::move(splits)};
}

FilterState initial_state(const GaussianMixture& prior) {
  std::vector<GaussianComponent> components(prior.begin(), prior.end());
  return {0, GaussianMixture::normalize(std::move(components)), false, {}};
}

FilterState predict(const FilterState& state, const Vector& u, const StateSpaceModel& model,
                    const FilterConfig& config) {
  model.validate();
  const Eigen::Index nx = model.state_dim;
  if (state.density.dim() != nx) throw InvalidInput("predict: state dimension mismatch");
  const GaussianMixture joint = joint_components(state.density, model.process_noise);
  const int k = state.k;
  const VectorFunction g = [&](const Vector& x) {
    return model.system(x.head(nx), u, x.tail(x.size() - nx), k);
  };
  const AdaptResult adapted = adapt(joint, g, config);

  StepDiagnostics diag;
  diag.splits = adapted.splits.size();
  std::vector<GaussianComponent> predicted;
  predicted.reserve(adapted.mixture.size());
  for (std::size_t s = 0; s < adapted.mixture.size(); ++s) {
    const GaussianComponent& c = adapted.mixture[s];
    const Linearization& lin = adapted.linearizations[s];
    if (lin.slope.rows() != nx) throw InvalidInput("predict: system function has wrong output size");
    const Vector mean = lin.slope * c.mean() + lin.offset;
    const Matrix cov = lin.slope * c.cov() * lin.slope.transpose() + lin.error_cov;
    predicted.emplace_back(c.weight(), mean, cov);
    diag.epsilons.push_back(error_trace(lin));
  }
  diag.components_before_reduction = predicted.size();
  GaussianMixture density = reduce(GaussianMixture::normalize(std::move(predicted)),
                                   config.reduce_pred);
  return {k + 1, std::move(density), true, std::move(diag)};
}

FilterState update(const FilterState& state, const Vector& z, const StateSpaceModel& model,
                   const FilterConfig& config) {
  model.validate();
  const Eigen::Index nx = model.state_dim;
  if (state.density.dim() != nx) throw InvalidInput("update: state dimension mismatch");
  const GaussianMixture joint = joint_components(state.density, model.measurement_noise);
  const int k = state.k;
  const VectorFunction h = [&](const Vector& x) {
    return model.measurement(x.head(nx), x.tail(x.size() - nx), k);
  };
  const AdaptResult adapted = adapt(joint, h, config);

  StepDiagnostics diag;
  diag.splits = adapted.splits.size();
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  std::vector<double> log_weights;
  double best_likelihood = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < adapted.mixture.size(); ++s) {
    const GaussianComponent& c = adapted.mixture[s];
    const Linearization& lin = adapted.linearizations[s];
    if (lin.offset.size() != z.size()) throw InvalidInput("update: measurement size mismatch");
    const Vector z_hat = lin.slope * c.mean() + lin.offset;
    const Matrix joint_cross = c.cov() * lin.slope.transpose();
    Matrix innovation = lin.slope * joint_cross + lin.error_cov;
    innovation = 0.5 * (innovation + innovation.transpose());
    const Eigen::LLT<Matrix> llt(innovation);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("update: innovation covariance is not positive definite");
    }
    const Matrix cross = joint_cross.topRows(nx);
    const Matrix gain = llt.solve(cross.transpose()).transpose();
    const Vector residual = z - z_hat;
    means.push_back(c.mean().head(nx) + gain * residual);
    Matrix cov = c.cov().topLeftCorner(nx, nx) - gain * cross.transpose();
    covs.push_back(0.5 * (cov + cov.transpose()));

    const Vector white = llt.matrixL().solve(residual);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double log_likelihood =
        -0.5 * (static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                white.squaredNorm());
    if (c.weight() > 0.0) best_likelihood = std::max(best_likelihood, log_likelihood);
    log_weights.push_back(std::log(c.weight()) + log_likelihood);
    diag.epsilons.push_back(error_trace(lin));
  }
  diag.components_before_reduction = means.size();

  if (!(best_likelihood >= kLogLikelihoodFloor)) {
    diag.degenerate = true;
    std::vector<GaussianComponent> fallback;
    for (const auto& c : state.density) fallback.emplace_back(c.weight(), c.mean(), 2.0 * c.cov());
    GaussianMixture density = reduce(GaussianMixture::normalize(std::move(fallback)),
                                     config.reduce_filt);
    return {k, std::move(density), false, std::move(diag)};
  }

  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<GaussianComponent> posterior;
  posterior.reserve(means.size());
  for (std::size_t s = 0; s < means.size(); ++s) {
    posterior.emplace_back(std::exp(log_weights[s] - top), std::move(means[s]), std::move(covs[s]));
  }
  GaussianMixture density = reduce(GaussianMixture::normalize(std::move(posterior)),
                                   config.reduce_filt);
  return {k, std::move(density), false, std::move(diag)};
}

}  // namespace agmf
