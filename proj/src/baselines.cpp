#include "agmf/baselines.hpp"

#include "agmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace agmf {

namespace {

constexpr double kLogLikelihoodFloor = -690.7755278982137;  // ln(1e-300)

Matrix sampling_root(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const EigenDecomposition eig = eigendecompose(cov);
  return eig.vectors * eig.values.cwiseSqrt().asDiagonal();
}

Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

GaussianComponent moment_match(const GaussianMixture& mixture) {
  const Moments m = mixture_moments(mixture);
  return {1.0, m.mean, m.cov};
}

FilterConfig ukf_config(double kappa) {
  FilterConfig config;
  config.l_max = 1;
  config.reduce_pred = 1;
  config.reduce_filt = 1;
  config.scheme = SchemeConfig::unscented(kappa);
  return config;
}

StateSpaceModel unimodal_model(const StateSpaceModel& model) {
  StateSpaceModel out = model;
  out.process_noise = GaussianMixture(moment_match(model.process_noise));
  out.measurement_noise = GaussianMixture(moment_match(model.measurement_noise));
  return out;
}

GaussianComponent ukf_step(const GaussianComponent& state, const Vector& u, const Vector& z, int k,
                           const StateSpaceModel& model, double kappa) {
  const FilterConfig config = ukf_config(kappa);
  const StateSpaceModel single = unimodal_model(model);
  FilterState current{k, GaussianMixture(state.with_weight(1.0)), false, {}};
  current = predict(current, u, single, config);
  current = update(current, z, single, config);
  return current.density[0];
}

AdaptResult mwe_adapt(const GaussianMixture& joint, const VectorFunction& g,
                      const FilterConfig& config) {
  FilterConfig mwe = config;
  mwe.policy = SplitPolicy::kLargestWeightEigen;
  return adapt(joint, g, mwe);
}

MixtureSampler::MixtureSampler(const GaussianMixture& mixture) : dim_(mixture.dim()) {
  double total = 0.0;
  for (const auto& c : mixture) {
    total += c.weight();
    cumulative_.push_back(total);
    means_.push_back(c.mean());
    roots_.push_back(sampling_root(c.cov()));
  }
  if (!(total > 0.0)) throw InvalidInput("cannot sample a mixture with zero total weight");
  for (double& c : cumulative_) c /= total;
}

Vector MixtureSampler::operator()(Rng& rng) const {
  std::size_t index = 0;
  if (means_.size() > 1) {
    const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    index = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), draw) - cumulative_.begin());
    index = std::min(index, means_.size() - 1);
  }
  return means_[index] + roots_[index] * standard_normal(dim_, rng);
}

MixtureLogDensity::MixtureLogDensity(const GaussianMixture& mixture) {
  for (const auto& c : mixture) {
    if (c.weight() <= 0.0) continue;
    Eigen::LLT<Matrix> llt(c.cov());
    if (llt.info() != Eigen::Success) {
      throw NumericalError("mixture density: covariance is not positive definite");
    }
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    log_weights_.push_back(std::log(c.weight()));
    means_.push_back(c.mean());
    log_norms_.push_back(
        -0.5 * (static_cast<double>(c.dim()) * std::log(2.0 * std::numbers::pi) + log_det));
    factors_.push_back(std::move(llt));
  }
  if (means_.empty()) throw InvalidInput("mixture density: no component with positive weight");
}

double MixtureLogDensity::operator()(const Vector& x) const {
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(means_.size());
  for (std::size_t i = 0; i < means_.size(); ++i) {
    const Vector white = factors_[i].matrixL().solve(x - means_[i]);
    terms[i] = log_weights_[i] + log_norms_[i] - 0.5 * white.squaredNorm();
    top = std::max(top, terms[i]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

Vector ParticleSet::mean() const {
  Vector m = Vector::Zero(particles.rows());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m += weights[i] * particles.col(static_cast<Eigen::Index>(i));
  }
  return m;
}

ParticleSet sample_particles(const GaussianMixture& prior, std::size_t count, Rng& rng) {
  if (count < 1) throw InvalidInput("particle count must be positive");
  const MixtureSampler sampler(prior);
  ParticleSet set{Matrix(prior.dim(), static_cast<Eigen::Index>(count)),
                  std::vector<double>(count, 1.0 / static_cast<double>(count))};
  for (std::size_t i = 0; i < count; ++i) set.particles.col(static_cast<Eigen::Index>(i)) = sampler(rng);
  return set;
}

std::vector<std::size_t> residual_resample(std::span<const double> weights, std::size_t count,
                                           Rng& rng) {
  if (weights.empty() || count < 1) throw InvalidInput("residual_resample: empty input");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DegenerateUpdate("residual_resample: weights sum to zero");

  std::vector<std::size_t> parents;
  parents.reserve(count);
  std::vector<double> residual(weights.size());
  const auto n = static_cast<double>(count);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double expected = n * weights[i] / total;
    const auto copies = static_cast<std::size_t>(std::floor(expected));
    parents.insert(parents.end(), std::min(copies, count - parents.size()), i);
    residual[i] = expected - static_cast<double>(copies);
  }
  if (parents.size() < count) {
    std::discrete_distribution<std::size_t> draw(residual.begin(), residual.end());
    while (parents.size() < count) parents.push_back(draw(rng));
  }
  return parents;
}

ParticleSet pf_step(const ParticleSet& set, const Vector& u, const Vector& z, int k,
                    const StateSpaceModel& model, Rng& rng) {
  model.validate();
  if (!model.additive_measurement_noise) {
    throw InvalidInput("particle filter requires additive measurement noise");
  }
  const std::size_t count = set.size();
  if (count < 1) throw InvalidInput("particle set is empty");
  const MixtureSampler process(model.process_noise);
  const MixtureLogDensity likelihood(model.measurement_noise);
  const Vector zero_noise = Vector::Zero(model.measurement_noise.dim());

  Matrix moved(set.particles.rows(), set.particles.cols());
  std::vector<double> log_weights(count);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector x = model.system(set.particles.col(col), u, process(rng), k);
    moved.col(col) = x;
    const double ll = likelihood(z - model.measurement(x, zero_noise, k + 1));
    log_weights[i] = std::log(set.weights[i]) + ll;
    top = std::max(top, ll);
  }
  if (!(top >= kLogLikelihoodFloor)) throw DegenerateUpdate("particle weights collapsed");

  const double shift = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> weights(count);
  for (std::size_t i = 0; i < count; ++i) weights[i] = std::exp(log_weights[i] - shift);

  const std::vector<std::size_t> parents = residual_resample(weights, count, rng);
  ParticleSet out{Matrix(moved.rows(), moved.cols()),
                  std::vector<double>(count, 1.0 / static_cast<double>(count))};
  for (std::size_t i = 0; i < count; ++i) {
    out.particles.col(static_cast<Eigen::Index>(i)) =
        moved.col(static_cast<Eigen::Index>(parents[i]));
  }
  return out;
}

}  // namespace agmf
