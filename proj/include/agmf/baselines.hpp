#pragma once

#include "agmf/filter.hpp"
#include "agmf/mixture.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace agmf {

using Rng = std::mt19937_64;

/// Single Gaussian with the mean and covariance of the mixture.
GaussianComponent moment_match(const GaussianMixture& mixture);

/// Configuration that turns predict/update into an unscented Kalman filter:
/// one component, no splitting, unscented transform with `kappa`.
FilterConfig ukf_config(double kappa = 0.5);

/// Copy of the model with both noise mixtures moment matched to one Gaussian.
StateSpaceModel unimodal_model(const StateSpaceModel& model);

/// One predict/update cycle of the unscented Kalman filter. `k` is the time
/// index of the incoming state.
GaussianComponent ukf_step(const GaussianComponent& state, const Vector& u, const Vector& z, int k,
                           const StateSpaceModel& model, double kappa = 0.5);

/// Split loop with the largest-weight / largest-eigenvalue rule. Splits until
/// l_max is reached or the ISD bound is hit; linearization errors only
/// exclude components that are affine on their support.
AdaptResult mwe_adapt(const GaussianMixture& joint, const VectorFunction& g,
                      const FilterConfig& config);

/// Draws samples from a Gaussian mixture using precomputed matrix roots.
class MixtureSampler {
 public:
  explicit MixtureSampler(const GaussianMixture& mixture);

  Vector operator()(Rng& rng) const;
  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::Index dim_;
  std::vector<double> cumulative_;
  std::vector<Vector> means_;
  std::vector<Matrix> roots_;
};

/// Log density of a Gaussian mixture with cached factorizations.
class MixtureLogDensity {
 public:
  explicit MixtureLogDensity(const GaussianMixture& mixture);

  double operator()(const Vector& x) const;

 private:
  std::vector<double> log_weights_;
  std::vector<Vector> means_;
  std::vector<Eigen::LLT<Matrix>> factors_;
  std::vector<double> log_norms_;
};

struct ParticleSet {
  Matrix particles;  ///< one particle per column
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  Vector mean() const;
};

ParticleSet sample_particles(const GaussianMixture& prior, std::size_t count, Rng& rng);

/// Parent index of every resampled particle. Each parent i is copied
/// floor(count * w_i) times; the remainder is drawn from the residual weights.
std::vector<std::size_t> residual_resample(std::span<const double> weights, std::size_t count,
                                           Rng& rng);

/// Bootstrap particle filter step: propagate with sampled process noise,
/// weight by the measurement-noise density of z - h(x, 0), then resample.
/// Requires additive measurement noise. Throws DegenerateUpdate when every
/// likelihood underflows.
ParticleSet pf_step(const ParticleSet& set, const Vector& u, const Vector& z, int k,
                    const StateSpaceModel& model, Rng& rng);

}  // namespace agmf
