#pragma once

#include "agmf/mixture.hpp"
#include "agmf/splitting.hpp"
#include "agmf/statlin.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace agmf {

/// x_{k+1} = a_k(x_k, u_k, w_k) and z_k = h_k(x_k, v_k) with mixture noises.
struct StateSpaceModel {
  using SystemFunction =
      std::function<Vector(const Vector& x, const Vector& u, const Vector& w, int k)>;
  using MeasurementFunction = std::function<Vector(const Vector& x, const Vector& v, int k)>;

  Eigen::Index state_dim = 0;
  SystemFunction system;
  MeasurementFunction measurement;
  GaussianMixture process_noise;
  GaussianMixture measurement_noise;
  /// z = h(x, 0) + v; required by the particle filter.
  bool additive_measurement_noise = false;

  void validate() const;
};

enum class SplitPolicy {
  kAdaptive,            ///< selection and direction by linearization error
  kLargestWeightEigen,  ///< largest weight, largest eigenvalue, no error threshold
};

struct FilterConfig {
  double gamma = 0.5;
  double eps_max = 0.05;
  std::size_t l_max = 128;
  double d_max = 1.0;
  std::size_t reduce_pred = 8;
  std::size_t reduce_filt = 8;
  SchemeConfig scheme = SchemeConfig::unscented(0.5);
  SplitLibrary split_library = SplitLibrary::two_component(0.5);
  DirectionQuadrature quadrature;
  SplitPolicy policy = SplitPolicy::kAdaptive;

  void validate() const;
};

/// Product of a state mixture and a noise mixture over the stacked vector
/// [x; w]. Component s = i * noise.size() + j combines state i and noise j.
GaussianMixture joint_components(const GaussianMixture& state, const GaussianMixture& noise);

struct SplitRecord {
  std::size_t component = 0;
  std::size_t direction = 0;
  Vector axis;
};

struct AdaptResult {
  GaussianMixture mixture;
  std::vector<Linearization> linearizations;
  std::vector<SplitRecord> splits;
};

/// True if the linearization error of a component is too small to justify a
/// split. Such components are never selected.
bool locally_affine(const Linearization& lin);

/// Split-linearize loop. Stops when the mixture would exceed l_max, when no
/// component reaches eps_max (adaptive policy only), or when the normalized
/// ISD to the input mixture would exceed d_max. Only split children are
/// relinearized.
AdaptResult adapt(const GaussianMixture& joint, const VectorFunction& g, const FilterConfig& config);

struct StepDiagnostics {
  std::size_t splits = 0;
  std::size_t components_before_reduction = 0;
  std::vector<double> epsilons;
  bool degenerate = false;
};

struct FilterState {
  int k = 0;
  GaussianMixture density;
  bool predicted = false;
  StepDiagnostics diagnostics;
};

FilterState initial_state(const GaussianMixture& prior);

/// Kalman prediction of every joint component through its linearization,
/// followed by reduction to reduce_pred components.
FilterState predict(const FilterState& state, const Vector& u, const StateSpaceModel& model,
                    const FilterConfig& config);

/// Kalman update of every joint component and reweighting by the measurement
/// likelihood, followed by reduction to reduce_filt components. If every
/// likelihood underflows the predicted weights are kept, covariances are
/// doubled and diagnostics.degenerate is set.
FilterState update(const FilterState& state, const Vector& z, const StateSpaceModel& model,
                   const FilterConfig& config);

}  // namespace agmf
