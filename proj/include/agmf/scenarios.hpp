#pragma once

#include "agmf/baselines.hpp"
#include "agmf/filter.hpp"
#include "agmf/mixture.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace agmf {

// Growth process y = xi / 2 + 5 xi / (1 + xi^2) + w with [xi, w] ~ N([1, 0], I).

double growth_map(double xi);
Vector growth_function(const Vector& x);
GaussianComponent growth_prior();

struct Grid {
  double lo = -15.0;
  double hi = 15.0;
  double step = 0.005;

  std::size_t size() const;
  double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
};

struct TabulatedDensity {
  Grid grid;
  std::vector<double> values;

  /// Riemann sum over the grid.
  double integral() const;
};

/// Density of y = map(xi) + w for xi ~ N(1, 1), w ~ N(0, 1). The noise is
/// integrated analytically and xi by Gauss-Legendre quadrature with `nodes`
/// nodes on [1 - 8, 1 + 8].
TabulatedDensity true_density_growth(const Grid& grid = {},
                                     const std::function<double(double)>& map = growth_map,
                                     int nodes = 2000);

/// Tabulates a one-dimensional mixture on the grid.
TabulatedDensity tabulate(const GaussianMixture& mixture, const Grid& grid);

/// sum truth * ln(truth / approx) * step with both densities floored at 1e-300.
double kld_on_grid(const TabulatedDensity& truth, const GaussianMixture& approx);

/// Output mixture built from each component's propagated moments.
GaussianMixture pushforward_mixture(const AdaptResult& adapted);

struct ShapeScheme {
  std::string name;
  SplitPolicy policy = SplitPolicy::kAdaptive;
  double gamma = 0.5;
};

struct ShapeScenario {
  SchemeConfig scheme = SchemeConfig::gaussian_estimator(4);
  double gamma = 0.5;
  std::vector<std::size_t> schedule = {1, 2, 4, 8, 16, 32, 64};
  Grid grid;
  int truth_nodes = 2000;

  /// gamma-weighted criterion, weight-only criterion, largest eigenvalue.
  std::vector<ShapeScheme> schemes() const;
  void validate() const;
};

struct ShapeRow {
  std::string scheme;
  std::size_t components = 0;
  double kld_x10 = 0.0;
  GaussianMixture output;
};

struct ShapeSummary {
  std::string scheme;
  std::size_t splits = 0;
  std::size_t xi_splits = 0;  ///< splits whose axis is closer to xi than to w
};

struct ShapeResult {
  std::vector<ShapeRow> rows;
  std::vector<ShapeSummary> summaries;
  TabulatedDensity truth;
};

ShapeResult run_shape(const ShapeScenario& scenario);

// Bicycle kinematics observed by a range/bearing radar with glint noise.

Vector bicycle_dynamics(const Vector& x, const Vector& u, const Vector& w);
Vector radar_measurement(const Vector& x, const Vector& v);

/// (1 - beta) N(0, diag(1, 0.1^2)) + beta N(0, diag(2^2, 0.2^2)), covariances
/// multiplied by `scale`. Components with zero weight are dropped.
GaussianMixture glint_noise(double beta, double scale = 1.0);
GaussianMixture bicycle_process_noise(double scale = 1.0);
GaussianComponent tracking_prior();
StateSpaceModel tracking_model(double beta, double noise_scale = 1.0);

enum class FilterKind { kAgmf, kMwe, kUkf, kPf };

std::string to_string(FilterKind kind);
/// Throws InvalidInput for unknown names.
FilterKind parse_filter(const std::string& name);

struct FilterSpec {
  FilterKind kind = FilterKind::kAgmf;
  std::size_t reduction = 8;  ///< mixture filters only
};

struct TrackScenario {
  double beta = 0.4;
  int steps = 100;
  int runs = 50;
  std::uint64_t seed = 1;
  bool truth_from_prior = true;
  double noise_scale = 1.0;
  std::size_t particles = 10000;

  void validate() const;
};

struct Trajectory {
  std::vector<Vector> states;        ///< x_1 .. x_steps
  std::vector<Vector> inputs;        ///< u_0 .. u_{steps-1}
  std::vector<Vector> measurements;  ///< z_1 .. z_steps
};

/// Ground truth and measurements of one Monte Carlo run. Depends only on the
/// scenario seed and the run index.
Trajectory simulate_run(const TrackScenario& scenario, int run);

struct TrackRow {
  std::string filter;
  double beta = 0.0;
  std::size_t reduction = 0;  ///< 0 for filters without a mixture
  double rmse = 0.0;
  double runtime_s = 0.0;
  double avg_splits = 0.0;  ///< per prediction or filter step
  std::size_t diverged_runs = 0;
  std::size_t degenerate_runs = 0;
};

/// Runs every filter on identical trajectories. RMSE covers the position
/// error of the posterior mean over all steps of the runs that did not
/// diverge; runtime is the mean wall-clock time per run.
std::vector<TrackRow> run_tracking(const TrackScenario& scenario,
                                   std::span<const FilterSpec> filters,
                                   const FilterConfig& config);

}  // namespace agmf
