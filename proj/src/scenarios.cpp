#include "agmf/scenarios.hpp"

#include "agmf/errors.hpp"

#include <gsl/gsl_integration.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

namespace agmf {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double std_normal(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

std::string format_gamma(double gamma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gamma%g", gamma);
  return buf;
}

Rng run_rng(std::uint64_t seed, int run, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), stream};
  return Rng(seq);
}

struct RunOutcome {
  double squared_error = 0.0;
  std::size_t splits = 0;
  std::size_t adapt_calls = 0;
  bool diverged = false;
  bool degenerate = false;
};

double position_error2(const Vector& estimate, const Vector& truth) {
  return (estimate.head(2) - truth.head(2)).squaredNorm();
}

RunOutcome run_mixture_filter(const Trajectory& traj, const StateSpaceModel& model,
                              const FilterConfig& config, const GaussianComponent& prior) {
  RunOutcome out;
  FilterState state = initial_state(GaussianMixture(prior));
  for (std::size_t k = 0; k < traj.measurements.size(); ++k) {
    state = predict(state, traj.inputs[k], model, config);
    out.splits += state.diagnostics.splits;
    state = update(state, traj.measurements[k], model, config);
    out.splits += state.diagnostics.splits;
    out.adapt_calls += 2;
    out.degenerate = out.degenerate || state.diagnostics.degenerate;
    const Vector estimate = mixture_moments(state.density).mean;
    if (!estimate.allFinite()) throw NumericalError("non-finite estimate");
    out.squared_error += position_error2(estimate, traj.states[k]);
  }
  return out;
}

RunOutcome run_particle_filter(const Trajectory& traj, const StateSpaceModel& model,
                               const GaussianComponent& prior, std::size_t particles, Rng& rng) {
  RunOutcome out;
  ParticleSet set = sample_particles(GaussianMixture(prior), particles, rng);
  for (std::size_t k = 0; k < traj.measurements.size(); ++k) {
    set = pf_step(set, traj.inputs[k], traj.measurements[k], static_cast<int>(k), model, rng);
    const Vector estimate = set.mean();
    if (!estimate.allFinite()) throw NumericalError("non-finite estimate");
    out.squared_error += position_error2(estimate, traj.states[k]);
  }
  return out;
}

}  // namespace

double growth_map(double xi) { return 0.5 * xi + 5.0 * xi / (1.0 + xi * xi); }

Vector growth_function(const Vector& x) {
  if (x.size() != 2) throw InvalidInput("growth_function expects [xi, w]");
  Vector y(1);
  y(0) = growth_map(x(0)) + x(1);
  return y;
}

GaussianComponent growth_prior() {
  Vector mean(2);
  mean << 1.0, 0.0;
  return {1.0, mean, Matrix::Identity(2, 2)};
}

std::size_t Grid::size() const {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidInput("grid needs hi >= lo and a positive step");
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
}

double TabulatedDensity::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.step;
}

TabulatedDensity true_density_growth(const Grid& grid, const std::function<double(double)>& map,
                                     int nodes) {
  if (nodes < 2) throw InvalidInput("true_density_growth: need at least two quadrature nodes");
  using Table = std::unique_ptr<gsl_integration_glfixed_table,
                                decltype(&gsl_integration_glfixed_table_free)>;
  Table table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nodes)),
              &gsl_integration_glfixed_table_free);
  if (!table) throw InvalidInput("true_density_growth: quadrature table allocation failed");

  std::vector<double> centers(static_cast<std::size_t>(nodes));
  std::vector<double> masses(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    double xi = 0.0;
    double w = 0.0;
    gsl_integration_glfixed_point(1.0 - 8.0, 1.0 + 8.0, static_cast<std::size_t>(i), &xi, &w,
                                  table.get());
    centers[static_cast<std::size_t>(i)] = map(xi);
    masses[static_cast<std::size_t>(i)] = w * std_normal(xi - 1.0);
  }

  TabulatedDensity out{grid, std::vector<double>(grid.size(), 0.0)};
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    const double y = grid.at(n);
    double f = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) f += masses[i] * std_normal(y - centers[i]);
    out.values[n] = f;
  }
  return out;
}

TabulatedDensity tabulate(const GaussianMixture& mixture, const Grid& grid) {
  if (mixture.dim() != 1) throw InvalidInput("tabulate: mixture must be one-dimensional");
  TabulatedDensity out{grid, std::vector<double>(grid.size(), 0.0)};
  for (const auto& c : mixture) {
    const double sd = std::sqrt(c.cov()(0, 0));
    if (!(sd > 0.0)) throw NumericalError("tabulate: component has zero variance");
    const double scale = c.weight() / sd;
    for (std::size_t n = 0; n < out.values.size(); ++n) {
      out.values[n] += scale * std_normal((grid.at(n) - c.mean()(0)) / sd);
    }
  }
  return out;
}

double kld_on_grid(const TabulatedDensity& truth, const GaussianMixture& approx) {
  const TabulatedDensity q = tabulate(approx, truth.grid);
  double sum = 0.0;
  for (std::size_t n = 0; n < truth.values.size(); ++n) {
    const double p = std::max(truth.values[n], kDensityFloor);
    const double a = std::max(q.values[n], kDensityFloor);
    sum += p * std::log(p / a);
  }
  return std::max(sum * truth.grid.step, 0.0);
}

GaussianMixture pushforward_mixture(const AdaptResult& adapted) {
  std::vector<GaussianComponent> out;
  out.reserve(adapted.mixture.size());
  for (std::size_t s = 0; s < adapted.mixture.size(); ++s) {
    out.emplace_back(adapted.mixture[s].weight(), adapted.linearizations[s].y_mean,
                     adapted.linearizations[s].y_cov);
  }
  return GaussianMixture::normalize(std::move(out));
}

std::vector<ShapeScheme> ShapeScenario::schemes() const {
  return {{format_gamma(gamma), SplitPolicy::kAdaptive, gamma},
          {"gamma1", SplitPolicy::kAdaptive, 1.0},
          {"maxeig", SplitPolicy::kLargestWeightEigen, 1.0}};
}

void ShapeScenario::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
  if (schedule.empty() || schedule.front() != 1) {
    throw InvalidInput("component schedule must start at 1");
  }
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] != 2 * schedule[i - 1]) throw InvalidInput("component schedule must double");
  }
}

ShapeResult run_shape(const ShapeScenario& scenario) {
  scenario.validate();
  ShapeResult result{{}, {}, true_density_growth(scenario.grid, growth_map, scenario.truth_nodes)};
  const VectorFunction g = growth_function;

  for (const ShapeScheme& scheme : scenario.schemes()) {
    FilterConfig config;
    config.gamma = scheme.gamma;
    config.eps_max = 0.0;
    config.d_max = 1.0;
    config.reduce_pred = 1;
    config.reduce_filt = 1;
    config.scheme = scenario.scheme;
    config.policy = scheme.policy;

    ShapeSummary summary{scheme.name, 0, 0};
    GaussianMixture mixture(growth_prior());
    for (std::size_t target : scenario.schedule) {
      config.l_max = target;
      const AdaptResult adapted = adapt(mixture, g, config);
      for (const SplitRecord& split : adapted.splits) {
        ++summary.splits;
        if (std::abs(split.axis(0)) > std::abs(split.axis(1))) ++summary.xi_splits;
      }
      GaussianMixture output = pushforward_mixture(adapted);
      const double kld = kld_on_grid(result.truth, output);
      result.rows.push_back({scheme.name, adapted.mixture.size(), 10.0 * kld, std::move(output)});
      mixture = adapted.mixture;
    }
    result.summaries.push_back(summary);
  }
  return result;
}

Vector bicycle_dynamics(const Vector& x, const Vector& u, const Vector& w) {
  if (x.size() != 3 || u.size() != 1 || w.size() != 3) {
    throw InvalidInput("bicycle_dynamics: expects x in R^3, u in R, w in R^3");
  }
  Vector next(3);
  next << x(0) + std::cos(x(2)), x(1) + std::sin(x(2)), x(2) + u(0);
  return next + w;
}

Vector radar_measurement(const Vector& x, const Vector& v) {
  if (x.size() != 3 || v.size() != 2) throw InvalidInput("radar_measurement: expects x in R^3, v in R^2");
  Vector z(2);
  z << std::hypot(x(0), x(1)), std::atan(x(1) / x(0));
  return z + v;
}

GaussianMixture glint_noise(double beta, double scale) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("glint probability must lie in [0, 1]");
  if (!(scale > 0.0)) throw InvalidInput("noise scale must be positive");
  std::vector<GaussianComponent> parts;
  const Vector zero = Vector::Zero(2);
  if (beta < 1.0) {
    parts.emplace_back(1.0 - beta, zero, scale * Vector{{1.0, 0.01}}.asDiagonal().toDenseMatrix());
  }
  if (beta > 0.0) {
    parts.emplace_back(beta, zero, scale * Vector{{4.0, 0.04}}.asDiagonal().toDenseMatrix());
  }
  return GaussianMixture::normalize(std::move(parts));
}

GaussianMixture bicycle_process_noise(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("noise scale must be positive");
  const Matrix cov = scale * Vector{{0.01, 0.01, 1e-4}}.asDiagonal().toDenseMatrix();
  return GaussianMixture(GaussianComponent(1.0, Vector::Zero(3), cov));
}

GaussianComponent tracking_prior() {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return {1.0, Vector{{100.0, 100.0, 0.0}}, Vector{{100.0, 100.0, pi2}}.asDiagonal().toDenseMatrix()};
}

StateSpaceModel tracking_model(double beta, double noise_scale) {
  return {3,
          [](const Vector& x, const Vector& u, const Vector& w, int) {
            return bicycle_dynamics(x, u, w);
          },
          [](const Vector& x, const Vector& v, int) { return radar_measurement(x, v); },
          bicycle_process_noise(noise_scale),
          glint_noise(beta, noise_scale),
          true};
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kAgmf: return "agmf";
    case FilterKind::kMwe: return "mwe";
    case FilterKind::kUkf: return "ukf";
    case FilterKind::kPf: return "pf";
  }
  return "unknown";
}

FilterKind parse_filter(const std::string& name) {
  if (name == "agmf") return FilterKind::kAgmf;
  if (name == "mwe") return FilterKind::kMwe;
  if (name == "ukf") return FilterKind::kUkf;
  if (name == "pf") return FilterKind::kPf;
  throw InvalidInput("unknown filter '" + name + "'");
}

void TrackScenario::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("beta must lie in [0, 1]");
  if (steps < 1 || runs < 1) throw InvalidInput("steps and runs must be positive");
  if (!(noise_scale > 0.0)) throw InvalidInput("noise scale must be positive");
  if (particles < 1) throw InvalidInput("particle count must be positive");
}

Trajectory simulate_run(const TrackScenario& scenario, int run) {
  scenario.validate();
  Rng rng = run_rng(scenario.seed, run, 0);
  const GaussianComponent prior = tracking_prior();
  const MixtureSampler process(bicycle_process_noise(scenario.noise_scale));
  const MixtureSampler glint(glint_noise(scenario.beta, scenario.noise_scale));
  std::uniform_real_distribution<double> steering(-0.2, 0.2);

  Vector x = scenario.truth_from_prior ? MixtureSampler(GaussianMixture(prior))(rng) : prior.mean();
  Trajectory traj;
  for (int k = 0; k < scenario.steps; ++k) {
    const Vector u{{std::tan(steering(rng))}};
    x = bicycle_dynamics(x, u, process(rng));
    traj.inputs.push_back(u);
    traj.states.push_back(x);
    traj.measurements.push_back(radar_measurement(x, glint(rng)));
  }
  return traj;
}

std::vector<TrackRow> run_tracking(const TrackScenario& scenario,
                                   std::span<const FilterSpec> filters,
                                   const FilterConfig& config) {
  scenario.validate();
  config.validate();
  const StateSpaceModel model = tracking_model(scenario.beta, scenario.noise_scale);
  const GaussianComponent prior = tracking_prior();

  std::vector<Trajectory> trajectories;
  trajectories.reserve(static_cast<std::size_t>(scenario.runs));
  for (int r = 0; r < scenario.runs; ++r) trajectories.push_back(simulate_run(scenario, r));

  std::vector<TrackRow> rows;
  for (const FilterSpec& spec : filters) {
    FilterConfig mixture_config = config;
    if (spec.kind == FilterKind::kAgmf || spec.kind == FilterKind::kMwe) {
      if (spec.reduction < 1 || spec.reduction > config.l_max) {
        throw InvalidInput("reduction threshold must lie in [1, l_max]");
      }
      mixture_config.reduce_pred = spec.reduction;
      mixture_config.reduce_filt = spec.reduction;
      mixture_config.policy = spec.kind == FilterKind::kAgmf ? SplitPolicy::kAdaptive
                                                             : SplitPolicy::kLargestWeightEigen;
    }
    const double kappa =
        config.scheme.kind == SchemeKind::kUnscented ? config.scheme.kappa : 0.5;
    const FilterConfig single_config = ukf_config(kappa);
    const StateSpaceModel single_model = unimodal_model(model);

    TrackRow row;
    row.filter = to_string(spec.kind);
    row.beta = scenario.beta;
    const bool mixture_filter = spec.kind == FilterKind::kAgmf || spec.kind == FilterKind::kMwe;
    row.reduction = mixture_filter ? spec.reduction : 0;

    double squared_error = 0.0;
    std::size_t error_terms = 0;
    std::size_t splits = 0;
    std::size_t adapt_calls = 0;
    double runtime = 0.0;
    for (int r = 0; r < scenario.runs; ++r) {
      const Trajectory& traj = trajectories[static_cast<std::size_t>(r)];
      const auto start = std::chrono::steady_clock::now();
      RunOutcome outcome;
      try {
        switch (spec.kind) {
          case FilterKind::kAgmf:
          case FilterKind::kMwe:
            outcome = run_mixture_filter(traj, model, mixture_config, prior);
            break;
          case FilterKind::kUkf:
            outcome = run_mixture_filter(traj, single_model, single_config, prior);
            break;
          case FilterKind::kPf: {
            Rng rng = run_rng(scenario.seed, r, 1);
            outcome = run_particle_filter(traj, model, prior, scenario.particles, rng);
            break;
          }
        }
      } catch (const Error&) {
        outcome.diverged = true;
      }
      runtime += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (outcome.diverged) {
        ++row.diverged_runs;
        continue;
      }
      if (outcome.degenerate) ++row.degenerate_runs;
      squared_error += outcome.squared_error;
      error_terms += traj.measurements.size();
      splits += outcome.splits;
      adapt_calls += outcome.adapt_calls;
    }
    row.rmse = error_terms > 0 ? std::sqrt(squared_error / static_cast<double>(error_terms))
                               : std::numeric_limits<double>::quiet_NaN();
    row.runtime_s = runtime / static_cast<double>(scenario.runs);
    row.avg_splits =
        adapt_calls > 0 ? static_cast<double>(splits) / static_cast<double>(adapt_calls) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace agmf
