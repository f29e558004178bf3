#include "agmf/errors.hpp"
#include "agmf/scenarios.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace agmf;

namespace {

GaussianComponent scalar(double w, double m, double v) {
  return {w, Vector::Constant(1, m), Matrix::Constant(1, 1, v)};
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(TrueDensity, IntegratesToOne) {
  const TabulatedDensity truth = true_density_growth();
  EXPECT_EQ(truth.values.size(), 6001u);
  EXPECT_NEAR(truth.integral(), 1.0, 1e-6);
}

TEST(TrueDensity, IdentityMapGivesGaussianConvolution) {
  const TabulatedDensity truth = true_density_growth({}, [](double xi) { return xi; });
  for (std::size_t i = 0; i < truth.values.size(); i += 7) {
    EXPECT_NEAR(truth.values[i], oracle::normal_pdf(truth.grid.at(i), 1.0, 2.0), 1e-8);
  }
}

TEST(TrueDensity, ModeMatchesMonteCarloHistogram) {
  const TabulatedDensity truth = true_density_growth();
  const double mode = truth.grid.at(argmax(truth.values));

  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  const double width = 0.1;
  std::vector<double> counts(300, 0.0);
  for (int i = 0; i < 10000000; ++i) {
    const double y = growth_map(1.0 + normal(rng)) + normal(rng);
    const auto bin = static_cast<long>(std::floor((y + 15.0) / width));
    if (bin >= 0 && bin < 300) counts[static_cast<std::size_t>(bin)] += 1.0;
  }
  const double histogram_mode = -15.0 + (static_cast<double>(argmax(counts)) + 0.5) * width;
  EXPECT_NEAR(mode, histogram_mode, width);
}

TEST(TrueDensity, IsBimodalAndSkewed) {
  const TabulatedDensity truth = true_density_growth();
  const double h = truth.grid.step;
  double mean = 0.0, m2 = 0.0, m3 = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) mean += truth.grid.at(i) * truth.values[i] * h;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const double d = truth.grid.at(i) - mean;
    m2 += d * d * truth.values[i] * h;
    m3 += d * d * d * truth.values[i] * h;
  }
  EXPECT_LT(m3 / std::pow(m2, 1.5), -0.5);
  int peaks = 0;
  for (std::size_t i = 1; i + 1 < truth.values.size(); ++i) {
    peaks += truth.values[i] > truth.values[i - 1] && truth.values[i] > truth.values[i + 1];
  }
  EXPECT_EQ(peaks, 2);
}

TEST(KldOnGrid, SelfDivergenceVanishes) {
  const GaussianMixture m({scalar(0.4, -1, 0.5), scalar(0.6, 2, 1.5)});
  EXPECT_NEAR(kld_on_grid(tabulate(m, Grid{}), m), 0.0, 1e-9);
}

TEST(KldOnGrid, StandardNormalAgainstWiderNormal) {
  const TabulatedDensity truth = tabulate(GaussianMixture(scalar(1, 0, 1)), Grid{});
  const double kld = kld_on_grid(truth, GaussianMixture(scalar(1, 0, 2)));
  EXPECT_NEAR(kld, 0.5 * (0.5 + std::log(2.0) - 1.0), 1e-4);
  EXPECT_NEAR(kld, oracle::gaussian_kld(0, 1, 0, 2), 1e-6);
}

TEST(KldOnGrid, IsNonnegative) {
  std::mt19937_64 rng(42);
  const TabulatedDensity truth = true_density_growth();
  for (int t = 0; t < 5; ++t) {
    EXPECT_GE(kld_on_grid(truth, oracle::random_mixture(3, 1, rng)), 0.0);
  }
}

TEST(RunShape, IsDeterministic) {
  const ShapeResult a = run_shape(ShapeScenario{});
  const ShapeResult b = run_shape(ShapeScenario{});
  ASSERT_EQ(a.rows.size(), 21u);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].scheme, b.rows[i].scheme);
    EXPECT_EQ(a.rows[i].components, b.rows[i].components);
    EXPECT_EQ(a.rows[i].kld_x10, b.rows[i].kld_x10);
  }
}

TEST(RunShape, FirstTwoRowsAgreeAcrossSchemes) {
  const ShapeResult r = run_shape(ShapeScenario{});
  std::map<std::size_t, std::vector<double>> by_count;
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.output.size(), row.components);
    by_count[row.components].push_back(row.kld_x10);
  }
  for (std::size_t count : {1u, 2u}) {
    ASSERT_EQ(by_count[count].size(), 3u);
    EXPECT_EQ(by_count[count][0], by_count[count][1]);
    EXPECT_EQ(by_count[count][0], by_count[count][2]);
  }
}

TEST(RunShape, SchemeNames) {
  const std::vector<ShapeScheme> s = ShapeScenario{}.schemes();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].name, "gamma0.5");
  EXPECT_EQ(s[1].name, "gamma1");
  EXPECT_EQ(s[2].name, "maxeig");
}

TEST(GlintNoise, PureCasesAreSingleGaussians) {
  const GaussianMixture none = glint_noise(0.0);
  ASSERT_EQ(none.size(), 1u);
  EXPECT_DOUBLE_EQ(none[0].cov()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(none[0].cov()(1, 1), 0.01);
  const GaussianMixture all = glint_noise(1.0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_DOUBLE_EQ(all[0].cov()(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(all[0].cov()(1, 1), 0.04);
  EXPECT_EQ(glint_noise(0.4).size(), 2u);
  EXPECT_THROW(glint_noise(1.5), InvalidInput);
}

TEST(RadarMeasurement, RangeAndBearing) {
  const Vector z = radar_measurement(Vector{{3.0, 4.0, 0.0}}, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(z(0), 5.0);
  EXPECT_DOUBLE_EQ(z(1), std::atan(4.0 / 3.0));
}

TEST(BicycleDynamics, MovesOneUnitAlongHeading) {
  const Vector x = bicycle_dynamics(Vector{{1.0, 2.0, std::numbers::pi / 2}}, Vector::Constant(1, 0.1),
                                    Vector::Zero(3));
  EXPECT_NEAR(x(0), 1.0, 1e-15);
  EXPECT_NEAR(x(1), 3.0, 1e-15);
  EXPECT_NEAR(x(2), std::numbers::pi / 2 + 0.1, 1e-15);
}

TEST(SimulateRun, IsDeterministicPerSeedAndRun) {
  TrackScenario s;
  s.steps = 20;
  const Trajectory a = simulate_run(s, 3);
  const Trajectory b = simulate_run(s, 3);
  const Trajectory c = simulate_run(s, 4);
  ASSERT_EQ(a.states.size(), 20u);
  ASSERT_EQ(a.measurements.size(), 20u);
  ASSERT_EQ(a.inputs.size(), 20u);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_TRUE((a.states[k].array() == b.states[k].array()).all());
    EXPECT_TRUE((a.measurements[k].array() == b.measurements[k].array()).all());
  }
  EXPECT_FALSE((a.measurements[0].array() == c.measurements[0].array()).all());
}

TEST(RunTracking, FiltersSeeIdenticalMeasurements) {
  TrackScenario s;
  s.runs = 2;
  s.steps = 15;
  const std::vector<FilterSpec> alone = {{FilterKind::kUkf, 8}};
  const std::vector<FilterSpec> mixed = {{FilterKind::kAgmf, 8}, {FilterKind::kUkf, 8}};
  const std::vector<TrackRow> a = run_tracking(s, alone, FilterConfig{});
  const std::vector<TrackRow> b = run_tracking(s, mixed, FilterConfig{});
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1].filter, "ukf");
  EXPECT_EQ(a[0].rmse, b[1].rmse);
  EXPECT_EQ(a[0].reduction, 0u);
  EXPECT_EQ(b[0].reduction, 8u);
}

TEST(RunTracking, NoiselessLimitDrivesErrorToZero) {
  TrackScenario s;
  s.steps = 30;
  s.noise_scale = 1e-12;
  const StateSpaceModel model = tracking_model(s.beta, s.noise_scale);
  for (SplitPolicy policy : {SplitPolicy::kAdaptive, SplitPolicy::kLargestWeightEigen}) {
    FilterConfig config;
    config.policy = policy;
    for (int run = 0; run < 2; ++run) {
      const Trajectory traj = simulate_run(s, run);
      FilterState state = initial_state(GaussianMixture(tracking_prior()));
      double late_error = 0.0;
      for (std::size_t k = 0; k < traj.measurements.size(); ++k) {
        state = update(predict(state, traj.inputs[k], model, config), traj.measurements[k], model,
                       config);
        if (k + 10 >= traj.measurements.size()) {
          late_error = std::max(late_error, (mixture_moments(state.density).mean.head(2) -
                                             traj.states[k].head(2)).norm());
        }
      }
      EXPECT_LT(late_error, 1e-3) << "run " << run;
    }
  }
}

TEST(ParseFilter, KnownAndUnknownNames) {
  EXPECT_EQ(parse_filter("agmf"), FilterKind::kAgmf);
  EXPECT_EQ(parse_filter("pf"), FilterKind::kPf);
  EXPECT_EQ(to_string(FilterKind::kMwe), "mwe");
  EXPECT_THROW(parse_filter("ekf"), InvalidInput);
}
