#include "agmf/errors.hpp"
#include "agmf/scenarios.hpp"
#include "agmf/statlin.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace agmf;

namespace {

const SchemeConfig kSchemes[] = {SchemeConfig::unscented(0.5), SchemeConfig::unscented(2.0),
                                 SchemeConfig::gaussian_estimator(2),
                                 SchemeConfig::gaussian_estimator(4)};

void expect_moments_captured(const RegressionPointSet& set, const Vector& mean, const Matrix& cov) {
  double total = 0.0;
  Vector m = Vector::Zero(mean.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    total += set.weights[i];
    m += set.weights[i] * set.points[i];
  }
  Matrix c = Matrix::Zero(mean.size(), mean.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const Vector d = set.points[i] - mean;
    c += set.weights[i] * d * d.transpose();
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_LT((m - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((c - cov).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()));
}

Vector square(const Vector& x) { return x.array().square().matrix(); }

}  // namespace

TEST(RegressionPoints, UnscentedOneDimensional) {
  const RegressionPointSet set =
      regression_points(Vector::Zero(1), Matrix::Identity(1, 1), SchemeConfig::unscented(0.5));
  ASSERT_EQ(set.points.size(), 3u);
  EXPECT_DOUBLE_EQ(set.points[0](0), 0.0);
  EXPECT_NEAR(set.points[1](0), 1.22474, 1e-5);
  EXPECT_NEAR(set.points[2](0), -1.22474, 1e-5);
  for (double w : set.weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
}

TEST(RegressionPoints, GaussianEstimatorFourInTwoDimensions) {
  const RegressionPointSet set =
      regression_points(Vector::Zero(2), Matrix::Identity(2, 2), SchemeConfig::gaussian_estimator(4));
  ASSERT_EQ(set.points.size(), 9u);
  for (double w : set.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 9.0);
  Vector m = Vector::Zero(2);
  Matrix c = Matrix::Zero(2, 2);
  for (std::size_t i = 0; i < 9; ++i) {
    m += set.weights[i] * set.points[i];
    c += set.weights[i] * set.points[i] * set.points[i].transpose();
  }
  EXPECT_LT(m.norm(), 1e-12);
  EXPECT_LT((c - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(RegressionPoints, GaussianEstimatorTabulatedFactorsInOneDimension) {
  const PointRule two = point_rule(SchemeConfig::gaussian_estimator(2), 1);
  // Tabulated 1.2245 rescaled so the points carry unit second moment.
  EXPECT_NEAR(std::abs(two.scaling[0]), 1.2245, 5e-4);
  EXPECT_NEAR(std::abs(two.scaling[0]), std::sqrt(1.5), 1e-12);
  const PointRule four = point_rule(SchemeConfig::gaussian_estimator(4), 1);
  std::vector<double> mags;
  for (double v : four.scaling) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end());
  EXPECT_NEAR(mags.front(), 0.5578, 5e-4);
  EXPECT_NEAR(mags.back(), 1.4795, 5e-4);
}

TEST(RegressionPoints, UnscentedUsesCholeskyColumns) {
  std::mt19937_64 rng(1);
  const Matrix cov = oracle::random_spd(3, rng);
  const Vector mean = oracle::random_vector(3, rng);
  const RegressionPointSet set = regression_points(mean, cov, SchemeConfig::unscented(0.5));
  const Matrix L = Eigen::LLT<Matrix>(cov).matrixL();
  for (int l = 0; l < 3; ++l) {
    EXPECT_LT((set.points[1 + l] - (mean + std::sqrt(3.5) * L.col(l))).norm(), 1e-12);
  }
}

TEST(RegressionPoints, MomentCaptureForRandomInputs) {
  std::mt19937_64 rng(2);
  for (const auto& scheme : kSchemes) {
    for (int n = 1; n <= 6; ++n) {
      for (int t = 0; t < 5; ++t) {
        const Matrix cov = oracle::random_spd(n, rng);
        const Vector mean = oracle::random_vector(n, rng, 3.0);
        expect_moments_captured(regression_points(mean, cov, scheme), mean, cov);
      }
    }
  }
}

TEST(RegressionPoints, SemidefiniteCovarianceFallsBackToEigenRoot) {
  Matrix cov = Matrix::Zero(2, 2);
  cov(0, 0) = 2.0;
  const RegressionPointSet set = regression_points(Vector::Zero(2), cov, SchemeConfig::unscented(0.5));
  expect_moments_captured(set, Vector::Zero(2), cov);
}

TEST(RegressionPoints, RejectsNonPositiveUnscentedSpread) {
  EXPECT_THROW(point_rule(SchemeConfig::unscented(-2.0), 2), InvalidInput);
  EXPECT_THROW(SchemeConfig::gaussian_estimator(3), InvalidInput);
}

TEST(Linearize, AffineFunctionIsExact) {
  std::mt19937_64 rng(3);
  for (const auto& scheme : kSchemes) {
    for (int n = 1; n <= 4; ++n) {
      Matrix A(2, n);
      for (int i = 0; i < 2; ++i) A.row(i) = oracle::random_vector(n, rng).transpose();
      const Vector c = oracle::random_vector(2, rng);
      const VectorFunction g = [&](const Vector& x) -> Vector { return A * x + c; };
      const Linearization lin =
          linearize(g, oracle::random_vector(n, rng), oracle::random_spd(n, rng), scheme);
      EXPECT_LT((lin.slope - A).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((lin.offset - c).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT(lin.error_cov.norm(), 1e-9);
      EXPECT_NEAR(error_trace(lin), 0.0, 1e-9);
      const Vector probe = oracle::random_vector(n, rng, 5.0);
      EXPECT_LT(residual_at(lin, g, probe).norm(), 1e-9 * std::max(1.0, probe.norm()));
    }
  }
}

TEST(Linearize, SquareUnderUnscentedTransform) {
  const VectorFunction g = square;
  const Linearization lin =
      linearize(g, Vector::Zero(1), Matrix::Identity(1, 1), SchemeConfig::unscented(0.5));
  // Points 0, +-sqrt(1.5) with weight 1/3: y = {0, 1.5, 1.5}.
  EXPECT_NEAR(lin.y_mean(0), 1.0, 1e-12);
  EXPECT_NEAR(lin.slope(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lin.offset(0), 1.0, 1e-12);
  EXPECT_NEAR(lin.y_cov(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(lin.error_cov(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(error_trace(lin), 0.5, 1e-12);
  EXPECT_NEAR(residual_at(lin, g, Vector::Zero(1))(0), -1.0, 1e-12);
  EXPECT_NEAR(residual_at(lin, g, Vector::Ones(1))(0), 0.0, 1e-12);
}

TEST(Linearize, GrowthProcessHasPositiveErrorLikeDenseRegression) {
  const Linearization lin = linearize(growth_function, growth_prior().mean(), growth_prior().cov(),
                                      SchemeConfig::gaussian_estimator(4));
  EXPECT_GT(error_trace(lin), 0.0);

  // Weighted least squares on a dense grid over the same Gaussian.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (double xi = -7.0; xi <= 9.0; xi += 0.01) {
    const double w = oracle::normal_pdf(xi, 1.0, 1.0);
    const double y = growth_map(xi);
    sw += w, sx += w * xi, sy += w * y, sxx += w * xi * xi, sxy += w * xi * y, syy += w * y * y;
  }
  const double vx = sxx / sw - (sx / sw) * (sx / sw);
  const double cxy = sxy / sw - (sx / sw) * (sy / sw);
  const double vy = syy / sw - (sy / sw) * (sy / sw);
  const double dense_error = vy - cxy * cxy / vx;
  EXPECT_GT(dense_error, 0.0);
  EXPECT_NEAR(lin.slope(0, 1), 1.0, 1e-9);
}

TEST(Linearize, ErrorTraceIsAdditiveOverOutputs) {
  const VectorFunction block = [](const Vector& x) -> Vector {
    return Vector{{2.0 * x(0) - x(1), x(1) * x(1)}};
  };
  const VectorFunction nonlinear_only = [](const Vector& x) -> Vector {
    return Vector::Constant(1, x(1) * x(1));
  };
  std::mt19937_64 rng(4);
  const Vector mean = oracle::random_vector(2, rng);
  const Matrix cov = oracle::random_spd(2, rng);
  const SchemeConfig scheme = SchemeConfig::unscented(0.5);
  EXPECT_NEAR(error_trace(linearize(block, mean, cov, scheme)),
              error_trace(linearize(nonlinear_only, mean, cov, scheme)), 1e-10);
}

TEST(Linearize, NonFiniteOutputNamesThePoint) {
  const VectorFunction g = [](const Vector& x) -> Vector {
    return Vector::Constant(1, x(0) > 1.0 ? std::numeric_limits<double>::quiet_NaN() : x(0));
  };
  try {
    linearize(g, Vector::Zero(1), Matrix::Identity(1, 1), SchemeConfig::unscented(0.5));
    FAIL() << "expected an evaluation error";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("regression point 1"), std::string::npos);
  }
}

TEST(Linearize, InvariantToPointOrder) {
  std::mt19937_64 rng(5);
  const Vector mean = oracle::random_vector(3, rng);
  const Matrix cov = oracle::random_spd(3, rng);
  const VectorFunction g = [](const Vector& x) -> Vector {
    return Vector{{std::sin(x(0)) + x(1) * x(2), std::exp(0.1 * x(2))}};
  };
  RegressionPointSet set = regression_points(mean, cov, SchemeConfig::gaussian_estimator(4));
  const Linearization a = linearize(g, set);
  std::reverse(set.points.begin(), set.points.end());
  std::reverse(set.weights.begin(), set.weights.end());
  const Linearization b = linearize(g, set);
  EXPECT_LT((a.slope - b.slope).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((a.offset - b.offset).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((a.error_cov - b.error_cov).cwiseAbs().maxCoeff(), 1e-10);

  const Linearization direct = linearize(g, mean, cov, SchemeConfig::gaussian_estimator(4));
  EXPECT_LT((a.slope - direct.slope).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Linearize, ErrorCovarianceIsPsdForRandomPolynomials) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (const auto& scheme : kSchemes) {
    for (int t = 0; t < 20; ++t) {
      const int n = 1 + t % 4;
      Matrix quad(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) quad(i, j) = normal(rng);
      }
      const Vector lin_part = oracle::random_vector(n, rng);
      const double cubic = normal(rng);
      const VectorFunction g = [&](const Vector& x) -> Vector {
        const double q = x.dot(quad * x);
        return Vector{{q + lin_part.dot(x), cubic * x(0) * x(0) * x(0), q * q * 0.1}};
      };
      const Linearization lin =
          linearize(g, oracle::random_vector(n, rng), oracle::random_spd(n, rng), scheme);
      EXPECT_LT((lin.error_cov - lin.error_cov.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      const double smallest = Eigen::SelfAdjointEigenSolver<Matrix>(lin.error_cov).eigenvalues()(0);
      EXPECT_GE(smallest, -1e-8 * std::max(1.0, lin.y_cov.trace()));
    }
  }
}
