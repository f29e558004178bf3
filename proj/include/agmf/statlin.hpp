#pragma once

#include "agmf/mixture.hpp"

#include <string>
#include <vector>

namespace agmf {

enum class SchemeKind {
  kUnscented,
  kGaussianEstimatorN2,
  kGaussianEstimatorN4,
};

/// Selects the regression-point scheme used for statistical linearization.
struct SchemeConfig {
  SchemeKind kind = SchemeKind::kUnscented;
  double kappa = 0.5;  ///< unscented transform only

  static SchemeConfig unscented(double kappa = 0.5) { return {SchemeKind::kUnscented, kappa}; }
  static SchemeConfig gaussian_estimator(int scaling_factors);
};

std::string to_string(const SchemeConfig& scheme);

enum class MatrixRoot {
  kCholesky,  ///< columns of the lower Cholesky factor
  kEigen,     ///< V * diag(sqrt(lambda))
};

/// Layout shared by all shipped schemes: the mean plus `scaling` multiples of
/// every matrix-root column, ordered scaling-major. Any scheme that fits this
/// layout can be plugged into regression_points() directly.
struct PointRule {
  MatrixRoot root = MatrixRoot::kCholesky;
  std::vector<double> scaling;
  double center_weight = 0.0;
  double offset_weight = 0.0;
};

/// Point rule of `scheme` for a `dim`-dimensional Gaussian.
///
/// The Gaussian-estimator scaling factors are tabulated for the univariate
/// case (+-1.2245 for two factors; +-0.5578, +-1.4795 for four). With equal
/// weights 1/L over L = dim * N + 1 points they are rescaled by
/// sqrt(L / sum(nu^2)) so that the covariance is captured exactly in any
/// dimension.
PointRule point_rule(const SchemeConfig& scheme, Eigen::Index dim);

struct RegressionPointSet {
  std::vector<Vector> points;
  std::vector<double> weights;
};

RegressionPointSet regression_points(const Vector& mean, const Matrix& cov, const PointRule& rule);
RegressionPointSet regression_points(const Vector& mean, const Matrix& cov, const SchemeConfig& scheme);

/// Affine fit y ~ slope * x + offset of a function around a Gaussian,
/// together with the propagated moments and the covariance of the residual.
struct Linearization {
  Matrix slope;       ///< n_y x n_x
  Vector offset;      ///< n_y
  Vector y_mean;
  Matrix y_cov;
  Matrix cross_cov;   ///< n_x x n_y
  Matrix error_cov;   ///< y_cov - slope * x_cov * slope^T
};

Linearization linearize(const VectorFunction& g, const Vector& mean, const Matrix& cov,
                        const SchemeConfig& scheme);

/// Same regression over an explicit point set; the input mean and covariance
/// are taken from the weighted points.
Linearization linearize(const VectorFunction& g, const RegressionPointSet& points);

/// g(x) - (slope * x + offset).
Vector residual_at(const Linearization& lin, const VectorFunction& g, const Vector& x);

/// Trace of the error covariance, clamped at zero.
double error_trace(const Linearization& lin);

}  // namespace agmf
