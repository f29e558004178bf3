#include "agmf/statlin.hpp"

#include "agmf/errors.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace agmf {

namespace {

constexpr std::array<double, 2> kEstimatorN2 = {-1.2245, 1.2245};
constexpr std::array<double, 4> kEstimatorN4 = {-1.4795, -0.5578, 0.5578, 1.4795};

// Matrix root of a covariance plus a (pseudo-)inverse applied through the same
// factorization.
class CovarianceRoot {
 public:
  CovarianceRoot(const Matrix& cov, MatrixRoot kind) {
    const Matrix sym = 0.5 * (cov + cov.transpose());
    if (kind == MatrixRoot::kCholesky) {
      llt_.compute(sym);
      if (llt_.info() == Eigen::Success) {
        factor_ = llt_.matrixL();
        cholesky_ = true;
        return;
      }
      // Semi-definite input: a Cholesky factor does not exist, fall back to
      // the eigen root, which spans the same column space.
    }
    EigenDecomposition eig;
    try {
      eig = eigendecompose(sym);
    } catch (const InvalidInput& e) {
      throw NumericalError(std::string("matrix root: ") + e.what());
    }
    vectors_ = eig.vectors;
    values_ = eig.values;
    factor_ = eig.vectors * eig.values.cwiseSqrt().asDiagonal();
  }

  const Matrix& factor() const { return factor_; }

  /// cov^+ * rhs
  Matrix solve(const Matrix& rhs) const {
    if (cholesky_) return llt_.solve(rhs);
    const double largest = values_.size() > 0 ? values_.maxCoeff() : 0.0;
    Vector inverse = Vector::Zero(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (values_(i) > 1e-12 * largest) inverse(i) = 1.0 / values_(i);
    }
    return vectors_ * inverse.asDiagonal() * (vectors_.transpose() * rhs);
  }

 private:
  Eigen::LLT<Matrix> llt_;
  bool cholesky_ = false;
  Matrix factor_;
  Matrix vectors_;
  Vector values_;
};

std::vector<Vector> evaluate_points(const VectorFunction& g, const RegressionPointSet& set) {
  std::vector<Vector> ys;
  ys.reserve(set.points.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    Vector y = g(set.points[i]);
    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "function returned non-finite value at regression point " << i << " ["
          << set.points[i].transpose() << "]";
      throw EvaluationError(msg.str());
    }
    if (!ys.empty() && y.size() != ys.front().size()) {
      throw EvaluationError("function output dimension changed between regression points");
    }
    ys.push_back(std::move(y));
  }
  return ys;
}

template <typename Solve>
Linearization regress(const RegressionPointSet& set, const std::vector<Vector>& ys,
                      const Vector& x_mean, const Matrix& x_cov, Solve&& solve) {
  const Eigen::Index ny = ys.front().size();
  const Eigen::Index nx = x_mean.size();
  Linearization lin;
  lin.y_mean = Vector::Zero(ny);
  for (std::size_t i = 0; i < ys.size(); ++i) lin.y_mean += set.weights[i] * ys[i];

  lin.y_cov = Matrix::Zero(ny, ny);
  lin.cross_cov = Matrix::Zero(nx, ny);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Vector dy = ys[i] - lin.y_mean;
    const Vector dx = set.points[i] - x_mean;
    lin.y_cov += set.weights[i] * dy * dy.transpose();
    lin.cross_cov += set.weights[i] * dx * dy.transpose();
  }
  lin.y_cov = 0.5 * (lin.y_cov + lin.y_cov.transpose());
  lin.slope = solve(lin.cross_cov).transpose();
  lin.offset = lin.y_mean - lin.slope * x_mean;
  const Matrix explained = lin.slope * x_cov * lin.slope.transpose();
  lin.error_cov = repair_psd(lin.y_cov - explained, lin.y_cov.trace());
  return lin;
}

RegressionPointSet make_points(const Vector& mean, const CovarianceRoot& root, const PointRule& rule) {
  const Eigen::Index n = mean.size();
  RegressionPointSet set;
  set.points.reserve(static_cast<std::size_t>(n) * rule.scaling.size() + 1);
  set.weights.reserve(set.points.capacity());
  set.points.push_back(mean);
  set.weights.push_back(rule.center_weight);
  for (double nu : rule.scaling) {
    for (Eigen::Index l = 0; l < n; ++l) {
      set.points.push_back(mean + nu * root.factor().col(l));
      set.weights.push_back(rule.offset_weight);
    }
  }
  return set;
}

}  // namespace

SchemeConfig SchemeConfig::gaussian_estimator(int scaling_factors) {
  switch (scaling_factors) {
    case 2: return {SchemeKind::kGaussianEstimatorN2, 0.5};
    case 4: return {SchemeKind::kGaussianEstimatorN4, 0.5};
    default: throw InvalidInput("Gaussian estimator supports 2 or 4 scaling factors");
  }
}

std::string to_string(const SchemeConfig& scheme) {
  switch (scheme.kind) {
    case SchemeKind::kUnscented: return "ut";
    case SchemeKind::kGaussianEstimatorN2: return "ge2";
    case SchemeKind::kGaussianEstimatorN4: return "ge4";
  }
  return "unknown";
}

PointRule point_rule(const SchemeConfig& scheme, Eigen::Index dim) {
  if (dim < 1) throw InvalidInput("point_rule: dimension must be positive");
  const double n = static_cast<double>(dim);
  PointRule rule;
  if (scheme.kind == SchemeKind::kUnscented) {
    if (!(n + scheme.kappa > 0.0)) throw InvalidInput("unscented transform requires n + kappa > 0");
    const double spread = std::sqrt(n + scheme.kappa);
    rule.root = MatrixRoot::kCholesky;
    rule.scaling = {spread, -spread};
    rule.center_weight = scheme.kappa / (n + scheme.kappa);
    rule.offset_weight = 1.0 / (2.0 * (n + scheme.kappa));
    return rule;
  }

  std::vector<double> base;
  if (scheme.kind == SchemeKind::kGaussianEstimatorN2) {
    base.assign(kEstimatorN2.begin(), kEstimatorN2.end());
  } else {
    base.assign(kEstimatorN4.begin(), kEstimatorN4.end());
  }
  const double count = n * static_cast<double>(base.size()) + 1.0;
  const double energy = std::accumulate(base.begin(), base.end(), 0.0,
                                        [](double acc, double v) { return acc + v * v; });
  const double stretch = std::sqrt(count / energy);
  rule.root = MatrixRoot::kEigen;
  for (double v : base) rule.scaling.push_back(stretch * v);
  rule.center_weight = 1.0 / count;
  rule.offset_weight = 1.0 / count;
  return rule;
}

RegressionPointSet regression_points(const Vector& mean, const Matrix& cov, const PointRule& rule) {
  const Eigen::Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) throw InvalidInput("regression_points: shape mismatch");
  return make_points(mean, CovarianceRoot(cov, rule.root), rule);
}

RegressionPointSet regression_points(const Vector& mean, const Matrix& cov, const SchemeConfig& scheme) {
  return regression_points(mean, cov, point_rule(scheme, mean.size()));
}

Linearization linearize(const VectorFunction& g, const Vector& mean, const Matrix& cov,
                        const SchemeConfig& scheme) {
  const PointRule rule = point_rule(scheme, mean.size());
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InvalidInput("linearize: covariance shape does not match mean");
  }
  const CovarianceRoot root(cov, rule.root);
  const RegressionPointSet set = make_points(mean, root, rule);
  const std::vector<Vector> ys = evaluate_points(g, set);
  const Matrix sym = 0.5 * (cov + cov.transpose());
  return regress(set, ys, mean, sym, [&](const Matrix& rhs) { return root.solve(rhs); });
}

Linearization linearize(const VectorFunction& g, const RegressionPointSet& set) {
  if (set.points.empty() || set.points.size() != set.weights.size()) {
    throw InvalidInput("linearize: malformed regression point set");
  }
  const Eigen::Index n = set.points.front().size();
  Vector mean = Vector::Zero(n);
  for (std::size_t i = 0; i < set.points.size(); ++i) mean += set.weights[i] * set.points[i];
  Matrix cov = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const Vector d = set.points[i] - mean;
    cov += set.weights[i] * d * d.transpose();
  }
  cov = 0.5 * (cov + cov.transpose());
  const CovarianceRoot root(cov, MatrixRoot::kEigen);
  const std::vector<Vector> ys = evaluate_points(g, set);
  return regress(set, ys, mean, cov, [&](const Matrix& rhs) { return root.solve(rhs); });
}

Vector residual_at(const Linearization& lin, const VectorFunction& g, const Vector& x) {
  if (x.size() != lin.slope.cols()) throw InvalidInput("residual_at: point has wrong dimension");
  Vector y = g(x);
  if (!y.allFinite()) throw EvaluationError("function returned non-finite value in residual_at");
  if (y.size() != lin.offset.size()) throw InvalidInput("residual_at: output dimension mismatch");
  return y - (lin.slope * x + lin.offset);
}

double error_trace(const Linearization& lin) { return std::max(0.0, lin.error_cov.trace()); }

}  // namespace agmf
