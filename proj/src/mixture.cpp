#include "agmf/mixture.hpp"

#include "agmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace agmf {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kSymmetryTolerance = 1e-9;

bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_condition(const Matrix& cov, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::EigenvaluesOnly);
  const double hi = solver.eigenvalues().maxCoeff();
  const double lo = solver.eigenvalues().minCoeff();
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > kMaxCondition) {
    throw NumericalError(std::string(what) + ": covariance is singular or ill-conditioned");
  }
}

}  // namespace

Matrix repair_psd(const Matrix& cov, double scale) {
  Matrix sym = 0.5 * (cov + cov.transpose());
  if (sym.size() == 0) return sym;
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return sym;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  Vector values = solver.eigenvalues();
  const double reference = std::max(scale, values.cwiseAbs().maxCoeff());
  const double floor = -GaussianComponent::kPsdTolerance * reference;
  if (values.minCoeff() >= 0.0) return sym;
  if (values.minCoeff() < floor) {
    throw NumericalError("covariance is not positive semi-definite (eigenvalue " +
                         std::to_string(values.minCoeff()) + ")");
  }
  values = values.cwiseMax(0.0);
  Matrix repaired = solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (repaired + repaired.transpose());
}

GaussianComponent::GaussianComponent(double weight, Vector mean, Matrix cov)
    : weight_(weight), mean_(std::move(mean)), cov_(std::move(cov)) {
  if (!(weight_ >= 0.0) || !std::isfinite(weight_)) {
    throw InvalidInput("component weight must be finite and nonnegative");
  }
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw InvalidInput("covariance shape does not match mean dimension");
  }
  if (!all_finite(mean_) || !all_finite(cov_)) {
    throw InvalidInput("component parameters must be finite");
  }
  cov_ = repair_psd(cov_);
}

GaussianComponent GaussianComponent::with_weight(double weight) const {
  GaussianComponent copy = *this;
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw InvalidInput("component weight must be finite and nonnegative");
  }
  copy.weight_ = weight;
  return copy;
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components, bool normalized)
    : components_(std::move(components)), normalized_(normalized) {
  if (components_.empty()) throw InvalidInput("mixture needs at least one component");
  const Eigen::Index d = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != d) throw InvalidInput("mixture components differ in dimension");
  }
  if (normalized_ && std::abs(total_weight() - 1.0) > kNormalizationTolerance) {
    throw InvalidInput("mixture weights do not sum to one");
  }
}

GaussianMixture::GaussianMixture(GaussianComponent component)
    : GaussianMixture(std::vector<GaussianComponent>{std::move(component)}, false) {
  normalized_ = std::abs(total_weight() - 1.0) <= kNormalizationTolerance;
}

GaussianMixture GaussianMixture::normalize(std::vector<GaussianComponent> components) {
  double total = 0.0;
  for (const auto& c : components) total += c.weight();
  if (!(total > 0.0)) throw InvalidInput("cannot normalize a mixture with zero total weight");
  for (auto& c : components) c = c.with_weight(c.weight() / total);
  return GaussianMixture(std::move(components), true);
}

double GaussianMixture::total_weight() const {
  double total = 0.0;
  for (const auto& c : components_) total += c.weight();
  return total;
}

Moments mixture_moments(const GaussianMixture& mixture) {
  const double total = mixture.total_weight();
  if (!(total > 0.0)) throw InvalidInput("mixture has zero total weight");
  const Eigen::Index d = mixture.dim();
  Vector mean = Vector::Zero(d);
  for (const auto& c : mixture) mean += c.weight() * c.mean();
  mean /= total;
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& c : mixture) {
    const Vector delta = c.mean() - mean;
    cov += c.weight() * (c.cov() + delta * delta.transpose());
  }
  cov /= total;
  return {std::move(mean), 0.5 * (cov + cov.transpose())};
}

double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance is not positive definite");
  }
  const Vector white = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());
}

double evaluate_density(const GaussianMixture& mixture, const Vector& x) {
  if (x.size() != mixture.dim()) throw InvalidInput("evaluation point has wrong dimension");
  double density = 0.0;
  for (const auto& c : mixture) {
    check_condition(c.cov(), "evaluate_density");
    density += c.weight() * std::exp(log_normal_pdf(x, c.mean(), c.cov()));
  }
  return density;
}

double gaussian_product_integral(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.dim() != b.dim()) throw InvalidInput("gaussian_product_integral: dimension mismatch");
  const Matrix sum = a.cov() + b.cov();
  check_condition(sum, "gaussian_product_integral");
  return a.weight() * b.weight() * std::exp(log_normal_pdf(a.mean(), b.mean(), sum));
}

namespace {

double cross_energy(const GaussianMixture& f, const GaussianMixture& g) {
  double sum = 0.0;
  for (const auto& a : f) {
    for (const auto& b : g) sum += gaussian_product_integral(a, b);
  }
  return sum;
}

}  // namespace

double normalized_isd(const GaussianMixture& f, const GaussianMixture& g) {
  if (f.dim() != g.dim()) throw InvalidInput("normalized_isd: dimension mismatch");
  const double ff = cross_energy(f, f);
  const double gg = cross_energy(g, g);
  const double fg = cross_energy(f, g);
  const double denom = ff + gg;
  if (!(denom > 0.0)) return 0.0;
  return std::clamp((ff + gg - 2.0 * fg) / denom, 0.0, 1.0);
}

EigenDecomposition eigendecompose(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw InvalidInput("eigendecompose: matrix is not square");
  if (!all_finite(cov)) throw InvalidInput("eigendecompose: matrix has non-finite entries");
  const double magnitude = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * magnitude) {
    throw InvalidInput("eigendecompose: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: solver failed");

  const Eigen::Index n = sym.rows();
  // The solver returns ascending values; reverse into nonincreasing order and
  // keep the solver's column order among exact ties.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });

  EigenDecomposition result{Matrix(n, n), Vector(n)};
  const double largest = n > 0 ? solver.eigenvalues().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    double value = solver.eigenvalues()(src);
    if (value < 0.0) {
      if (value < -GaussianComponent::kPsdTolerance * std::max(largest, 0.0)) {
        throw NumericalError("eigendecompose: matrix is not positive semi-definite");
      }
      value = 0.0;
    }
    Vector v = solver.eigenvectors().col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    result.values(k) = value;
    result.vectors.col(k) = v;
  }
  return result;
}

}  // namespace agmf
