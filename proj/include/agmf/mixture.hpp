#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace agmf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps a point of the input space to the output space. Used for system and
/// measurement functions once the time index and inputs are bound.
using VectorFunction = std::function<Vector(const Vector&)>;

/// A weighted Gaussian. The covariance is symmetrized on construction and
/// tiny negative eigenvalues (roundoff) are clamped to zero; anything more
/// negative than kPsdTolerance relative to the largest eigenvalue is rejected.
class GaussianComponent {
 public:
  static constexpr double kPsdTolerance = 1e-8;

  GaussianComponent(double weight, Vector mean, Matrix cov);

  double weight() const { return weight_; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  GaussianComponent with_weight(double weight) const;

 private:
  double weight_;
  Vector mean_;
  Matrix cov_;
};

/// Ordered, non-empty list of components sharing one dimension.
///
/// A mixture is either normalized (weights sum to one within 1e-9, checked on
/// construction) or explicitly flagged as unnormalized, which is how
/// intermediate products such as split children are carried around.
class GaussianMixture {
 public:
  static constexpr double kNormalizationTolerance = 1e-9;

  explicit GaussianMixture(std::vector<GaussianComponent> components,
                           bool normalized = true);
  explicit GaussianMixture(GaussianComponent component);

  /// Rescales the weights so that they sum to one.
  static GaussianMixture normalize(std::vector<GaussianComponent> components);

  std::size_t size() const { return components_.size(); }
  Eigen::Index dim() const { return components_.front().dim(); }
  bool is_normalized() const { return normalized_; }
  double total_weight() const;

  const GaussianComponent& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  auto begin() const { return components_.begin(); }
  auto end() const { return components_.end(); }

 private:
  std::vector<GaussianComponent> components_;
  bool normalized_;
};

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Orthonormal eigenvectors (columns) with nonincreasing, nonnegative
/// eigenvalues. The first nonzero entry of every eigenvector is positive.
struct EigenDecomposition {
  Matrix vectors;
  Vector values;
};

/// Mean and covariance of the mixture. Weights are divided by their total, so
/// the moments of an unnormalized set of split children are those of the
/// parent component.
Moments mixture_moments(const GaussianMixture& mixture);

/// Sum of weighted multivariate normal densities at `x`. Throws NumericalError
/// if a component covariance has condition number above 1e12.
double evaluate_density(const GaussianMixture& mixture, const Vector& x);

/// Closed-form value of the integral of the product of two weighted Gaussians:
/// w_a w_b N(mean_a; mean_b, cov_a + cov_b).
double gaussian_product_integral(const GaussianComponent& a, const GaussianComponent& b);

/// Integral squared distance between two mixtures normalized by the sum of
/// their self-energies; lies in [0, 1].
double normalized_isd(const GaussianMixture& f, const GaussianMixture& g);

EigenDecomposition eigendecompose(const Matrix& cov);

/// Symmetrizes and clamps eigenvalues in [-kPsdTolerance * scale, 0) to zero.
/// `scale` defaults to the largest eigenvalue magnitude. Throws NumericalError
/// for more negative eigenvalues.
Matrix repair_psd(const Matrix& cov, double scale = 0.0);

/// log N(x; mean, cov) via Cholesky. Throws NumericalError if cov is not
/// positive definite.
double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

}  // namespace agmf
