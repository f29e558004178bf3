#include "agmf/reduction.hpp"

#include "agmf/errors.hpp"

#include <cmath>
#include <queue>
#include <tuple>
#include <vector>

namespace agmf {

namespace {

double log_det(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("merge_cost: singular covariance");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

struct Candidate {
  double cost;
  std::size_t i;
  std::size_t j;
  unsigned version_i;
  unsigned version_j;

  bool operator>(const Candidate& other) const {
    return std::tie(cost, i, j) > std::tie(other.cost, other.i, other.j);
  }
};

}  // namespace

GaussianComponent merge_pair(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.dim() != b.dim()) throw InvalidInput("merge_pair: dimension mismatch");
  const double weight = a.weight() + b.weight();
  if (!(weight > 0.0)) throw InvalidInput("merge_pair: total weight must be positive");
  const double fa = a.weight() / weight;
  const double fb = b.weight() / weight;
  const Vector mean = fa * a.mean() + fb * b.mean();
  const Vector da = a.mean() - mean;
  const Vector db = b.mean() - mean;
  const Matrix cov = fa * (a.cov() + da * da.transpose()) + fb * (b.cov() + db * db.transpose());
  return {weight, mean, cov};
}

double merge_cost(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.weight() + b.weight() == 0.0) return 0.0;
  const GaussianComponent merged = merge_pair(a, b);
  const double cost = 0.5 * (merged.weight() * log_det(merged.cov()) -
                             a.weight() * log_det(a.cov()) - b.weight() * log_det(b.cov()));
  return std::max(cost, 0.0);
}

GaussianMixture reduce(const GaussianMixture& mixture, std::size_t target) {
  if (target < 1) throw InvalidInput("reduce: target must be at least one");
  if (mixture.size() <= target) return mixture;

  std::vector<GaussianComponent> pool(mixture.begin(), mixture.end());
  std::vector<bool> alive(pool.size(), true);
  std::vector<unsigned> version(pool.size(), 0);
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;

  auto push = [&](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    queue.push({merge_cost(pool[i], pool[j]), i, j, version[i], version[j]});
  };
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) push(i, j);
  }

  std::size_t count = pool.size();
  while (count > target) {
    const Candidate best = queue.top();
    queue.pop();
    if (!alive[best.i] || !alive[best.j] || version[best.i] != best.version_i ||
        version[best.j] != best.version_j) {
      continue;
    }
    // Two weightless components carry no mass; keep the first as is.
    if (pool[best.i].weight() + pool[best.j].weight() > 0.0) {
      pool[best.i] = merge_pair(pool[best.i], pool[best.j]);
    }
    alive[best.j] = false;
    ++version[best.i];
    --count;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (k != best.i && alive[k]) push(best.i, k);
    }
  }

  std::vector<GaussianComponent> out;
  out.reserve(count);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (alive[k]) out.push_back(std::move(pool[k]));
  }
  return GaussianMixture(std::move(out), mixture.is_normalized());
}

}  // namespace agmf
