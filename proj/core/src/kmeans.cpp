#include <limits>
#include <random>

#include "stgp/errors.hpp"
#include "stgp/sparse.hpp"

namespace stgp {

Matrix kmeans(const Matrix& points, Index k, std::uint64_t seed, int max_iters) {
  const Index n = points.rows();
  if (k < 1 || k > n) throw DomainError("kmeans: need 1 <= k <= number of points");
  std::mt19937_64 rng(seed);
  Matrix centres(k, points.cols());
  // k-means++ seeding.
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centres.row(0) = points.row(pick(rng));
  Vector dist2 = (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    Index chosen = 0;
    const double total = dist2.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= dist2(chosen);
        if (target <= 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centres.row(c) = points.row(chosen);
    dist2 = dist2.cwiseMin((points.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }
  std::vector<Index> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - centres.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, points.cols());
    Vector counts = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      counts(assign[i]) += 1.0;
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centres.row(c) = sums.row(c) / counts(c);
    }
  }
  return centres;
}

}  // namespace stgp
