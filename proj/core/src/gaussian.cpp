#include "stgp/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace stgp {

namespace {

// Index of the first pivot at which an unpivoted Cholesky of `p` breaks down,
// or -1 when the factorisation completes.
Index failing_pivot(const Matrix& p) {
  const Index n = p.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = p(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return j;
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (p(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return -1;
}

double jitter_for(const Matrix& p) {
  const double mean_diag = p.rows() > 0 ? std::abs(p.diagonal().mean()) : 0.0;
  return kCholeskyJitter * (mean_diag > 0.0 ? mean_diag : 1.0);
}

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

}  // namespace

Eigen::LLT<Matrix> robust_llt(const Matrix& p, const std::string& name, std::optional<Index> step) {
  if (!p.allFinite()) throw DefinitenessError(name, std::nullopt, step);
  Eigen::LLT<Matrix> llt(p);
  if (factor_ok(llt)) return llt;
  Matrix jittered = p;
  jittered.diagonal().array() += jitter_for(p);
  llt.compute(jittered);
  if (factor_ok(llt)) return llt;
  const Index pivot = failing_pivot(jittered);
  throw DefinitenessError(name, pivot >= 0 ? std::optional<Index>(pivot) : std::nullopt, step);
}

Matrix cholesky_factor(const Matrix& p, const std::string& name) {
  if (p.rows() != p.cols()) throw DimensionError("cholesky_factor: matrix is not square");
  return robust_llt(p, name).matrixL();
}

double log_det(const Eigen::LLT<Matrix>& chol) {
  return 2.0 * chol.matrixLLT().diagonal().array().log().sum();
}

double mvn_logpdf(const Vector& residual, const Eigen::LLT<Matrix>& chol) {
  const Vector z = chol.matrixL().solve(residual);
  const double n = static_cast<double>(residual.size());
  return -0.5 * (z.squaredNorm() + log_det(chol) + n * std::log(2.0 * std::numbers::pi));
}

double mvn_logpdf(const Vector& x, const Vector& m, const Matrix& p) {
  if (x.size() != m.size() || p.rows() != x.size() || p.cols() != x.size()) {
    throw DimensionError("mvn_logpdf: dimension mismatch");
  }
  return mvn_logpdf(Vector(x - m), robust_llt(p, "P"));
}

Matrix spd_inverse(const Matrix& p, const std::string& name) {
  const auto llt = robust_llt(p, name);
  Matrix inv = llt.solve(Matrix::Identity(p.rows(), p.cols()));
  symmetrize(inv);
  return inv;
}

GaussianParams convert_params(const GaussianParams& g, Parameterization target) {
  if (g.second.rows() != g.dim() || g.second.cols() != g.dim()) {
    throw DimensionError("convert_params: matrix/vector dimension mismatch");
  }
  if (g.tag == target) return g;

  // Normalise everything through moment form.
  Vector mean;
  Matrix cov;
  switch (g.tag) {
    case Parameterization::kMoment:
      mean = g.first;
      cov = g.second;
      robust_llt(cov, "P");
      break;
    case Parameterization::kNatural: {
      const Matrix neg2 = -2.0 * g.second;
      const auto llt = robust_llt(neg2, "lambda2");
      cov = llt.solve(Matrix::Identity(g.dim(), g.dim()));
      symmetrize(cov);
      mean = llt.solve(g.first);
      break;
    }
    case Parameterization::kExpectation:
      mean = g.first;
      cov = g.second - g.first * g.first.transpose();
      symmetrize(cov);
      robust_llt(cov, "mu2 - mu1 mu1^T");
      break;
  }

  switch (target) {
    case Parameterization::kMoment:
      return GaussianParams::moment(std::move(mean), std::move(cov));
    case Parameterization::kNatural: {
      const auto llt = robust_llt(cov, "P");
      Matrix prec = llt.solve(Matrix::Identity(g.dim(), g.dim()));
      symmetrize(prec);
      return GaussianParams::natural(llt.solve(mean), -0.5 * prec);
    }
    case Parameterization::kExpectation: {
      Matrix second = mean * mean.transpose() + cov;
      return GaussianParams::expectation(std::move(mean), std::move(second));
    }
  }
  return g;
}

}  // namespace stgp
