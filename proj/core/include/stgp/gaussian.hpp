#pragma once

#include <Eigen/Cholesky>

#include "stgp/errors.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// The three exponential-family parameterisations of a multivariate Gaussian.
enum class Parameterization {
  kMoment,       ///< (m, P)
  kNatural,      ///< (P^{-1} m, -P^{-1} / 2)
  kExpectation,  ///< (m, m m^T + P)
};

/// A Gaussian stored in one of its parameterisations. `first` is the vector
/// component and `second` the matrix component of the chosen form.
struct GaussianParams {
  Parameterization tag = Parameterization::kMoment;
  Vector first;
  Matrix second;

  Index dim() const { return first.size(); }

  static GaussianParams moment(Vector mean, Matrix cov) {
    return {Parameterization::kMoment, std::move(mean), std::move(cov)};
  }
  static GaussianParams natural(Vector eta1, Matrix eta2) {
    return {Parameterization::kNatural, std::move(eta1), std::move(eta2)};
  }
  static GaussianParams expectation(Vector mu1, Matrix mu2) {
    return {Parameterization::kExpectation, std::move(mu1), std::move(mu2)};
  }
};

/// Converts between parameterisations. Throws DefinitenessError naming the
/// offending parameter when the input violates its form's definiteness rule.
GaussianParams convert_params(const GaussianParams& g, Parameterization target);

/// Relative jitter added once when a factorisation fails.
inline constexpr double kCholeskyJitter = 1e-8;

/// Lower Cholesky factor C with C C^T = P. On failure retries once with
/// 1e-8 * mean(diag(P)) added to the diagonal; a second failure throws
/// DefinitenessError carrying the first non-positive pivot.
Matrix cholesky_factor(const Matrix& p, const std::string& name = "P");

/// Cholesky decomposition object with the same jitter-and-retry policy.
Eigen::LLT<Matrix> robust_llt(const Matrix& p, const std::string& name = "P",
                              std::optional<Index> step = std::nullopt);

/// log N(x | m, P), evaluated through the Cholesky factor of P.
double mvn_logpdf(const Vector& x, const Vector& m, const Matrix& p);

/// Same as mvn_logpdf for a precomputed factorisation of P.
double mvn_logpdf(const Vector& residual, const Eigen::LLT<Matrix>& chol);

/// log det of the matrix factorised by `chol`.
double log_det(const Eigen::LLT<Matrix>& chol);

/// Inverse of an SPD matrix via its Cholesky factor.
Matrix spd_inverse(const Matrix& p, const std::string& name = "P");

}  // namespace stgp
