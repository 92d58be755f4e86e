#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "stgp/errors.hpp"
#include "stgp/types.hpp"

namespace stgp {

enum class MaternOrder { kHalf, kThreeHalves, kFiveHalves };

/// Parses "matern12" / "matern32" / "matern52" (also "1/2", "3/2", "5/2").
MaternOrder parse_matern_order(std::string_view name);
std::string_view to_string(MaternOrder order);

/// Continuous-time state-space form of a stationary temporal Matern kernel:
/// dx = F x dt + L dβ with spectral density qc, f = H x, stationary covariance Pinf.
struct MarkovKernelSS {
  MaternOrder family = MaternOrder::kThreeHalves;
  double variance = 1.0;
  double lengthscale = 1.0;
  Matrix feedback;         // F, d_t x d_t
  Matrix noise_effect;     // L, d_t x 1
  double spectral_density = 0.0;  // qc
  Matrix measurement;      // H, 1 x d_t
  Matrix stationary_cov;   // Pinf, d_t x d_t

  Index state_dim() const { return feedback.rows(); }
};

MarkovKernelSS build_temporal_ss(MaternOrder family, double variance, double lengthscale);

/// Direct evaluation of the temporal kernel at lag tau.
double temporal_kernel(const MarkovKernelSS& k, double tau);

struct DiscreteTransition {
  Matrix transition;     // A = expm(F dt)
  Matrix process_noise;  // Q = Pinf - A Pinf A^T
};

/// Exact discretisation over a step dt >= 0.
DiscreteTransition discretize(const MarkovKernelSS& k, double dt);

/// Matrix exponential used for orders without a closed form.
Matrix expm(const Matrix& a);

/// Unit-variance product-form Matern kernel over D_s spatial dimensions.
struct SpatialKernel {
  MaternOrder family = MaternOrder::kThreeHalves;
  Vector lengthscales;  // one per spatial dimension

  double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;
};

/// Matern correlation as a function of the scaled distance r >= 0.
double matern_correlation(MaternOrder family, double r);

/// Gram matrix K(S, S'); rows of S and S' are points.
Matrix spatial_gram(const SpatialKernel& k, const Matrix& s, const Matrix& s_prime);

/// Linear-Gaussian state-space model over a grid of G spatial points.
///
/// Steps are indexed 0..N_t-1. transitions[n] / noises[n] map the state at
/// step n-1 to step n; transitions[0] = I and noises[0] is the initial
/// (stationary) covariance so that step 0 has prior N(initial_mean, noises[0]).
struct StateSpaceModel {
  std::vector<Matrix> transitions;
  std::vector<Matrix> noises;
  Matrix measurement;
  Vector initial_mean;

  Index num_steps() const { return static_cast<Index>(transitions.size()); }
  Index state_dim() const { return measurement.cols(); }
  Index obs_dim() const { return measurement.rows(); }
};

/// Spatio-temporal model with the Kronecker factors it was assembled from.
struct DiscreteSTModel : StateSpaceModel {
  MarkovKernelSS temporal;
  Matrix spatial_gram;           // K(S, S) or K(Z, Z), G x G
  Vector times;                  // t_0 < t_1 < ...
  std::vector<Matrix> temporal_transitions;  // A^{(t)}_n, with A^{(t)}_0 = I
  std::vector<Matrix> temporal_noises;       // Q^{(t)}_n, with Q^{(t)}_0 = Pinf

  Index num_points() const { return spatial_gram.rows(); }
  Index temporal_dim() const { return temporal.state_dim(); }
  /// dt_n = t_{n+1} - t_n.
  double step_size(Index n) const { return times(n + 1) - times(n); }
};

/// Standard form over the data grid S: A_n = I (x) A_n^t, Q_n = K_SS (x) Q_n^t,
/// H = I (x) H^t, initial covariance K_SS (x) Pinf. `times` must be strictly increasing.
DiscreteSTModel assemble_full(const MarkovKernelSS& kt, const SpatialKernel& ks, const Matrix& s,
                              const Vector& times);

/// Same construction over spatial inducing locations Z.
DiscreteSTModel assemble_sparse(const MarkovKernelSS& kt, const SpatialKernel& ks,
                                const Matrix& z, const Vector& times);

/// Assembles from a precomputed spatial gram (G x G).
DiscreteSTModel assemble_from_gram(const MarkovKernelSS& kt, const Matrix& gram,
                                   const Vector& times);

}  // namespace stgp
