#pragma once

#include <vector>

#include "stgp/associative_scan.hpp"
#include "stgp/markov_kernels.hpp"
#include "stgp/state_space.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// Standard-form model rewritten so that the spatial mixing sits in the
/// measurement: A_n = I (x) A^t_n, Q_n = I (x) Q^t_n, H = C (x) H^t with
/// C C^T = K_s, and initial covariance I (x) Pinf.
struct MFModel {
  StateSpaceModel state_space;  // dense form of the above
  Matrix spatial_chol;          // C, G x G lower triangular
  std::vector<Matrix> temporal_transitions;
  std::vector<Matrix> temporal_noises;  // temporal_noises[0] = Pinf
  Vector temporal_measurement;          // (H^t)^T, length d_t

  Index num_points() const { return spatial_chol.rows(); }
  Index temporal_dim() const { return temporal_measurement.size(); }
  Index num_steps() const { return static_cast<Index>(temporal_transitions.size()); }
};

/// Exact reformulation of a standard-form model.
MFModel reformulate(const DiscreteSTModel& model);

/// State with the covariance restricted to G independent d_t x d_t blocks.
struct BlockState {
  Matrix mean;              // d_t x G, column g is block g
  std::vector<Matrix> cov;  // G blocks
};

/// Dense mean and block-diagonal covariance of a BlockState.
Vector dense_mean(const BlockState& s);
Matrix dense_cov(const BlockState& s);

/// Zeroes every off-diagonal block of a (G d_t) x (G d_t) matrix.
Matrix project_block_diagonal(const Matrix& p, Index blocks, Index block_dim);

struct BlockFilterResult {
  std::vector<BlockState> filtered;
  std::vector<double> step_log_lik;
  double log_lik = 0.0;
};

/// Kalman filter with block-diagonal covariances; cross-blocks created by an
/// update are dropped immediately.
BlockFilterResult mf_filter(const MFModel& mf, const PseudoObservations& obs);

/// Blockwise RTS smoother.
std::vector<BlockState> mf_smoother(const MFModel& mf, const BlockFilterResult& filtered);

/// Associative-scan counterparts. Filtering elements are projected to
/// block-diagonal form when built; the combine then stays block-diagonal.
BlockFilterResult mf_parallel_filter(const MFModel& mf, const PseudoObservations& obs,
                                     const ScanOptions& options = {});
std::vector<BlockState> mf_parallel_smoother(const MFModel& mf, const BlockFilterResult& filtered,
                                             const ScanOptions& options = {});

struct BlockMarginals {
  std::vector<BlockState> smoothed;
  double log_lik = 0.0;
};

BlockMarginals mf_filter_smoother(const MFModel& mf, const PseudoObservations& obs,
                                  FilterMode mode = FilterMode::kSequential,
                                  const ScanOptions& options = {});

/// Function values at the G points: mean C (h^T m_g)_g and covariance C diag(s) C^T
/// with s_g = h^T P_g h.
void mf_function_moments(const MFModel& mf, const BlockState& s, Vector& mean, Matrix& cov);

}  // namespace stgp
