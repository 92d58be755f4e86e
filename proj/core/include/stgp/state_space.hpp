#pragma once

#include <vector>

#include "stgp/associative_scan.hpp"
#include "stgp/markov_kernels.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// Gaussian pseudo-observation N(y | H_rows x_n, V) at one time step. Only
/// the measurement rows listed in `rows` are informative; an empty `rows`
/// marks a step that carries no information at all.
struct StepObservation {
  std::vector<Index> rows;
  Vector mean;  // |rows|
  Matrix cov;   // |rows| x |rows|, SPD

  bool missing() const { return rows.empty(); }
};

struct PseudoObservations {
  std::vector<StepObservation> steps;

  Index num_steps() const { return static_cast<Index>(steps.size()); }
  /// All steps missing, for a model with `num_steps` steps.
  static PseudoObservations empty(Index num_steps);
};

struct FilterResult {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  std::vector<double> step_log_lik;
  double log_lik = 0.0;
};

/// Smoothed state marginals N(m_n, P_n).
struct StateMarginals {
  std::vector<Vector> means;
  std::vector<Matrix> covs;

  Index num_steps() const { return static_cast<Index>(means.size()); }
  /// H m_n.
  Vector function_mean(const Matrix& measurement, Index n) const;
  /// H P_n H^T.
  Matrix function_cov(const Matrix& measurement, Index n) const;
};

enum class FilterMode { kSequential, kParallel };

/// Kalman filter: predict with (A_n, Q_n), update against the informative
/// rows, accumulate log N(y_n | H m_n^-, H P_n^- H^T + V_n) over observed steps.
FilterResult sequential_filter(const StateSpaceModel& model, const PseudoObservations& obs);

/// Rauch-Tung-Striebel smoother over a filter pass of the same model.
StateMarginals rts_smoother(const StateSpaceModel& model, const FilterResult& filtered);

/// Element of the associative filtering operator: the conditional
/// p(x_n | x_{n-1}, y_n) = N(B x_{n-1} + m, P) and the information pair
/// (phi, J) of p(y_n | x_{n-1}).
struct FilterElement {
  Matrix B;
  Vector m;
  Matrix P;
  Vector phi;
  Matrix J;
};

/// Neutral element (B = I, m = 0, P = 0, phi = 0, J = 0) of dimension d.
FilterElement identity_filter_element(Index d);

/// e_i * e_j, with W = (I + P_i J_j)^{-1} standing in for (P_i^{-1} + J_j)^{-1} P_i^{-1}.
FilterElement combine_filter_elements(const FilterElement& ei, const FilterElement& ej);

/// Element of the associative smoothing operator.
struct SmootherElement {
  Matrix E;
  Vector m;
  Matrix P;
};

/// e_i * e_j for i earlier than j: (E_i E_j, E_i m_j + m_i, E_i P_j E_i^T + P_i).
SmootherElement combine_smoother_elements(const SmootherElement& ei, const SmootherElement& ej);

/// Builds the per-step filtering elements from a model and its observations.
std::vector<FilterElement> make_filter_elements(const StateSpaceModel& model,
                                                const PseudoObservations& obs);

/// Associative-scan filter; agrees with sequential_filter.
FilterResult parallel_filter(const StateSpaceModel& model, const PseudoObservations& obs,
                             const ScanOptions& options = {});

/// Associative-scan smoother; agrees with rts_smoother.
StateMarginals parallel_smoother(const StateSpaceModel& model, const FilterResult& filtered,
                                 const ScanOptions& options = {});

/// Convenience: filter + smoother in the chosen mode.
struct SmoothingResult {
  StateMarginals marginals;
  double log_lik = 0.0;
};
SmoothingResult filter_smooth(const StateSpaceModel& model, const PseudoObservations& obs,
                              FilterMode mode, const ScanOptions& options = {});

}  // namespace stgp
