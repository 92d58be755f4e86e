#pragma once

#include <cstdint>
#include <vector>

#include "stgp/cvi.hpp"
#include "stgp/dataset.hpp"
#include "stgp/latent.hpp"
#include "stgp/likelihoods.hpp"
#include "stgp/markov_kernels.hpp"

namespace stgp {

/// Spatial conditional of the data sites given the inducing locations:
/// W = K_SZ K_ZZ^{-1} and q~_k = k(S_k, S_k) - K_{S_k Z} K_ZZ^{-1} K_{Z S_k}.
/// A site that coincides with an inducing location gets an exact indicator row.
struct SparseProjection {
  Matrix inducing;  // M x D_s
  Matrix weights;   // N x M
  Vector qtilde;    // N, clipped at 0

  Index num_sites() const { return weights.rows(); }
  Index num_inducing() const { return weights.cols(); }
};

SparseProjection build_projection(const SpatialKernel& ks, const Matrix& sites,
                                  const Matrix& inducing);

struct SiteMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// (W_k m_u, W_k P_u W_k^T + variance * q~_k) for one site.
SiteMoments sparse_marginal(const SparseProjection& proj, double variance, const Vector& mean_u,
                            const Matrix& cov_u, Index k);

SiteMarginals sparse_site_marginals(const LatentMarginals& latent, const SparseProjection& proj,
                                    double variance);

/// Per-step natural parameters of a dense Gaussian site over the M inducing
/// values. Rows and columns of lambda2 that are exactly zero carry no information.
struct BlockBank {
  std::vector<Vector> lambda1;
  std::vector<Matrix> lambda2;

  static BlockBank zeros(Index num_times, Index num_inducing);
  Index num_steps() const { return static_cast<Index>(lambda1.size()); }
};

/// Indices whose row of lambda2 has a non-zero entry.
std::vector<Index> informed_indices(const Matrix& lambda2);

/// Restricts the informed block of lambda2 to be <= -eps I, leaving it untouched
/// when it already is.
void clamp_negative_definite(Matrix& lambda2, double eps);

PseudoObservations block_to_pseudo(const BlockBank& bank);

/// Site gradients pulled back to the inducing values, then the natural-gradient update.
BlockBank sparse_cvi_step(const BlockBank& bank, const LatentMarginals& latent,
                          const SparseProjection& proj, double variance, const GridDataset& data,
                          const Likelihood& lik, double beta);

ElboTerms sparse_elbo_terms(const LatentMarginals& latent, const BlockBank& bank,
                            const SparseProjection& proj, double variance, const GridDataset& data,
                            const Likelihood& lik);
double sparse_elbo(const LatentModel& model, const BlockBank& bank, const SparseProjection& proj,
                   const GridDataset& data, const Likelihood& lik);

struct SparseFitState : TrainingState {
  ModelConfig config;
  Vector times;
  Matrix sites;     // data sites
  Matrix inducing;  // M x D_s
  BlockBank bank;
};

/// Log-domain hyperparameters followed, when optimising Z, by the row-major inducing coordinates.
Vector sparse_parameters(const Hyperparameters& hypers, const Matrix& inducing, bool with_noise,
                         bool with_inducing);

Vector sparse_hyper_grad(const ModelConfig& config, const BlockBank& bank, const GridDataset& data,
                         const Likelihood& lik, const Hyperparameters& hypers,
                         const Matrix& inducing, bool with_inducing, double rel_step = 1e-4);

SparseFitState sparse_fit(const GridDataset& data, const ModelConfig& config,
                          const Hyperparameters& init, const Likelihood& lik,
                          const Matrix& inducing, const TrainConfig& train);
void sparse_fit_continue(SparseFitState& state, const GridDataset& data, const TrainConfig& train);

Prediction sparse_predict(const SparseFitState& state, const PredictionQuery& query);

/// Predictive moments at arbitrary (t, s) given pseudo-observations over
/// `points` at `train_times`.
Prediction predict_from_pseudo(const ModelConfig& config, const Hyperparameters& hypers,
                               const Matrix& points, const Vector& train_times,
                               const PseudoObservations& pseudo, const PredictionQuery& query);

/// Lloyd's k-means with k-means++ seeding; returns k centres.
Matrix kmeans(const Matrix& points, Index k, std::uint64_t seed, int max_iters = 100);

}  // namespace stgp
