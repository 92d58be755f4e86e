#pragma once

#include <vector>

#include "stgp/dataset.hpp"
#include "stgp/latent.hpp"
#include "stgp/likelihoods.hpp"
#include "stgp/optimizer.hpp"
#include "stgp/state_space.hpp"

namespace stgp {

/// Largest admissible site precision parameter: lambda2 <= -kPrecisionFloor after an update.
inline constexpr double kPrecisionFloor = 1e-8;

/// Per-site natural parameters of the Gaussian approximate likelihood,
/// N_t x N_s. A site with lambda2 == 0 carries no information.
struct SiteBank {
  Matrix lambda1;
  Matrix lambda2;

  static SiteBank zeros(Index num_times, Index num_sites);
  bool informative(Index n, Index k) const { return lambda2(n, k) < 0.0; }
};

/// Gaussian marginals q(f_{n,k}) at every site.
struct SiteMarginals {
  Matrix mean;  // N_t x N_s
  Matrix var;   // N_t x N_s
};

SiteMarginals site_marginals(const LatentMarginals& latent);

/// V = (-2 lambda2)^{-1}, Y = V lambda1 at informative sites; others are missing.
PseudoObservations bank_to_pseudo(const SiteBank& bank);

/// One natural-gradient step:
/// lambda <- (1 - beta) lambda + beta [g_m - 2 g_v m, g_v] at observed sites,
/// followed by lambda2 <- min(lambda2, -kPrecisionFloor).
SiteBank cvi_step(const SiteBank& bank, const SiteMarginals& marginals, const GridDataset& data,
                  const Likelihood& lik, double beta);

/// Posterior marginals at the data sites under the current bank.
LatentMarginals posterior(const LatentModel& model, const SiteBank& bank);

struct ElboTerms {
  double expected_log_lik = 0.0;  // sum E_q[log p(y | f)]
  double approx_term = 0.0;       // - sum E_q[log N(Y~ | f, V~)]
  double log_lik = 0.0;           // filter log marginal likelihood of (Y~, V~)

  double total() const { return expected_log_lik + approx_term + log_lik; }
};

/// Three-term objective from already computed marginals.
ElboTerms elbo_terms(const LatentMarginals& latent, const SiteBank& bank, const GridDataset& data,
                     const Likelihood& lik);
double elbo(const LatentModel& model, const SiteBank& bank, const GridDataset& data,
            const Likelihood& lik);

struct TrainConfig {
  double beta = 1.0;  // natural-gradient step for the sites
  double rho = 0.0;   // Adam learning rate for the hyperparameters; 0 disables the step
  int iterations = 10;
  double fd_step = 1e-4;  // relative finite-difference step for hyperparameter gradients
  AdamConfig adam{};
  bool optimize_inducing = false;  // sparse models only
};

/// Fields shared by every training loop.
struct TrainingState {
  Hyperparameters hypers;
  Likelihood likelihood;
  AdamState adam;
  int iteration = 0;
  std::vector<double> elbo_trace;
  std::vector<double> iteration_seconds;

  /// Mean wall time per iteration, excluding the first (warm-up) iteration when possible.
  double seconds_per_iteration() const;
};

struct FitState : TrainingState {
  ModelConfig config;
  Vector times;  // training timestamps
  Matrix sites;  // training sites (the G points)
  SiteBank bank;
};

/// d ELBO / d theta with the bank held fixed, theta = hypers.to_theta(lik is Gaussian).
Vector hyper_grad(const ModelConfig& config, const SiteBank& bank, const GridDataset& data,
                  const Likelihood& lik, const Hyperparameters& hypers, double rel_step = 1e-4);

/// Likelihood with the noise variance taken from `hypers` when Gaussian.
Likelihood likelihood_with(const Likelihood& lik, const Hyperparameters& hypers);

/// Alternates a site step and (when rho > 0) an Adam step on theta, recording
/// the objective after every iteration.
FitState fit(const GridDataset& data, const ModelConfig& config, const Hyperparameters& init,
             const Likelihood& lik, const TrainConfig& train);

/// Runs further iterations on an existing state.
void fit_continue(FitState& state, const GridDataset& data, const TrainConfig& train);

/// fit() with the spatial mean-field approximation switched on.
FitState mf_fit(const GridDataset& data, ModelConfig config, const Hyperparameters& init,
                const Likelihood& lik, const TrainConfig& train);

/// Query points (t_i, s_i), one per row.
struct PredictionQuery {
  Vector times;
  Matrix sites;
};

struct Prediction {
  Vector mean;
  Vector var;
};

/// Latent predictive moments. Times may fall anywhere; sites off the training
/// grid are handled through the exact spatial conditional on the training sites.
Prediction predict(const FitState& state, const PredictionQuery& query);

}  // namespace stgp
