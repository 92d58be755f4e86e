#pragma once

#include <optional>
#include <vector>

#include "stgp/associative_scan.hpp"
#include "stgp/markov_kernels.hpp"
#include "stgp/mean_field.hpp"
#include "stgp/state_space.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// Kernel and noise hyperparameters in their natural (positive) units.
struct Hyperparameters {
  double variance = 1.0;       // temporal kernel variance; the spatial factor has unit variance
  double lengthscale_t = 1.0;  // temporal lengthscale
  Vector lengthscale_s;        // one spatial lengthscale per dimension
  double noise_variance = 1.0;  // Gaussian likelihood only

  /// Log-domain vector [log var, log l_t, log l_s..., (log noise)].
  Vector to_theta(bool with_noise) const;
  static Hyperparameters from_theta(const Vector& theta, Index spatial_dim, bool with_noise);
  Index theta_size(bool with_noise) const { return 2 + lengthscale_s.size() + (with_noise ? 1 : 0); }
};

struct ModelConfig {
  MaternOrder temporal_family = MaternOrder::kThreeHalves;
  MaternOrder spatial_family = MaternOrder::kThreeHalves;
  bool mean_field = false;
  FilterMode filter = FilterMode::kSequential;
  ScanOptions scan{};
};

/// Prior over the latent function at G spatial points (data sites or
/// inducing locations) and a sequence of time steps.
struct LatentModel {
  ModelConfig config;
  MarkovKernelSS temporal;
  SpatialKernel spatial;
  Matrix points;            // G x D_s
  DiscreteSTModel standard;  // standard form over `points`
  std::optional<MFModel> mf;  // present when config.mean_field

  Index num_points() const { return points.rows(); }
  Index num_steps() const { return standard.num_steps(); }
};

LatentModel build_latent(const ModelConfig& config, const Hyperparameters& hypers,
                         const Matrix& points, const Vector& times);

/// Posterior over the function values at the G points, per step.
struct LatentMarginals {
  std::vector<Vector> mean;  // G
  std::vector<Matrix> cov;   // G x G
  double log_lik = 0.0;      // log marginal likelihood of the pseudo-observations

  Index num_steps() const { return static_cast<Index>(mean.size()); }
};

/// Filters and smooths pseudo-observations whose rows index the G points.
LatentMarginals latent_posterior(const LatentModel& model, const PseudoObservations& obs);

/// Union of training and query timestamps with the position of each in the union.
struct MergedTimes {
  Vector times;
  std::vector<Index> train_steps;
  std::vector<Index> query_steps;
};
MergedTimes merge_times(const Vector& train, const Vector& query);

}  // namespace stgp
