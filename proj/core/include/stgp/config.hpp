#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stgp/cvi.hpp"
#include "stgp/dataset.hpp"
#include "stgp/latent.hpp"
#include "stgp/likelihoods.hpp"

namespace stgp {

enum class ModelVariant { kStVgp, kStSvgp, kMfStVgp, kMfStSvgp };

ModelVariant parse_model_variant(const std::string& name);
std::string to_string(ModelVariant variant);
inline bool is_sparse(ModelVariant v) { return v == ModelVariant::kStSvgp || v == ModelVariant::kMfStSvgp; }
inline bool is_mean_field(ModelVariant v) {
  return v == ModelVariant::kMfStVgp || v == ModelVariant::kMfStSvgp;
}

/// Everything a training run needs besides the data.
struct RunConfig {
  ModelVariant variant = ModelVariant::kStVgp;
  MaternOrder temporal_family = MaternOrder::kThreeHalves;
  MaternOrder spatial_family = MaternOrder::kThreeHalves;
  double variance = 1.0;
  double lengthscale_t = 1.0;
  std::optional<Vector> lengthscale_s;  // defaults to 1 per spatial dimension
  Likelihood likelihood = Likelihood::gaussian(1.0);
  Index inducing_count = 0;             // sparse variants; 0 means one per site
  std::optional<Matrix> inducing_points;  // explicit Z overrides the count
  bool optimize_inducing = false;
  std::uint64_t inducing_seed = 0;
  std::optional<double> beta;  // defaults to 1 (Gaussian) or 0.1
  double rho = 0.01;
  int iterations = 100;
  double fd_step = 1e-4;
  FilterMode filter = FilterMode::kSequential;
  unsigned threads = 1;
  bool normalize_inputs = false;
  std::uint64_t seed = 0;

  double effective_beta() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;
  Hyperparameters initial_hypers(Index spatial_dim) const;
};

/// Parses a JSON document; unknown keys are rejected. Throws DataError on malformed input.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace stgp
