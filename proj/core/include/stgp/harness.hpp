#pragma once

#include <string>
#include <variant>
#include <vector>

#include "stgp/config.hpp"
#include "stgp/cvi.hpp"
#include "stgp/dataset.hpp"
#include "stgp/sparse.hpp"

namespace stgp {

/// A trained model together with what is needed to predict from it later.
struct FittedModel {
  RunConfig config;
  InputScaling scaling;  // identity unless config.normalize_inputs
  GridDataset training;  // original units
  std::variant<FitState, SparseFitState> state;

  const TrainingState& training_state() const;
};

/// Chooses inducing points (explicit, or k-means over the sites), builds the
/// variant from the config and trains it.
FittedModel run_fit(const RunConfig& config, const GridDataset& data);

/// Predictive latent moments at query points given in original units.
Prediction run_predict(const FittedModel& model, const PredictionQuery& query);

/// Query covering every (time, site) pair of a dataset in time-major order.
PredictionQuery grid_query(const GridDataset& data);

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

struct BenchRow {
  Index num_times = 0;
  Index num_sites = 0;
  FilterMode filter = FilterMode::kSequential;
  ModelVariant variant = ModelVariant::kStVgp;
  int iterations = 0;
  double seconds_per_iteration = 0.0;
  double total_seconds = 0.0;
};

/// Times a training run on a synthetic pseudo-periodic grid.
BenchRow bench_fit(Index num_times, Index num_sites, int iterations, FilterMode filter,
                   ModelVariant variant = ModelVariant::kStVgp, std::uint64_t seed = 0);

}  // namespace stgp
