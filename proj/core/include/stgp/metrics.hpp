#pragma once

#include "stgp/likelihoods.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// sqrt(mean((truth - pred)^2)) over entries where truth is finite.
double rmse(const Vector& pred, const Vector& truth);

/// Mean negative log predictive density of `truth` under N(f | mean, var)
/// pushed through `lik`, over entries where truth is finite.
double mean_nlpd(const Likelihood& lik, const Vector& truth, const Vector& mean, const Vector& var);

struct Metrics {
  double rmse = 0.0;
  double nlpd = 0.0;
  Index count = 0;
};

/// RMSE of the predictive mean of y (see predictive_mean) and mean NLPD from latent moments.
Metrics evaluate_metrics(const Likelihood& lik, const Vector& truth, const Vector& mean,
                         const Vector& var);

}  // namespace stgp
