#include "stgp/metrics.hpp"

#include <cmath>

#include "stgp/errors.hpp"

namespace stgp {

namespace {

void require_same_length(Index a, Index b) {
  if (a != b) throw DimensionError("metrics: prediction and truth lengths differ");
}

}  // namespace

double rmse(const Vector& pred, const Vector& truth) {
  require_same_length(pred.size(), truth.size());
  double acc = 0.0;
  Index count = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(truth(i))) continue;
    const double r = truth(i) - pred(i);
    acc += r * r;
    ++count;
  }
  if (count == 0) throw DataError("metrics: no observed targets");
  return std::sqrt(acc / static_cast<double>(count));
}

double mean_nlpd(const Likelihood& lik, const Vector& truth, const Vector& mean, const Vector& var) {
  require_same_length(mean.size(), truth.size());
  require_same_length(var.size(), truth.size());
  double acc = 0.0;
  Index count = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(truth(i))) continue;
    acc += nlpd(lik, truth(i), mean(i), var(i));
    ++count;
  }
  if (count == 0) throw DataError("metrics: no observed targets");
  return acc / static_cast<double>(count);
}

Metrics evaluate_metrics(const Likelihood& lik, const Vector& truth, const Vector& mean,
                         const Vector& var) {
  require_same_length(mean.size(), var.size());
  Vector point(mean.size());
  for (Index i = 0; i < mean.size(); ++i) point(i) = predictive_mean(lik, mean(i), var(i));
  Metrics m;
  m.rmse = rmse(point, truth);
  m.nlpd = mean_nlpd(lik, truth, mean, var);
  m.count = static_cast<Index>(truth.array().isFinite().count());
  return m;
}

}  // namespace stgp
