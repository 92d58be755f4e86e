#include "stgp/latent.hpp"

#include <algorithm>
#include <cmath>

#include "stgp/errors.hpp"

namespace stgp {

Vector Hyperparameters::to_theta(bool with_noise) const {
  Vector theta(theta_size(with_noise));
  theta(0) = std::log(variance);
  theta(1) = std::log(lengthscale_t);
  theta.segment(2, lengthscale_s.size()) = lengthscale_s.array().log().matrix();
  if (with_noise) theta(theta.size() - 1) = std::log(noise_variance);
  return theta;
}

Hyperparameters Hyperparameters::from_theta(const Vector& theta, Index spatial_dim,
                                            bool with_noise) {
  if (theta.size() < 2 + spatial_dim + (with_noise ? 1 : 0)) {
    throw DimensionError("hyperparameter vector too short");
  }
  Hyperparameters h;
  h.variance = std::exp(theta(0));
  h.lengthscale_t = std::exp(theta(1));
  h.lengthscale_s = theta.segment(2, spatial_dim).array().exp().matrix();
  if (with_noise) h.noise_variance = std::exp(theta(2 + spatial_dim));
  return h;
}

LatentModel build_latent(const ModelConfig& config, const Hyperparameters& hypers,
                         const Matrix& points, const Vector& times) {
  if (hypers.lengthscale_s.size() != points.cols()) {
    throw DimensionError("spatial lengthscales do not match the spatial dimension");
  }
  if (!(hypers.lengthscale_s.array() > 0.0).all()) {
    throw DomainError("spatial lengthscales must be positive");
  }
  LatentModel m;
  m.config = config;
  m.temporal = build_temporal_ss(config.temporal_family, hypers.variance, hypers.lengthscale_t);
  m.spatial = SpatialKernel{config.spatial_family, hypers.lengthscale_s};
  m.points = points;
  m.standard = assemble_from_gram(m.temporal, spatial_gram(m.spatial, points, points), times);
  if (config.mean_field) m.mf = reformulate(m.standard);
  return m;
}

LatentMarginals latent_posterior(const LatentModel& model, const PseudoObservations& obs) {
  LatentMarginals out;
  const Index nt = model.num_steps();
  out.mean.resize(static_cast<std::size_t>(nt));
  out.cov.resize(static_cast<std::size_t>(nt));
  if (model.mf) {
    const BlockMarginals bm = mf_filter_smoother(*model.mf, obs, model.config.filter, model.config.scan);
    out.log_lik = bm.log_lik;
    for (Index n = 0; n < nt; ++n) mf_function_moments(*model.mf, bm.smoothed[n], out.mean[n], out.cov[n]);
    return out;
  }
  const SmoothingResult sm = filter_smooth(model.standard, obs, model.config.filter, model.config.scan);
  out.log_lik = sm.log_lik;
  for (Index n = 0; n < nt; ++n) {
    out.mean[n] = sm.marginals.function_mean(model.standard.measurement, n);
    out.cov[n] = sm.marginals.function_cov(model.standard.measurement, n);
  }
  return out;
}

MergedTimes merge_times(const Vector& train, const Vector& query) {
  std::vector<double> all(train.data(), train.data() + train.size());
  all.insert(all.end(), query.data(), query.data() + query.size());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  MergedTimes out;
  out.times = Eigen::Map<const Vector>(all.data(), static_cast<Index>(all.size()));
  auto locate = [&](double t) {
    return static_cast<Index>(std::lower_bound(all.begin(), all.end(), t) - all.begin());
  };
  for (Index i = 0; i < train.size(); ++i) out.train_steps.push_back(locate(train(i)));
  for (Index i = 0; i < query.size(); ++i) out.query_steps.push_back(locate(query(i)));
  return out;
}

}  // namespace stgp
