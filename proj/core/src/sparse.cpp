#include "stgp/sparse.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "stgp/errors.hpp"
#include "stgp/gaussian.hpp"
#include "training_loop.hpp"

namespace stgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool is_gaussian(const Likelihood& lik) { return lik.family == LikelihoodFamily::kGaussian; }

void check_shapes(const BlockBank& bank, const GridDataset& data, const SparseProjection& proj) {
  if (bank.num_steps() != data.num_times()) throw DimensionError("block bank steps differ from data");
  if (proj.num_sites() != data.num_sites()) throw DimensionError("projection sites differ from data");
}

Matrix unflatten_inducing(const Vector& params, Index offset, Index m, Index dim) {
  Matrix z(m, dim);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < dim; ++j) z(i, j) = params(offset + i * dim + j);
  }
  return z;
}

}  // namespace

SparseProjection build_projection(const SpatialKernel& ks, const Matrix& sites,
                                  const Matrix& inducing) {
  if (inducing.rows() == 0) throw DomainError("at least one inducing location is required");
  if (sites.cols() != inducing.cols()) throw DimensionError("sites and inducing points differ in dimension");
  // Coincident inducing points make K_ZZ singular; jitter would only hide that.
  for (Index j = 1; j < inducing.rows(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if ((inducing.row(i).array() == inducing.row(j).array()).all()) throw DefinitenessError("K_ZZ", j);
    }
  }
  SparseProjection p;
  p.inducing = inducing;
  const Matrix kzz = spatial_gram(ks, inducing, inducing);
  const Matrix kzs = spatial_gram(ks, inducing, sites);
  const auto llt = robust_llt(kzz, "K_ZZ");
  p.weights = llt.solve(kzs).transpose();
  p.qtilde.resize(sites.rows());
  for (Index k = 0; k < sites.rows(); ++k) {
    Index match = -1;
    for (Index j = 0; j < inducing.rows() && match < 0; ++j) {
      if ((sites.row(k).array() == inducing.row(j).array()).all()) match = j;
    }
    if (match >= 0) {
      p.weights.row(k).setZero();
      p.weights(k, match) = 1.0;
      p.qtilde(k) = 0.0;
      continue;
    }
    p.qtilde(k) = std::max(0.0, 1.0 - p.weights.row(k).dot(kzs.col(k)));
  }
  return p;
}

SiteMoments sparse_marginal(const SparseProjection& proj, double variance, const Vector& mean_u,
                            const Matrix& cov_u, Index k) {
  if (k < 0 || k >= proj.num_sites()) throw DimensionError("sparse_marginal: site index out of range");
  const auto w = proj.weights.row(k);
  return {w.dot(mean_u), w.dot(cov_u * w.transpose()) + variance * proj.qtilde(k)};
}

SiteMarginals sparse_site_marginals(const LatentMarginals& latent, const SparseProjection& proj,
                                    double variance) {
  const Index nt = latent.num_steps();
  SiteMarginals out{Matrix(nt, proj.num_sites()), Matrix(nt, proj.num_sites())};
  for (Index n = 0; n < nt; ++n) {
    out.mean.row(n) = (proj.weights * latent.mean[n]).transpose();
    const Matrix wc = proj.weights * latent.cov[n];
    out.var.row(n) = ((wc.array() * proj.weights.array()).rowwise().sum().matrix() +
                      variance * proj.qtilde)
                         .transpose();
  }
  return out;
}

BlockBank BlockBank::zeros(Index num_times, Index num_inducing) {
  BlockBank b;
  b.lambda1.assign(static_cast<std::size_t>(num_times), Vector::Zero(num_inducing));
  b.lambda2.assign(static_cast<std::size_t>(num_times), Matrix::Zero(num_inducing, num_inducing));
  return b;
}

std::vector<Index> informed_indices(const Matrix& lambda2) {
  std::vector<Index> idx;
  for (Index i = 0; i < lambda2.rows(); ++i) {
    if ((lambda2.row(i).array() != 0.0).any()) idx.push_back(i);
  }
  return idx;
}

void clamp_negative_definite(Matrix& lambda2, double eps) {
  const std::vector<Index> idx = informed_indices(lambda2);
  if (idx.empty()) return;
  const Index r = static_cast<Index>(idx.size());
  Matrix sub(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) sub(i, j) = lambda2(idx[i], idx[j]);
  }
  symmetrize(sub);
  const Eigen::LLT<Matrix> check(-sub - eps * Matrix::Identity(r, r));
  if (check.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
    const Vector clipped = eig.eigenvalues().cwiseMin(-eps);
    sub = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    symmetrize(sub);
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) lambda2(idx[i], idx[j]) = sub(i, j);
  }
}

PseudoObservations block_to_pseudo(const BlockBank& bank) {
  PseudoObservations out = PseudoObservations::empty(bank.num_steps());
  for (Index n = 0; n < bank.num_steps(); ++n) {
    const std::vector<Index> idx = informed_indices(bank.lambda2[n]);
    if (idx.empty()) continue;
    const Index r = static_cast<Index>(idx.size());
    Matrix prec(r, r);
    Vector l1(r);
    for (Index i = 0; i < r; ++i) {
      l1(i) = bank.lambda1[n](idx[i]);
      for (Index j = 0; j < r; ++j) prec(i, j) = -2.0 * bank.lambda2[n](idx[i], idx[j]);
    }
    symmetrize(prec);
    const auto llt = robust_llt(prec, "site precision", n);
    StepObservation& o = out.steps[n];
    o.rows = idx;
    o.cov = llt.solve(Matrix::Identity(r, r));
    symmetrize(o.cov);
    o.mean = llt.solve(l1);
  }
  return out;
}

BlockBank sparse_cvi_step(const BlockBank& bank, const LatentMarginals& latent,
                          const SparseProjection& proj, double variance, const GridDataset& data,
                          const Likelihood& lik, double beta) {
  check_shapes(bank, data, proj);
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("sparse_cvi_step: beta must lie in [0, 1]");
  BlockBank out = bank;
  if (beta == 0.0) return out;
  const Index m = proj.num_inducing();
  for (Index n = 0; n < data.num_times(); ++n) {
    Vector g_mean = Vector::Zero(m);
    Matrix g_cov = Matrix::Zero(m, m);
    bool any = false;
    for (Index k = 0; k < data.num_sites(); ++k) {
      if (!data.observed(n, k)) continue;
      any = true;
      const SiteMoments s = sparse_marginal(proj, variance, latent.mean[n], latent.cov[n], k);
      const ElikGrads g = elik_grads(lik, data.values(n, k), s.mean, s.var);
      const Vector w = proj.weights.row(k).transpose();
      g_mean += g.dm * w;
      g_cov += g.dv * w * w.transpose();
    }
    if (!any) continue;
    out.lambda1[n] = (1.0 - beta) * bank.lambda1[n] + beta * (g_mean - 2.0 * g_cov * latent.mean[n]);
    out.lambda2[n] = (1.0 - beta) * bank.lambda2[n] + beta * g_cov;
    symmetrize(out.lambda2[n]);
    clamp_negative_definite(out.lambda2[n], kPrecisionFloor);
  }
  return out;
}

ElboTerms sparse_elbo_terms(const LatentMarginals& latent, const BlockBank& bank,
                            const SparseProjection& proj, double variance, const GridDataset& data,
                            const Likelihood& lik) {
  check_shapes(bank, data, proj);
  ElboTerms t;
  t.log_lik = latent.log_lik;
  const SiteMarginals sm = sparse_site_marginals(latent, proj, variance);
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      if (data.observed(n, k)) {
        t.expected_log_lik += expected_log_lik(lik, data.values(n, k), sm.mean(n, k), sm.var(n, k));
      }
    }
    const std::vector<Index> idx = informed_indices(bank.lambda2[n]);
    if (idx.empty()) continue;
    const Index r = static_cast<Index>(idx.size());
    Matrix prec(r, r);
    Matrix cov(r, r);
    Vector l1(r);
    Vector mu(r);
    for (Index i = 0; i < r; ++i) {
      l1(i) = bank.lambda1[n](idx[i]);
      mu(i) = latent.mean[n](idx[i]);
      for (Index j = 0; j < r; ++j) {
        prec(i, j) = -2.0 * bank.lambda2[n](idx[i], idx[j]);
        cov(i, j) = latent.cov[n](idx[i], idx[j]);
      }
    }
    symmetrize(prec);
    const auto llt = robust_llt(prec, "site precision", n);
    const Vector resid = llt.solve(l1) - mu;
    // -E_q[log N(Y~ | u, V~)] with V~ = prec^{-1}.
    t.approx_term += 0.5 * (static_cast<double>(r) * kLog2Pi - log_det(llt)) +
                     0.5 * (resid.dot(prec * resid) + (prec.array() * cov.array()).sum());
  }
  return t;
}

double sparse_elbo(const LatentModel& model, const BlockBank& bank, const SparseProjection& proj,
                   const GridDataset& data, const Likelihood& lik) {
  const LatentMarginals lat = latent_posterior(model, block_to_pseudo(bank));
  return sparse_elbo_terms(lat, bank, proj, model.temporal.variance, data, lik).total();
}

Vector sparse_parameters(const Hyperparameters& hypers, const Matrix& inducing, bool with_noise,
                         bool with_inducing) {
  const Vector theta = hypers.to_theta(with_noise);
  if (!with_inducing) return theta;
  Vector out(theta.size() + inducing.size());
  out.head(theta.size()) = theta;
  for (Index i = 0; i < inducing.rows(); ++i) {
    for (Index j = 0; j < inducing.cols(); ++j) out(theta.size() + i * inducing.cols() + j) = inducing(i, j);
  }
  return out;
}

namespace {

struct SparseEvaluation {
  double objective = 0.0;
  LatentMarginals latent;
  SparseProjection proj;
  double variance = 1.0;
  Likelihood lik;
};

SparseEvaluation evaluate_sparse(const ModelConfig& config, const GridDataset& data,
                                 const Likelihood& base, const BlockBank& bank,
                                 const Vector& params, const Matrix& fixed_inducing,
                                 bool with_inducing) {
  const bool noise = is_gaussian(base);
  const Index dim = data.spatial_dim();
  const Hyperparameters h = Hyperparameters::from_theta(params, dim, noise);
  const Matrix z = with_inducing
                       ? unflatten_inducing(params, h.theta_size(noise), fixed_inducing.rows(), dim)
                       : fixed_inducing;
  SparseEvaluation ev;
  ev.lik = likelihood_with(base, h);
  ev.variance = h.variance;
  const LatentModel model = build_latent(config, h, z, data.times);
  ev.proj = build_projection(model.spatial, data.sites, z);
  ev.latent = latent_posterior(model, block_to_pseudo(bank));
  ev.objective = sparse_elbo_terms(ev.latent, bank, ev.proj, ev.variance, data, ev.lik).total();
  return ev;
}

}  // namespace

Vector sparse_hyper_grad(const ModelConfig& config, const BlockBank& bank, const GridDataset& data,
                         const Likelihood& lik, const Hyperparameters& hypers,
                         const Matrix& inducing, bool with_inducing, double rel_step) {
  const Vector params = sparse_parameters(hypers, inducing, is_gaussian(lik), with_inducing);
  return fd_gradient(
      [&](const Vector& p) {
        try {
          return evaluate_sparse(config, data, lik, bank, p, inducing, with_inducing).objective;
        } catch (const Error&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      },
      params, rel_step);
}

void sparse_fit_continue(SparseFitState& state, const GridDataset& data, const TrainConfig& train) {
  const bool noise = is_gaussian(state.likelihood);
  const bool with_z = train.optimize_inducing;
  Vector params = sparse_parameters(state.hypers, state.inducing, noise, with_z);
  const Likelihood base = state.likelihood;
  const Matrix fixed_z = state.inducing;
  detail::training_loop(
      state, params, state.bank, train,
      [&](const Vector& p, const BlockBank& bank) {
        return evaluate_sparse(state.config, data, base, bank, p, fixed_z, with_z);
      },
      [&](const BlockBank& bank, const SparseEvaluation& ev) {
        return sparse_cvi_step(bank, ev.latent, ev.proj, ev.variance, data, ev.lik, train.beta);
      });
  state.hypers = Hyperparameters::from_theta(params, data.spatial_dim(), noise);
  if (with_z) {
    state.inducing = unflatten_inducing(params, state.hypers.theta_size(noise), fixed_z.rows(),
                                        data.spatial_dim());
  }
  state.likelihood = likelihood_with(base, state.hypers);
}

SparseFitState sparse_fit(const GridDataset& data, const ModelConfig& config,
                          const Hyperparameters& init, const Likelihood& lik,
                          const Matrix& inducing, const TrainConfig& train) {
  lik.validate();
  if (inducing.cols() != data.spatial_dim()) {
    throw DimensionError("inducing locations do not match the spatial dimension");
  }
  SparseFitState state;
  state.config = config;
  state.hypers = init;
  if (is_gaussian(lik)) state.hypers.noise_variance = lik.noise_variance;
  state.likelihood = likelihood_with(lik, state.hypers);
  state.times = data.times;
  state.sites = data.sites;
  state.inducing = inducing;
  state.bank = BlockBank::zeros(data.num_times(), inducing.rows());
  sparse_fit_continue(state, data, train);
  return state;
}

Prediction predict_from_pseudo(const ModelConfig& config, const Hyperparameters& hypers,
                               const Matrix& points, const Vector& train_times,
                               const PseudoObservations& pseudo, const PredictionQuery& query) {
  if (query.times.size() != query.sites.rows()) {
    throw DimensionError("prediction query: times and sites differ in length");
  }
  if (query.sites.cols() != points.cols()) {
    throw DimensionError("prediction query: spatial dimension mismatch");
  }
  Prediction out{Vector(query.times.size()), Vector(query.times.size())};
  if (query.times.size() == 0) return out;
  const MergedTimes merged = merge_times(train_times, query.times);
  const LatentModel model = build_latent(config, hypers, points, merged.times);
  PseudoObservations obs = PseudoObservations::empty(model.num_steps());
  for (std::size_t i = 0; i < merged.train_steps.size(); ++i) obs.steps[merged.train_steps[i]] = pseudo.steps[i];
  const LatentMarginals lat = latent_posterior(model, obs);
  const SparseProjection proj = build_projection(model.spatial, query.sites, points);
  for (Index i = 0; i < query.times.size(); ++i) {
    const Index n = merged.query_steps[i];
    const SiteMoments s = sparse_marginal(proj, hypers.variance, lat.mean[n], lat.cov[n], i);
    out.mean(i) = s.mean;
    out.var(i) = s.var;
  }
  return out;
}

Prediction sparse_predict(const SparseFitState& state, const PredictionQuery& query) {
  return predict_from_pseudo(state.config, state.hypers, state.inducing, state.times,
                             block_to_pseudo(state.bank), query);
}

}  // namespace stgp
