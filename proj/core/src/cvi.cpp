#include "stgp/cvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stgp/errors.hpp"
#include "stgp/sparse.hpp"
#include "training_loop.hpp"

namespace stgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_shapes(const SiteBank& bank, const GridDataset& data) {
  if (bank.lambda1.rows() != data.num_times() || bank.lambda1.cols() != data.num_sites() ||
      bank.lambda2.rows() != data.num_times() || bank.lambda2.cols() != data.num_sites()) {
    throw DimensionError("site bank does not match the dataset grid");
  }
}

bool is_gaussian(const Likelihood& lik) { return lik.family == LikelihoodFamily::kGaussian; }

}  // namespace

SiteBank SiteBank::zeros(Index num_times, Index num_sites) {
  return {Matrix::Zero(num_times, num_sites), Matrix::Zero(num_times, num_sites)};
}

SiteMarginals site_marginals(const LatentMarginals& latent) {
  const Index nt = latent.num_steps();
  const Index g = nt > 0 ? latent.mean.front().size() : 0;
  SiteMarginals out{Matrix(nt, g), Matrix(nt, g)};
  for (Index n = 0; n < nt; ++n) {
    out.mean.row(n) = latent.mean[n].transpose();
    out.var.row(n) = latent.cov[n].diagonal().transpose();
  }
  return out;
}

PseudoObservations bank_to_pseudo(const SiteBank& bank) {
  const Index nt = bank.lambda1.rows();
  PseudoObservations out = PseudoObservations::empty(nt);
  for (Index n = 0; n < nt; ++n) {
    StepObservation& o = out.steps[n];
    for (Index k = 0; k < bank.lambda1.cols(); ++k) {
      if (bank.informative(n, k)) o.rows.push_back(k);
    }
    const Index r = static_cast<Index>(o.rows.size());
    o.mean.resize(r);
    o.cov = Matrix::Zero(r, r);
    for (Index i = 0; i < r; ++i) {
      const Index k = o.rows[i];
      const double v = -0.5 / bank.lambda2(n, k);
      o.cov(i, i) = v;
      o.mean(i) = v * bank.lambda1(n, k);
    }
  }
  return out;
}

SiteBank cvi_step(const SiteBank& bank, const SiteMarginals& marginals, const GridDataset& data,
                  const Likelihood& lik, double beta) {
  check_shapes(bank, data);
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("cvi_step: beta must lie in [0, 1]");
  SiteBank out = bank;
  if (beta == 0.0) return out;
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      if (!data.observed(n, k)) continue;
      const double m = marginals.mean(n, k);
      const ElikGrads g = elik_grads(lik, data.values(n, k), m, marginals.var(n, k));
      out.lambda1(n, k) = (1.0 - beta) * bank.lambda1(n, k) + beta * (g.dm - 2.0 * g.dv * m);
      out.lambda2(n, k) =
          std::min((1.0 - beta) * bank.lambda2(n, k) + beta * g.dv, -kPrecisionFloor);
    }
  }
  return out;
}

LatentMarginals posterior(const LatentModel& model, const SiteBank& bank) {
  return latent_posterior(model, bank_to_pseudo(bank));
}

ElboTerms elbo_terms(const LatentMarginals& latent, const SiteBank& bank, const GridDataset& data,
                     const Likelihood& lik) {
  check_shapes(bank, data);
  ElboTerms t;
  t.log_lik = latent.log_lik;
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      const double m = latent.mean[n](k);
      const double v = latent.cov[n](k, k);
      if (data.observed(n, k)) t.expected_log_lik += expected_log_lik(lik, data.values(n, k), m, v);
      if (bank.informative(n, k)) {
        const double vt = -0.5 / bank.lambda2(n, k);
        const double r = vt * bank.lambda1(n, k) - m;
        t.approx_term += 0.5 * (kLog2Pi + std::log(vt)) + (r * r + v) / (2.0 * vt);
      }
    }
  }
  return t;
}

double elbo(const LatentModel& model, const SiteBank& bank, const GridDataset& data,
            const Likelihood& lik) {
  return elbo_terms(posterior(model, bank), bank, data, lik).total();
}

Likelihood likelihood_with(const Likelihood& lik, const Hyperparameters& hypers) {
  Likelihood out = lik;
  if (is_gaussian(lik)) out.noise_variance = hypers.noise_variance;
  return out;
}

double TrainingState::seconds_per_iteration() const {
  if (iteration_seconds.empty()) return 0.0;
  const std::size_t skip = iteration_seconds.size() > 1 ? 1 : 0;
  const double total =
      std::accumulate(iteration_seconds.begin() + static_cast<std::ptrdiff_t>(skip),
                      iteration_seconds.end(), 0.0);
  return total / static_cast<double>(iteration_seconds.size() - skip);
}

namespace {

struct FullEvaluation {
  double objective = 0.0;
  SiteMarginals marginals;
  Likelihood lik;
};

FullEvaluation evaluate_full(const ModelConfig& config, const GridDataset& data,
                             const Likelihood& base, const SiteBank& bank, const Vector& theta) {
  const bool noise = is_gaussian(base);
  const Hyperparameters h = Hyperparameters::from_theta(theta, data.spatial_dim(), noise);
  FullEvaluation ev;
  ev.lik = likelihood_with(base, h);
  const LatentModel model = build_latent(config, h, data.sites, data.times);
  const LatentMarginals lat = posterior(model, bank);
  ev.objective = elbo_terms(lat, bank, data, ev.lik).total();
  ev.marginals = site_marginals(lat);
  return ev;
}

}  // namespace

Vector hyper_grad(const ModelConfig& config, const SiteBank& bank, const GridDataset& data,
                  const Likelihood& lik, const Hyperparameters& hypers, double rel_step) {
  const Vector theta = hypers.to_theta(is_gaussian(lik));
  return fd_gradient(
      [&](const Vector& p) {
        try {
          return evaluate_full(config, data, lik, bank, p).objective;
        } catch (const Error&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      },
      theta, rel_step);
}

void fit_continue(FitState& state, const GridDataset& data, const TrainConfig& train) {
  check_shapes(state.bank, data);
  const bool noise = is_gaussian(state.likelihood);
  Vector theta = state.hypers.to_theta(noise);
  const Likelihood base = state.likelihood;
  detail::training_loop(
      state, theta, state.bank, train,
      [&](const Vector& p, const SiteBank& bank) {
        return evaluate_full(state.config, data, base, bank, p);
      },
      [&](const SiteBank& bank, const FullEvaluation& ev) {
        return cvi_step(bank, ev.marginals, data, ev.lik, train.beta);
      });
  state.hypers = Hyperparameters::from_theta(theta, data.spatial_dim(), noise);
  state.likelihood = likelihood_with(base, state.hypers);
}

FitState fit(const GridDataset& data, const ModelConfig& config, const Hyperparameters& init,
             const Likelihood& lik, const TrainConfig& train) {
  lik.validate();
  FitState state;
  state.config = config;
  state.hypers = init;
  // The likelihood carries the initial noise variance.
  if (is_gaussian(lik)) state.hypers.noise_variance = lik.noise_variance;
  state.likelihood = likelihood_with(lik, state.hypers);
  state.times = data.times;
  state.sites = data.sites;
  state.bank = SiteBank::zeros(data.num_times(), data.num_sites());
  fit_continue(state, data, train);
  return state;
}

FitState mf_fit(const GridDataset& data, ModelConfig config, const Hyperparameters& init,
                const Likelihood& lik, const TrainConfig& train) {
  config.mean_field = true;
  return fit(data, config, init, lik, train);
}

Prediction predict(const FitState& state, const PredictionQuery& query) {
  return predict_from_pseudo(state.config, state.hypers, state.sites, state.times,
                             bank_to_pseudo(state.bank), query);
}

}  // namespace stgp
