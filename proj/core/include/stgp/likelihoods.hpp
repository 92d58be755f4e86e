#pragma once

#include <string_view>

#include "stgp/types.hpp"

namespace stgp {

enum class LikelihoodFamily { kGaussian, kPoisson, kBernoulliProbit };

LikelihoodFamily parse_likelihood_family(std::string_view name);
std::string_view to_string(LikelihoodFamily family);

/// Observation model p(y | f) applied independently per site.
///
/// Poisson uses the exponential link with a bin area a > 0, so the rate is
/// a * exp(f). Bernoulli-probit is experimental; y is coded 0/1.
struct Likelihood {
  LikelihoodFamily family = LikelihoodFamily::kGaussian;
  double noise_variance = 1.0;  // Gaussian only
  double bin_area = 1.0;        // Poisson only
  int train_order = 20;         // quadrature points for E[log p] and its gradients
  int nlpd_order = 100;         // quadrature points for predictive densities
  bool force_quadrature = false;  // evaluate Gaussian terms by quadrature as well

  static Likelihood gaussian(double noise_variance);
  static Likelihood poisson(double bin_area = 1.0);
  static Likelihood bernoulli_probit();

  bool conjugate() const { return family == LikelihoodFamily::kGaussian; }
  /// Throws DomainError on an invalid parameter.
  void validate() const;
};

/// log p(y | f).
double log_density(const Likelihood& lik, double y, double f);

/// E_{N(f|m,v)}[log p(y | f)]; v must be positive.
double expected_log_lik(const Likelihood& lik, double y, double m, double v);

struct ElikGrads {
  double dm = 0.0;  // dE/dm
  double dv = 0.0;  // dE/dv
};

/// Gradients of expected_log_lik with respect to the marginal mean and variance.
ElikGrads elik_grads(const Likelihood& lik, double y, double m, double v);

/// Mean of y under the predictive distribution with N(f | m, v); v may be zero.
double predictive_mean(const Likelihood& lik, double m, double v);

/// -log of the predictive density of y under N(f | m, v).
double nlpd(const Likelihood& lik, double y, double m, double v);

}  // namespace stgp
