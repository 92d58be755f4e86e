#include "stgp/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stgp/errors.hpp"
#include "stgp/quadrature.hpp"

namespace stgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_variance(double v) {
  if (!(v > 0.0)) throw DomainError("marginal variance must be positive, got " + std::to_string(v));
}

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic tail: log Phi(z) ~ log phi(z) - log(-z).
  return -0.5 * z * z - 0.5 * kLog2Pi - std::log(-z);
}

// phi(z) / Phi(z), evaluated in log space to survive the far left tail.
double inverse_mills(double z) {
  return std::exp(-0.5 * z * z - 0.5 * kLog2Pi - log_normal_cdf(z));
}

// First and second derivatives of log p(y | f) in f.
struct Derivs {
  double d1;
  double d2;
};

Derivs log_density_derivs(const Likelihood& lik, double y, double f) {
  switch (lik.family) {
    case LikelihoodFamily::kGaussian:
      return {(y - f) / lik.noise_variance, -1.0 / lik.noise_variance};
    case LikelihoodFamily::kPoisson: {
      const double rate = lik.bin_area * std::exp(f);
      return {y - rate, -rate};
    }
    case LikelihoodFamily::kBernoulliProbit: {
      const double s = y > 0.5 ? 1.0 : -1.0;
      const double z = s * f;
      const double r = inverse_mills(z);
      return {s * r, -r * (z + r)};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

LikelihoodFamily parse_likelihood_family(std::string_view name) {
  if (name == "gaussian") return LikelihoodFamily::kGaussian;
  if (name == "poisson") return LikelihoodFamily::kPoisson;
  if (name == "bernoulli" || name == "probit" || name == "bernoulli_probit") {
    return LikelihoodFamily::kBernoulliProbit;
  }
  throw DomainError("unknown likelihood '" + std::string(name) + "'");
}

std::string_view to_string(LikelihoodFamily family) {
  switch (family) {
    case LikelihoodFamily::kGaussian: return "gaussian";
    case LikelihoodFamily::kPoisson: return "poisson";
    case LikelihoodFamily::kBernoulliProbit: return "bernoulli_probit";
  }
  return "unknown";
}

Likelihood Likelihood::gaussian(double noise_variance) {
  Likelihood lik;
  lik.family = LikelihoodFamily::kGaussian;
  lik.noise_variance = noise_variance;
  lik.validate();
  return lik;
}

Likelihood Likelihood::poisson(double bin_area) {
  Likelihood lik;
  lik.family = LikelihoodFamily::kPoisson;
  lik.bin_area = bin_area;
  lik.validate();
  return lik;
}

Likelihood Likelihood::bernoulli_probit() {
  Likelihood lik;
  lik.family = LikelihoodFamily::kBernoulliProbit;
  return lik;
}

void Likelihood::validate() const {
  if (family == LikelihoodFamily::kGaussian && !(noise_variance > 0.0)) {
    throw DomainError("gaussian likelihood needs noise variance > 0");
  }
  if (family == LikelihoodFamily::kPoisson && !(bin_area > 0.0 && std::isfinite(bin_area))) {
    throw DomainError("poisson likelihood needs a finite bin area > 0");
  }
  if (train_order < 1 || nlpd_order < 1) throw DomainError("quadrature order must be positive");
}

double log_density(const Likelihood& lik, double y, double f) {
  switch (lik.family) {
    case LikelihoodFamily::kGaussian: {
      const double r = y - f;
      return -0.5 * (kLog2Pi + std::log(lik.noise_variance) + r * r / lik.noise_variance);
    }
    case LikelihoodFamily::kPoisson:
      return y * (f + std::log(lik.bin_area)) - lik.bin_area * std::exp(f) - std::lgamma(y + 1.0);
    case LikelihoodFamily::kBernoulliProbit:
      return log_normal_cdf(y > 0.5 ? f : -f);
  }
  return 0.0;
}

double expected_log_lik(const Likelihood& lik, double y, double m, double v) {
  check_variance(v);
  if (lik.family == LikelihoodFamily::kGaussian && !lik.force_quadrature) {
    const double r = y - m;
    return -0.5 * (kLog2Pi + std::log(lik.noise_variance)) - (r * r + v) / (2.0 * lik.noise_variance);
  }
  const auto& rule = gauss_hermite(lik.train_order);
  return gaussian_expectation(rule, m, v, [&](double f) { return log_density(lik, y, f); });
}

ElikGrads elik_grads(const Likelihood& lik, double y, double m, double v) {
  check_variance(v);
  if (lik.family == LikelihoodFamily::kGaussian && !lik.force_quadrature) {
    return {(y - m) / lik.noise_variance, -0.5 / lik.noise_variance};
  }
  // dE/dm = E[d log p / df] and dE/dv = E[d^2 log p / df^2] / 2.
  const auto& rule = gauss_hermite(lik.train_order);
  const double scale = std::sqrt(2.0 * v);
  double d1 = 0.0;
  double d2 = 0.0;
  for (Index i = 0; i < rule.order(); ++i) {
    const Derivs d = log_density_derivs(lik, y, m + scale * rule.nodes(i));
    d1 += rule.weights(i) * d.d1;
    d2 += rule.weights(i) * d.d2;
  }
  const double norm = 1.0 / std::sqrt(std::numbers::pi);
  return {d1 * norm, 0.5 * d2 * norm};
}

double predictive_mean(const Likelihood& lik, double m, double v) {
  switch (lik.family) {
    case LikelihoodFamily::kGaussian:
      return m;
    case LikelihoodFamily::kPoisson:
      return lik.bin_area * std::exp(m + 0.5 * v);
    case LikelihoodFamily::kBernoulliProbit:
      return 0.5 * std::erfc(-m / std::sqrt(2.0 * (1.0 + v)));
  }
  return m;
}

double nlpd(const Likelihood& lik, double y, double m, double v) {
  check_variance(v);
  if (lik.family == LikelihoodFamily::kGaussian && !lik.force_quadrature) {
    const double s = v + lik.noise_variance;
    const double r = y - m;
    return 0.5 * (kLog2Pi + std::log(s) + r * r / s);
  }
  const auto& rule = gauss_hermite(lik.nlpd_order);
  const double scale = std::sqrt(2.0 * v);
  Vector terms(rule.order());
  for (Index i = 0; i < rule.order(); ++i) {
    terms(i) = std::log(rule.weights(i)) + log_density(lik, y, m + scale * rule.nodes(i));
  }
  const double top = terms.maxCoeff();
  const double lse = top + std::log((terms.array() - top).exp().sum());
  return -(lse - 0.5 * std::log(std::numbers::pi));
}

}  // namespace stgp
