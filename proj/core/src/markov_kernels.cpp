#include "stgp/markov_kernels.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "stgp/kronecker.hpp"

namespace stgp {

MaternOrder parse_matern_order(std::string_view name) {
  if (name == "matern12" || name == "1/2" || name == "matern-1/2") return MaternOrder::kHalf;
  if (name == "matern32" || name == "3/2" || name == "matern-3/2") return MaternOrder::kThreeHalves;
  if (name == "matern52" || name == "5/2" || name == "matern-5/2") return MaternOrder::kFiveHalves;
  throw UnsupportedKernelError("unsupported kernel family '" + std::string(name) + "'");
}

std::string_view to_string(MaternOrder order) {
  switch (order) {
    case MaternOrder::kHalf: return "matern12";
    case MaternOrder::kThreeHalves: return "matern32";
    case MaternOrder::kFiveHalves: return "matern52";
  }
  return "unknown";
}

MarkovKernelSS build_temporal_ss(MaternOrder family, double variance, double lengthscale) {
  if (!(variance > 0.0) || !(lengthscale > 0.0)) {
    throw DomainError("temporal kernel needs variance > 0 and lengthscale > 0");
  }
  MarkovKernelSS k;
  k.family = family;
  k.variance = variance;
  k.lengthscale = lengthscale;
  switch (family) {
    case MaternOrder::kHalf:
      k.feedback = Matrix::Constant(1, 1, -1.0 / lengthscale);
      k.noise_effect = Matrix::Ones(1, 1);
      k.spectral_density = 2.0 * variance / lengthscale;
      k.measurement = Matrix::Ones(1, 1);
      k.stationary_cov = Matrix::Constant(1, 1, variance);
      break;
    case MaternOrder::kThreeHalves: {
      const double lam = std::sqrt(3.0) / lengthscale;
      k.feedback.resize(2, 2);
      k.feedback << 0.0, 1.0, -lam * lam, -2.0 * lam;
      k.noise_effect = Matrix::Zero(2, 1);
      k.noise_effect(1, 0) = 1.0;
      k.spectral_density = 4.0 * lam * lam * lam * variance;
      k.measurement = Matrix::Zero(1, 2);
      k.measurement(0, 0) = 1.0;
      k.stationary_cov = Matrix::Zero(2, 2);
      k.stationary_cov(0, 0) = variance;
      k.stationary_cov(1, 1) = lam * lam * variance;
      break;
    }
    case MaternOrder::kFiveHalves: {
      const double lam = std::sqrt(5.0) / lengthscale;
      const double lam2 = lam * lam;
      k.feedback.resize(3, 3);
      k.feedback << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -lam2 * lam, -3.0 * lam2, -3.0 * lam;
      k.noise_effect = Matrix::Zero(3, 1);
      k.noise_effect(2, 0) = 1.0;
      k.spectral_density = 16.0 / 3.0 * variance * std::pow(lam, 5);
      k.measurement = Matrix::Zero(1, 3);
      k.measurement(0, 0) = 1.0;
      const double kappa = lam2 * variance / 3.0;
      k.stationary_cov.resize(3, 3);
      k.stationary_cov << variance, 0.0, -kappa, 0.0, kappa, 0.0, -kappa, 0.0,
          lam2 * lam2 * variance;
      break;
    }
    default:
      throw UnsupportedKernelError("unsupported temporal kernel family");
  }
  return k;
}

double matern_correlation(MaternOrder family, double r) {
  switch (family) {
    case MaternOrder::kHalf:
      return std::exp(-r);
    case MaternOrder::kThreeHalves: {
      const double a = std::sqrt(3.0) * r;
      return (1.0 + a) * std::exp(-a);
    }
    case MaternOrder::kFiveHalves: {
      const double a = std::sqrt(5.0) * r;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  throw UnsupportedKernelError("unsupported kernel family");
}

double temporal_kernel(const MarkovKernelSS& k, double tau) {
  return k.variance * matern_correlation(k.family, std::abs(tau) / k.lengthscale);
}

Matrix expm(const Matrix& a) { return a.exp(); }

DiscreteTransition discretize(const MarkovKernelSS& k, double dt) {
  if (!(dt >= 0.0)) throw DomainError("discretize: step must be non-negative");
  const Index d = k.state_dim();
  DiscreteTransition out;
  switch (k.family) {
    case MaternOrder::kHalf:
      out.transition = Matrix::Constant(1, 1, std::exp(-dt / k.lengthscale));
      break;
    case MaternOrder::kThreeHalves: {
      const double lam = std::sqrt(3.0) / k.lengthscale;
      const double e = std::exp(-lam * dt);
      out.transition.resize(2, 2);
      out.transition << e * (1.0 + lam * dt), e * dt, -e * lam * lam * dt, e * (1.0 - lam * dt);
      break;
    }
    default:
      out.transition = dt == 0.0 ? Matrix(Matrix::Identity(d, d)) : expm(k.feedback * dt);
      break;
  }
  if (dt == 0.0) {
    out.transition = Matrix::Identity(d, d);
    out.process_noise = Matrix::Zero(d, d);
    return out;
  }
  out.process_noise =
      k.stationary_cov - out.transition * k.stationary_cov * out.transition.transpose();
  symmetrize(out.process_noise);
  return out;
}

double SpatialKernel::operator()(const Eigen::Ref<const Vector>& a,
                                 const Eigen::Ref<const Vector>& b) const {
  const double r = ((a - b).array() / lengthscales.array()).matrix().norm();
  return matern_correlation(family, r);
}

Matrix spatial_gram(const SpatialKernel& k, const Matrix& s, const Matrix& s_prime) {
  if (s.cols() != s_prime.cols() || s.cols() != k.lengthscales.size()) {
    throw DimensionError("spatial_gram: spatial dimensionality mismatch");
  }
  const Matrix a = s.array().rowwise() / k.lengthscales.transpose().array();
  const Matrix b = s_prime.array().rowwise() / k.lengthscales.transpose().array();
  Matrix out(s.rows(), s_prime.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      out(i, j) = matern_correlation(k.family, (a.row(i) - b.row(j)).norm());
    }
  }
  return out;
}

DiscreteSTModel assemble_from_gram(const MarkovKernelSS& kt, const Matrix& gram,
                                   const Vector& times) {
  const Index nt = times.size();
  if (nt == 0) throw DomainError("assemble: no time steps");
  for (Index n = 1; n < nt; ++n) {
    if (!(times(n) > times(n - 1))) {
      throw DomainError("assemble: timestamps must be strictly increasing (merge duplicates first)");
    }
  }
  const Index g = gram.rows();
  const Index dt_dim = kt.state_dim();
  const Matrix eye_g = Matrix::Identity(g, g);

  DiscreteSTModel m;
  m.temporal = kt;
  m.spatial_gram = gram;
  m.times = times;
  m.measurement = kron_dense(eye_g, kt.measurement);
  m.initial_mean = Vector::Zero(g * dt_dim);
  m.transitions.reserve(nt);
  m.noises.reserve(nt);
  m.temporal_transitions.reserve(nt);
  m.temporal_noises.reserve(nt);

  m.temporal_transitions.push_back(Matrix::Identity(dt_dim, dt_dim));
  m.temporal_noises.push_back(kt.stationary_cov);
  for (Index n = 1; n < nt; ++n) {
    auto step = discretize(kt, times(n) - times(n - 1));
    m.temporal_transitions.push_back(std::move(step.transition));
    m.temporal_noises.push_back(std::move(step.process_noise));
  }
  for (Index n = 0; n < nt; ++n) {
    m.transitions.push_back(kron_dense(eye_g, m.temporal_transitions[n]));
    Matrix q = kron_dense(gram, m.temporal_noises[n]);
    symmetrize(q);
    m.noises.push_back(std::move(q));
  }
  return m;
}

DiscreteSTModel assemble_full(const MarkovKernelSS& kt, const SpatialKernel& ks, const Matrix& s,
                              const Vector& times) {
  return assemble_from_gram(kt, spatial_gram(ks, s, s), times);
}

DiscreteSTModel assemble_sparse(const MarkovKernelSS& kt, const SpatialKernel& ks,
                                const Matrix& z, const Vector& times) {
  return assemble_from_gram(kt, spatial_gram(ks, z, z), times);
}

}  // namespace stgp
