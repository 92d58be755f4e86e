#include "dense_oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stgp::oracle {

double matern(MaternOrder order, double r) {
  switch (order) {
    case MaternOrder::kHalf:
      return std::exp(-r);
    case MaternOrder::kThreeHalves:
      return (1.0 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
    case MaternOrder::kFiveHalves:
      return (1.0 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
  }
  throw std::invalid_argument("oracle: unknown Matern order");
}

double DenseKernel::operator()(double t1, const Vector& s1, double t2, const Vector& s2) const {
  double r2 = 0.0;
  for (Index d = 0; d < s1.size(); ++d) {
    const double z = (s1(d) - s2(d)) / lengthscale_s(d);
    r2 += z * z;
  }
  return variance * matern(temporal, std::abs(t1 - t2) / lengthscale_t) *
         matern(spatial, std::sqrt(r2));
}

Inputs grid_inputs(const Vector& times, const Matrix& sites) {
  Inputs x;
  const Index n = times.size() * sites.rows();
  x.t.resize(n);
  x.s.resize(n, sites.cols());
  Index i = 0;
  for (Index a = 0; a < times.size(); ++a) {
    for (Index b = 0; b < sites.rows(); ++b, ++i) {
      x.t(i) = times(a);
      x.s.row(i) = sites.row(b);
    }
  }
  return x;
}

Inputs select(const Inputs& x, const std::vector<Index>& idx) {
  Inputs out;
  out.t.resize(static_cast<Index>(idx.size()));
  out.s.resize(static_cast<Index>(idx.size()), x.s.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.t(static_cast<Index>(i)) = x.t(idx[i]);
    out.s.row(static_cast<Index>(i)) = x.s.row(idx[i]);
  }
  return out;
}

Matrix gram(const DenseKernel& k, const Inputs& a, const Inputs& b) {
  Matrix out(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i) {
    for (Index j = 0; j < b.size(); ++j) {
      out(i, j) = k(a.t(i), a.s.row(i).transpose(), b.t(j), b.s.row(j).transpose());
    }
  }
  return out;
}

double dense_log_normal(const Vector& y, const Matrix& c) {
  const Eigen::FullPivLU<Matrix> lu(c);
  const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
  const Vector alpha = lu.solve(y);
  return -0.5 * (y.dot(alpha) + logdet + static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi));
}

RegressionResult dense_regression(const Matrix& k, const std::vector<Index>& observed,
                                  const Vector& y, const Matrix& v) {
  const Index n = k.rows();
  const Index r = static_cast<Index>(observed.size());
  Matrix k_no(n, r);
  Matrix k_oo(r, r);
  for (Index j = 0; j < r; ++j) {
    k_no.col(j) = k.col(observed[j]);
    for (Index i = 0; i < r; ++i) k_oo(i, j) = k(observed[i], observed[j]);
  }
  RegressionResult out;
  if (r == 0) {
    out.mean = Vector::Zero(n);
    out.cov = k;
    out.log_ml = 0.0;
    return out;
  }
  const Matrix c = k_oo + v;
  const Eigen::FullPivLU<Matrix> lu(c);
  out.mean = k_no * lu.solve(y);
  out.cov = k - k_no * lu.solve(k_no.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.log_ml = dense_log_normal(y, c);
  return out;
}

DenseVgp dense_vgp_init(const Matrix& prior_cov) {
  const Index n = prior_cov.rows();
  return {prior_cov, Vector::Zero(n), Matrix::Zero(n, n)};
}

// With lambda2 = -K^{-1}/2 + site2, P = (K^{-1} - 2 site2)^{-1} = (I - 2 K site2)^{-1} K.
Matrix DenseVgp::cov() const {
  const Index n = prior_cov.rows();
  const Matrix a = Matrix::Identity(n, n) - 2.0 * prior_cov * site2;
  Matrix p = a.fullPivLu().solve(prior_cov);
  return 0.5 * (p + p.transpose());
}

// m = P lambda1 with lambda1 = 0 + site1 for a zero-mean prior.
Vector DenseVgp::mean() const { return cov() * site1; }

DenseVgp dense_vgp_natgrad_step(const DenseVgp& q, const std::vector<Index>& observed,
                                const GradientFn& grad, double beta) {
  const Index n = q.prior_cov.rows();
  const Vector m = q.mean();
  const Matrix p = q.cov();
  // Gradient of the expected log likelihood with respect to (mu1, mu2) =
  // (m, m m^T + P), assembled on the full N x N matrix.
  Vector g1 = Vector::Zero(n);
  Matrix g2 = Matrix::Zero(n, n);
  for (Index i : observed) {
    const SiteGradient g = grad(i, m(i), p(i, i));
    g1(i) = g.dm - 2.0 * g.dv * m(i);
    g2(i, i) = g.dv;
  }
  DenseVgp out = q;
  out.site1 = (1.0 - beta) * q.site1 + beta * g1;
  out.site2 = (1.0 - beta) * q.site2 + beta * g2;
  return out;
}

SvgpResult dense_svgp(const DenseKernel& k, const Inputs& x, const Vector& y,
                      double noise_variance, const Inputs& u) {
  const Matrix kuu = gram(k, u, u);
  const Matrix kuf = gram(k, u, x);
  const Index n = x.size();
  Vector kff_diag(n);
  for (Index i = 0; i < n; ++i) kff_diag(i) = k(x.t(i), x.s.row(i).transpose(), x.t(i), x.s.row(i).transpose());

  const Eigen::FullPivLU<Matrix> kuu_lu(kuu);
  const Matrix a = kuu + kuf * kuf.transpose() / noise_variance;
  const Eigen::FullPivLU<Matrix> a_lu(a);
  SvgpResult out;
  out.cov_u = kuu * a_lu.solve(kuu);
  out.cov_u = 0.5 * (out.cov_u + out.cov_u.transpose());
  out.mean_u = kuu * a_lu.solve(kuf * y) / noise_variance;

  const Matrix qff = kuf.transpose() * kuu_lu.solve(kuf);
  const Matrix c = qff + noise_variance * Matrix::Identity(n, n);
  const double trace = (kff_diag - qff.diagonal()).sum();
  out.elbo = dense_log_normal(y, c) - 0.5 * trace / noise_variance;
  return out;
}

MarginalMoments dense_conditional_marginals(const DenseKernel& k, const Inputs& x,
                                            const Inputs& u, const Vector& mean_u,
                                            const Matrix& cov_u) {
  const Matrix kuu = gram(k, u, u);
  const Matrix kux = gram(k, u, x);
  const Matrix a = kuu.fullPivLu().solve(kux);  // Kuu^{-1} Kux
  MarginalMoments out;
  out.mean = a.transpose() * mean_u;
  out.var.resize(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double kxx = k(x.t(i), x.s.row(i).transpose(), x.t(i), x.s.row(i).transpose());
    out.var(i) = kxx - kux.col(i).dot(a.col(i)) + a.col(i).dot(cov_u * a.col(i));
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

Matrix taylor_expm(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.1) ++squarings;
  const Matrix x = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace stgp::oracle
