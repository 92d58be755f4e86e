#include "stgp/synthesize.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stgp/errors.hpp"
#include "stgp/gaussian.hpp"

namespace stgp {

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "pseudo_periodic") return SynthKind::kPseudoPeriodic;
  if (name == "lgcp_counts") return SynthKind::kLgcpCounts;
  throw DomainError("unknown synthetic kind '" + std::string(name) + "'");
}

PseudoPeriodic::PseudoPeriodic(std::mt19937_64& rng) {
  for (int i = 3; i <= 7; ++i) {
    std::uniform_real_distribution<double> u(0.0, std::ldexp(1.0, i));
    shifts_[i - 3] = u(rng);
  }
}

PseudoPeriodic::PseudoPeriodic(const double (&shifts)[5]) {
  for (int i = 0; i < 5; ++i) shifts_[i] = shifts[i];
}

double PseudoPeriodic::phi(double t, double c) const {
  double acc = 0.0;
  for (int i = 3; i <= 7; ++i) {
    const double freq = std::ldexp(1.0, 2 + i) + shifts_[i - 3];
    acc += std::ldexp(1.0, -i) * std::sin(2.0 * std::numbers::pi * freq * t * c);
  }
  return acc;
}

double PseudoPeriodic::operator()(double t, double r) const {
  return 50.0 * phi(t, 3.0) * std::sin(4.0 * std::numbers::pi * r);
}

Vector synth_times(const SynthOptions& opts) {
  if (opts.num_times < 1) throw DomainError("synthesize: need at least one time step");
  if (opts.num_times == 1) return Vector::Constant(1, opts.t_start);
  if (!(opts.t_end > opts.t_start)) throw DomainError("synthesize: empty time span");
  return Vector::LinSpaced(opts.num_times, opts.t_start, opts.t_end);
}

Matrix synth_sites(const SynthOptions& opts) {
  if (opts.num_sites < 1) throw DomainError("synthesize: need at least one site");
  if (opts.num_sites == 1) return Matrix::Constant(1, 1, 0.5);
  return Vector::LinSpaced(opts.num_sites, 0.0, 1.0);
}

Matrix pseudo_periodic_grid(const PseudoPeriodic& fn, const Vector& times, const Matrix& sites) {
  Matrix f(times.size(), sites.rows());
  for (Index n = 0; n < times.size(); ++n) {
    for (Index k = 0; k < sites.rows(); ++k) f(n, k) = fn(times(n), sites(k, 0));
  }
  return f;
}

GridDataset synthesize(const SynthOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  GridDataset ds;
  ds.times = synth_times(opts);
  ds.sites = synth_sites(opts);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (opts.kind == SynthKind::kPseudoPeriodic) {
    const PseudoPeriodic fn(rng);
    ds.values = pseudo_periodic_grid(fn, ds.times, ds.sites);
    const double sd = std::sqrt(opts.noise_variance);
    for (Index n = 0; n < ds.num_times(); ++n) {
      for (Index k = 0; k < ds.num_sites(); ++k) ds.values(n, k) += sd * normal(rng);
    }
    return ds;
  }
  // Exact draw of the separable GP through its state-space form.
  const MarkovKernelSS kt = build_temporal_ss(opts.temporal_family, opts.variance, opts.lengthscale_t);
  const SpatialKernel ks{opts.spatial_family, Vector::Constant(1, opts.lengthscale_s)};
  const DiscreteSTModel model = assemble_full(kt, ks, ds.sites, ds.times);
  const Index d = model.state_dim();
  Vector x = Vector::Zero(d);
  ds.values.resize(ds.num_times(), ds.num_sites());
  for (Index n = 0; n < ds.num_times(); ++n) {
    Vector z(d);
    for (Index i = 0; i < d; ++i) z(i) = normal(rng);
    x = model.transitions[n] * x;
    if (model.noises[n].squaredNorm() > 0.0) x += cholesky_factor(model.noises[n], "Q") * z;
    const Vector f = model.measurement * x;
    for (Index k = 0; k < ds.num_sites(); ++k) {
      std::poisson_distribution<long> pois(opts.bin_area * std::exp(f(k) + opts.log_rate_offset));
      ds.values(n, k) = static_cast<double>(pois(rng));
    }
  }
  return ds;
}

}  // namespace stgp
