#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "stgp/dataset.hpp"
#include "stgp/markov_kernels.hpp"

namespace stgp {

enum class SynthKind { kPseudoPeriodic, kLgcpCounts };

SynthKind parse_synth_kind(std::string_view name);

/// phi(t, c) = sum_{i=3}^{7} 2^{-i} sin(2 pi (2^{2+i} + s_i) t c) with s_i ~ U(0, 2^i),
/// and f(t, r) = 50 phi(t, 3) sin(4 pi r).
class PseudoPeriodic {
 public:
  explicit PseudoPeriodic(std::mt19937_64& rng);
  PseudoPeriodic(const double (&shifts)[5]);

  double phi(double t, double c) const;
  double operator()(double t, double r) const;
  const double* shifts() const { return shifts_; }

 private:
  double shifts_[5];
};

struct SynthOptions {
  SynthKind kind = SynthKind::kPseudoPeriodic;
  Index num_times = 100;
  Index num_sites = 10;
  std::uint64_t seed = 0;
  double t_start = 0.0;
  double t_end = 1.0;
  double noise_variance = 0.01;  // pseudo-periodic observation noise
  // Log-rate GP for the count data.
  MaternOrder temporal_family = MaternOrder::kThreeHalves;
  MaternOrder spatial_family = MaternOrder::kThreeHalves;
  double variance = 1.0;
  double lengthscale_t = 0.2;
  double lengthscale_s = 0.3;
  double log_rate_offset = 0.0;
  double bin_area = 1.0;
};

/// Evenly spaced times on [t_start, t_end] and sites r on [0, 1] (the midpoint when N_s = 1).
Vector synth_times(const SynthOptions& opts);
Matrix synth_sites(const SynthOptions& opts);

/// Fully observed dataset; byte-identical for a fixed seed.
GridDataset synthesize(const SynthOptions& opts);

/// Noise-free pseudo-periodic values at (times x sites) for a given draw.
Matrix pseudo_periodic_grid(const PseudoPeriodic& fn, const Vector& times, const Matrix& sites);

}  // namespace stgp
