#pragma once

#include <functional>

#include "stgp/types.hpp"

namespace stgp {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  int steps = 0;

  void reset(Index dim);
};

/// One bias-corrected Adam step that increases the objective (gradient ascent).
void adam_ascent_step(Vector& params, const Vector& grad, AdamState& state, const AdamConfig& config);

/// Central finite-difference gradient with per-coordinate step
/// rel_step * max(1, |x_j|). Throws GradientError naming the first coordinate
/// whose probes produce a non-finite objective.
Vector fd_gradient(const std::function<double(const Vector&)>& objective, const Vector& x,
                   double rel_step = 1e-4);

}  // namespace stgp
