#include "stgp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stgp/errors.hpp"

namespace stgp {

void AdamState::reset(Index dim) {
  first_moment = Vector::Zero(dim);
  second_moment = Vector::Zero(dim);
  steps = 0;
}

void adam_ascent_step(Vector& params, const Vector& grad, AdamState& state,
                      const AdamConfig& config) {
  if (state.first_moment.size() != params.size()) state.reset(params.size());
  if (grad.size() != params.size()) throw DimensionError("adam: gradient size mismatch");
  ++state.steps;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grad;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * grad.array().square().matrix();
  const double c1 = 1.0 - std::pow(config.beta1, state.steps);
  const double c2 = 1.0 - std::pow(config.beta2, state.steps);
  params.array() += config.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

Vector fd_gradient(const std::function<double(const Vector&)>& objective, const Vector& x,
                   double rel_step) {
  Vector grad(x.size());
  Vector probe = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + h;
    const double up = objective(probe);
    probe(j) = x(j) - h;
    const double down = objective(probe);
    probe(j) = x(j);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw GradientError("non-finite objective while differencing coordinate " + std::to_string(j),
                          j);
    }
    grad(j) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace stgp
