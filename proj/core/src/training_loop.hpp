#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "stgp/cvi.hpp"
#include "stgp/errors.hpp"
#include "stgp/optimizer.hpp"

namespace stgp::detail {

// Drives the alternating site / hyperparameter iterations shared by every model variant.
//
// evaluate(params, bank) returns an object with `.objective` and whatever the
// site step needs; step(bank, evaluation) returns the updated bank.
template <class Bank, class Evaluate, class Step>
void training_loop(TrainingState& state, Vector& params, Bank& bank, const TrainConfig& train,
                   Evaluate&& evaluate, Step&& step) {
  if (!(train.beta >= 0.0 && train.beta <= 1.0)) {
    throw DomainError("natural-gradient step must lie in [0, 1]");
  }
  if (!(train.rho >= 0.0)) throw DomainError("hyperparameter learning rate must be >= 0");
  if (train.iterations < 0) throw DomainError("iteration count must be >= 0");

  auto probe = [&](const Vector& p) {
    try {
      return evaluate(p, bank).objective;
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto current = evaluate(params, bank);
  AdamConfig adam = train.adam;
  adam.learning_rate = train.rho;

  for (int it = 0; it < train.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    if (train.beta > 0.0) bank = step(bank, current);
    if (train.rho > 0.0) {
      const Vector grad = fd_gradient(probe, params, train.fd_step);
      adam_ascent_step(params, grad, state.adam, adam);
    }
    current = evaluate(params, bank);
    ++state.iteration;
    state.elbo_trace.push_back(current.objective);
    state.iteration_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (!std::isfinite(current.objective)) {
      throw TrainingError("non-finite objective at iteration " + std::to_string(state.iteration),
                          state.iteration, params, state.elbo_trace);
    }
  }
}

}  // namespace stgp::detail
