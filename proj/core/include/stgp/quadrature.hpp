#pragma once

#include <cmath>

#include "stgp/types.hpp"

namespace stgp {

/// Gauss-Hermite rule for the weight e^{-x^2}: the weights sum to sqrt(pi).
struct QuadratureRule {
  Vector nodes;
  Vector weights;

  Index order() const { return nodes.size(); }
};

/// Nodes and weights from the symmetric tridiagonal Jacobi matrix
/// (Golub-Welsch). Rules are cached per order and safe to request concurrently.
const QuadratureRule& gauss_hermite(int order);

/// E[g(f)] for f ~ N(m, v) under an `order`-point rule.
template <class Fn>
double gaussian_expectation(const QuadratureRule& rule, double m, double v, Fn&& g) {
  constexpr double kInvSqrtPi = 0.56418958354775628695;
  const double scale = std::sqrt(2.0 * v);
  double acc = 0.0;
  for (Index i = 0; i < rule.order(); ++i) acc += rule.weights(i) * g(m + scale * rule.nodes(i));
  return acc * kInvSqrtPi;
}

}  // namespace stgp
