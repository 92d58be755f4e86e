#pragma once

#include <Eigen/Core>

namespace stgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Replaces P with (P + P^T) / 2 in place.
inline void symmetrize(Matrix& p) { p = 0.5 * (p + p.transpose()).eval(); }

inline Matrix symmetrized(const Matrix& p) { return 0.5 * (p + p.transpose()); }

}  // namespace stgp
