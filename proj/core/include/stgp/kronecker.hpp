#pragma once

#include "stgp/errors.hpp"
#include "stgp/types.hpp"

namespace stgp {

/// Default limit on either dimension of a materialised Kronecker product.
inline constexpr Index kKroneckerMaterializeCap = 4096;

/// Lazy A (x) B. The product is only formed on request and only while both
/// of its dimensions stay within `cap`; larger products must go through the
/// factor-aware matvec.
class KroneckerMatrix {
 public:
  KroneckerMatrix(Matrix left, Matrix right, Index cap = kKroneckerMaterializeCap);

  const Matrix& left() const noexcept { return left_; }
  const Matrix& right() const noexcept { return right_; }
  Index rows() const noexcept { return left_.rows() * right_.rows(); }
  Index cols() const noexcept { return left_.cols() * right_.cols(); }

  /// Entry (i*r + k, j*s + l) = A(i, j) * B(k, l).
  double coeff(Index row, Index col) const;

  /// Dense product; throws CapacityError above the cap.
  Matrix materialize() const;

  /// (A (x) B) x computed as vec(B X A^T) with X the column-major reshape of x.
  Vector matvec(const Vector& x) const;

  /// (A (x) B)^{-1} = A^{-1} (x) B^{-1}.
  KroneckerMatrix inverse() const;

  KroneckerMatrix transpose() const;

  /// Mixed product (A (x) B)(C (x) D) = (AC) (x) (BD).
  KroneckerMatrix operator*(const KroneckerMatrix& other) const;

 private:
  Matrix left_;
  Matrix right_;
  Index cap_;
};

KroneckerMatrix kron(const Matrix& a, const Matrix& b, Index cap = kKroneckerMaterializeCap);

/// Dense A (x) B without the lazy wrapper, for small factors.
Matrix kron_dense(const Matrix& a, const Matrix& b);

}  // namespace stgp
