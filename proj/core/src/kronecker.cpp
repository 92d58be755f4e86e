#include "stgp/kronecker.hpp"

#include <Eigen/LU>
#include <string>

namespace stgp {

KroneckerMatrix::KroneckerMatrix(Matrix left, Matrix right, Index cap)
    : left_(std::move(left)), right_(std::move(right)), cap_(cap) {}

double KroneckerMatrix::coeff(Index row, Index col) const {
  const Index r = right_.rows();
  const Index s = right_.cols();
  return left_(row / r, col / s) * right_(row % r, col % s);
}

Matrix KroneckerMatrix::materialize() const {
  if (rows() > cap_ || cols() > cap_) {
    throw CapacityError("Kronecker product " + std::to_string(rows()) + "x" +
                        std::to_string(cols()) + " exceeds materialisation cap " +
                        std::to_string(cap_));
  }
  return kron_dense(left_, right_);
}

Vector KroneckerMatrix::matvec(const Vector& x) const {
  if (x.size() != cols()) throw DimensionError("KroneckerMatrix::matvec: size mismatch");
  // With the row-major block layout used here, x splits into left.cols()
  // chunks of length right.cols(); stacking them as columns gives X and the
  // result's chunks are the columns of B X A^T.
  const Eigen::Map<const Matrix> xm(x.data(), right_.cols(), left_.cols());
  const Matrix y = right_ * xm * left_.transpose();
  return Eigen::Map<const Vector>(y.data(), y.size());
}

KroneckerMatrix KroneckerMatrix::inverse() const {
  if (left_.rows() != left_.cols() || right_.rows() != right_.cols()) {
    throw DimensionError("KroneckerMatrix::inverse: factors must be square");
  }
  return {left_.inverse(), right_.inverse(), cap_};
}

KroneckerMatrix KroneckerMatrix::transpose() const {
  return {left_.transpose(), right_.transpose(), cap_};
}

KroneckerMatrix KroneckerMatrix::operator*(const KroneckerMatrix& other) const {
  if (left_.cols() != other.left_.rows() || right_.cols() != other.right_.rows()) {
    throw DimensionError("KroneckerMatrix: non-conforming mixed product");
  }
  return {left_ * other.left_, right_ * other.right_, std::min(cap_, other.cap_)};
}

KroneckerMatrix kron(const Matrix& a, const Matrix& b, Index cap) { return {a, b, cap}; }

Matrix kron_dense(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace stgp
