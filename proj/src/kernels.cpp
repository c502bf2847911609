#include "koopest/kernels.hpp"

#include <algorithm>
#include <cstddef>

#include "koopest/errors.hpp"

namespace koopest::kernels {
namespace {

void check_columns(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("kernel operands differ in column count");
  if (a.cols() == 0) throw InvalidArgument("kernel operands have no columns");
}

/// Reduces fn(begin, len) over fixed column blocks with a thread-count
/// independent pairwise combination order.
template <class T, class Fn>
T blocked_reduce(Eigen::Index n_cols, Fn&& fn) {
  const Eigen::Index n_blocks = (n_cols + kBlockColumns - 1) / kBlockColumns;
  std::vector<T> partial(static_cast<std::size_t>(n_blocks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < n_blocks; ++b) {
    const Eigen::Index begin = b * kBlockColumns;
    const Eigen::Index len = std::min(kBlockColumns, n_cols - begin);
    partial[static_cast<std::size_t>(b)] = fn(begin, len);
  }
  for (std::size_t stride = 1; stride < partial.size(); stride *= 2)
    for (std::size_t i = 0; i + stride < partial.size(); i += 2 * stride)
      partial[i] += partial[i + stride];
  return std::move(partial.front());
}

Matrix symmetrized(Matrix m) {
  // (a + b) / 2 is commutative in floating point, so the result is exactly symmetric.
  Matrix s = 0.5 * (m + m.transpose());
  return s;
}

}  // namespace

Matrix weighted_cross(const Matrix& left, const Matrix& right, std::span<const double> weights) {
  check_columns(left, right);
  const Eigen::Index t = left.cols();
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != t)
    throw InvalidArgument("weight count must equal the column count");
  Matrix sum = blocked_reduce<Matrix>(t, [&](Eigen::Index begin, Eigen::Index len) -> Matrix {
    if (weights.empty()) return left.middleCols(begin, len) * right.middleCols(begin, len).transpose();
    Eigen::Map<const Vector> w(weights.data() + begin, len);
    return (left.middleCols(begin, len) * w.asDiagonal()) * right.middleCols(begin, len).transpose();
  });
  return sum / static_cast<double>(t);
}

Matrix gram(const Matrix& psi) { return symmetrized(weighted_cross(psi, psi)); }

double residual_sum_squares(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  return blocked_reduce<double>(psi_x.cols(), [&](Eigen::Index begin, Eigen::Index len) {
    return (k * psi_x.middleCols(begin, len) - psi_y.middleCols(begin, len)).squaredNorm();
  });
}

Vector residual_mean(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  Vector sum = blocked_reduce<Vector>(psi_x.cols(), [&](Eigen::Index begin, Eigen::Index len) -> Vector {
    return (k * psi_x.middleCols(begin, len) - psi_y.middleCols(begin, len)).rowwise().sum();
  });
  return sum / static_cast<double>(psi_x.cols());
}

Matrix residual_covariance(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  Matrix sum = blocked_reduce<Matrix>(psi_x.cols(), [&](Eigen::Index begin, Eigen::Index len) -> Matrix {
    const Matrix r = k * psi_x.middleCols(begin, len) - psi_y.middleCols(begin, len);
    return r * r.transpose();
  });
  return symmetrized(sum / static_cast<double>(psi_x.cols()));
}

namespace serial {

Matrix weighted_cross(const Matrix& left, const Matrix& right, std::span<const double> weights) {
  check_columns(left, right);
  const Eigen::Index t = left.cols();
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != t)
    throw InvalidArgument("weight count must equal the column count");
  Matrix acc = Matrix::Zero(left.rows(), right.rows());
  for (Eigen::Index k = 0; k < t; ++k) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < right.rows(); ++j)
      for (Eigen::Index i = 0; i < left.rows(); ++i) acc(i, j) += w * left(i, k) * right(j, k);
  }
  return acc / static_cast<double>(t);
}

Matrix gram(const Matrix& psi) { return symmetrized(weighted_cross(psi, psi)); }

double residual_sum_squares(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  double acc = 0.0;
  for (Eigen::Index c = 0; c < psi_x.cols(); ++c) acc += (k * psi_x.col(c) - psi_y.col(c)).squaredNorm();
  return acc;
}

Vector residual_mean(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  Vector acc = Vector::Zero(psi_y.rows());
  for (Eigen::Index c = 0; c < psi_x.cols(); ++c) acc += k * psi_x.col(c) - psi_y.col(c);
  return acc / static_cast<double>(psi_x.cols());
}

Matrix residual_covariance(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y) {
  check_columns(psi_x, psi_y);
  Matrix acc = Matrix::Zero(psi_y.rows(), psi_y.rows());
  for (Eigen::Index c = 0; c < psi_x.cols(); ++c) {
    const Vector r = k * psi_x.col(c) - psi_y.col(c);
    acc += r * r.transpose();
  }
  return symmetrized(acc / static_cast<double>(psi_x.cols()));
}

}  // namespace serial
}  // namespace koopest::kernels
