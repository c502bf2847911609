#pragma once

#include <span>
#include <vector>

#include "koopest/types.hpp"

/// Data-parallel accumulation kernels over snapshot columns.
///
/// Every kernel has an OpenMP implementation and a `serial::` reference. The
/// OpenMP versions split the T columns into fixed blocks of kBlockColumns,
/// reduce each block independently and combine block partials with a fixed
/// pairwise tree, so results are bit-identical for any thread count. The
/// serial references are plain column loops, kept for testing and benchmarks;
/// they agree with the parallel versions up to rounding.
namespace koopest::kernels {

inline constexpr Eigen::Index kBlockColumns = 1024;

/// (1/T) sum_k w_k left(:,k) right(:,k)^T; empty `weights` means all ones.
Matrix weighted_cross(const Matrix& left, const Matrix& right, std::span<const double> weights = {});

/// (1/T) psi psi^T, symmetric to the last bit.
Matrix gram(const Matrix& psi);

/// sum_k || K psi_x(:,k) - psi_y(:,k) ||_2^2
double residual_sum_squares(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);

/// (1/T) sum_k (K psi_x(:,k) - psi_y(:,k))
Vector residual_mean(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);

/// (1/T) sum_k r_k r_k^T with r_k = K psi_x(:,k) - psi_y(:,k); symmetric.
Matrix residual_covariance(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);

namespace serial {
Matrix weighted_cross(const Matrix& left, const Matrix& right, std::span<const double> weights = {});
Matrix gram(const Matrix& psi);
double residual_sum_squares(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);
Vector residual_mean(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);
Matrix residual_covariance(const Matrix& k, const Matrix& psi_x, const Matrix& psi_y);
}  // namespace serial

}  // namespace koopest::kernels
