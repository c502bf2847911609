#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "koopest/sde_models.hpp"
#include "koopest/snapshot.hpp"
#include "koopest/types.hpp"

namespace koopest {

enum class BasisFamily { GaussianRBF, Chebyshev, Legendre };

std::string_view family_name(BasisFamily f) noexcept;
/// Accepts "rbf", "chebyshev", "legendre".
BasisFamily family_from_name(std::string_view name);

struct RbfLayout {
  std::vector<double> centers;
  double length_scale = 0.0;
};

/// N functions psi_1..psi_N with closed-form first and second derivatives.
///
/// GaussianRBF: psi_j(x) = exp(-l^2 (x - c_j)^2).
/// Chebyshev / Legendre: psi_j = T_{j-1} / P_{j-1}, evaluated by their
/// three-term recurrences; derivatives come from differentiating the
/// recurrences. Immutable once constructed.
class BasisSet {
 public:
  static BasisSet gaussian_rbf(std::vector<double> centers, double length_scale);
  static BasisSet gaussian_rbf(const RbfLayout& layout) {
    return gaussian_rbf(layout.centers, layout.length_scale);
  }
  static BasisSet chebyshev(int n);
  static BasisSet legendre(int n);

  BasisFamily family() const noexcept { return family_; }
  int size() const noexcept { return n_; }
  const std::vector<double>& centers() const noexcept { return centers_; }
  double length_scale() const noexcept { return length_scale_; }

  /// Polynomial families are defined on [-1, 1]; RBFs everywhere.
  bool in_domain(double x) const noexcept;

  /// (psi_j(x))_j for order 0, derivatives for order 1 and 2.
  Vector eval(double x, int order) const;

  /// Writes values and derivatives at x into caller-owned arrays of length
  /// size(); any pointer may be null.
  void eval_into(double x, double* v0, double* v1, double* v2) const;

 private:
  BasisSet(BasisFamily f, int n) : family_(f), n_(n) {}

  BasisFamily family_;
  int n_;
  std::vector<double> centers_;
  double length_scale_ = 0.0;
};

/// Data-adaptive layout: N centers spaced dx = (max - min)/(N + 1) apart with
/// c_1 = min + dx and c_N = max - dx, and length scale l = 1/dx.
RbfLayout make_rbf_centers(std::span<const double> x_data, int n_basis);

/// Fixed layout on [lo, hi]: c_j = lo + (hi - lo)(j - 1)/(N - 1) and l = (hi - lo)/(N - 1).
RbfLayout make_rbf_centers_fixed(int n_basis, double lo = -1.0, double hi = 1.0);

/// N x T matrix whose column k is psi^(order)(xs[k]).
Matrix eval_matrix(const BasisSet& basis, std::span<const double> xs, int order);

struct SnapshotMatrices {
  Matrix psi_x;  ///< N x T, column j = psi(x_j)
  Matrix psi_y;  ///< N x T, column j = psi(y_j)
  /// Polynomial evaluations outside [-1, 1] (evaluated as-is).
  std::size_t out_of_domain = 0;
};

SnapshotMatrices build_snapshot_matrices(const BasisSet& basis, const SnapshotData& data);

}  // namespace koopest
