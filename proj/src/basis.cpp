#include "koopest/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "koopest/errors.hpp"

namespace koopest {

std::string_view family_name(BasisFamily f) noexcept {
  switch (f) {
    case BasisFamily::GaussianRBF: return "rbf";
    case BasisFamily::Chebyshev: return "chebyshev";
    case BasisFamily::Legendre: return "legendre";
  }
  return "?";
}

BasisFamily family_from_name(std::string_view name) {
  if (name == "rbf") return BasisFamily::GaussianRBF;
  if (name == "chebyshev") return BasisFamily::Chebyshev;
  if (name == "legendre") return BasisFamily::Legendre;
  throw InvalidArgument("unknown basis '" + std::string(name) + "' (expected rbf|chebyshev|legendre)");
}

BasisSet BasisSet::gaussian_rbf(std::vector<double> centers, double length_scale) {
  if (centers.empty()) throw InvalidArgument("RBF basis needs at least one center");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw InvalidArgument("RBF length scale must be positive");
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (!std::isfinite(centers[j])) throw InvalidArgument("RBF centers must be finite");
    if (j > 0 && !(centers[j] > centers[j - 1]))
      throw InvalidArgument("RBF centers must be strictly increasing");
  }
  BasisSet b(BasisFamily::GaussianRBF, static_cast<int>(centers.size()));
  b.centers_ = std::move(centers);
  b.length_scale_ = length_scale;
  return b;
}

BasisSet BasisSet::chebyshev(int n) {
  if (n < 1) throw InvalidArgument("basis size must be positive");
  return BasisSet(BasisFamily::Chebyshev, n);
}

BasisSet BasisSet::legendre(int n) {
  if (n < 1) throw InvalidArgument("basis size must be positive");
  return BasisSet(BasisFamily::Legendre, n);
}

bool BasisSet::in_domain(double x) const noexcept {
  return family_ == BasisFamily::GaussianRBF || (x >= -1.0 && x <= 1.0);
}

void BasisSet::eval_into(double x, double* v0, double* v1, double* v2) const {
  const int n = n_;
  if (family_ == BasisFamily::GaussianRBF) {
    const double l2 = length_scale_ * length_scale_;
    for (int j = 0; j < n; ++j) {
      const double d = x - centers_[static_cast<std::size_t>(j)];
      const double psi = std::exp(-l2 * d * d);
      if (v0) v0[j] = psi;
      if (v1) v1[j] = -2.0 * l2 * d * psi;
      if (v2) v2[j] = (4.0 * l2 * l2 * d * d - 2.0 * l2) * psi;
    }
    return;
  }

  // p: value, dp: first derivative, ddp: second derivative; index m = degree.
  double p_prev = 1.0, dp_prev = 0.0, ddp_prev = 0.0;
  double p = x, dp = 1.0, ddp = 0.0;
  auto store = [&](int m, double a, double b, double c) {
    if (v0) v0[m] = a;
    if (v1) v1[m] = b;
    if (v2) v2[m] = c;
  };
  store(0, p_prev, dp_prev, ddp_prev);
  if (n > 1) store(1, p, dp, ddp);
  const bool cheb = family_ == BasisFamily::Chebyshev;
  for (int m = 1; m + 1 < n; ++m) {
    double p_next, dp_next, ddp_next;
    if (cheb) {
      // T_{m+1} = 2x T_m - T_{m-1}
      p_next = 2.0 * x * p - p_prev;
      dp_next = 2.0 * p + 2.0 * x * dp - dp_prev;
      ddp_next = 4.0 * dp + 2.0 * x * ddp - ddp_prev;
    } else {
      // (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}
      const double a = 2.0 * m + 1.0, c = static_cast<double>(m), inv = 1.0 / (m + 1.0);
      p_next = (a * x * p - c * p_prev) * inv;
      dp_next = (a * (p + x * dp) - c * dp_prev) * inv;
      ddp_next = (a * (2.0 * dp + x * ddp) - c * ddp_prev) * inv;
    }
    p_prev = p, dp_prev = dp, ddp_prev = ddp;
    p = p_next, dp = dp_next, ddp = ddp_next;
    store(m + 1, p, dp, ddp);
  }
}

Vector BasisSet::eval(double x, int order) const {
  if (order < 0 || order > 2) throw InvalidArgument("derivative order must be 0, 1 or 2");
  Vector out(n_);
  eval_into(x, order == 0 ? out.data() : nullptr, order == 1 ? out.data() : nullptr,
            order == 2 ? out.data() : nullptr);
  return out;
}

RbfLayout make_rbf_centers(std::span<const double> x_data, int n_basis) {
  if (n_basis < 2) throw InvalidArgument("data-adaptive RBF layout needs N >= 2");
  if (x_data.empty()) throw InvalidArgument("data-adaptive RBF layout needs data");
  const auto [lo_it, hi_it] = std::minmax_element(x_data.begin(), x_data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo) || !std::isfinite(hi - lo))
    throw InvalidArgument("degenerate data range for RBF layout (max == min)");
  const double dx = (hi - lo) / (n_basis + 1);
  RbfLayout out;
  out.centers.resize(static_cast<std::size_t>(n_basis));
  for (int j = 0; j < n_basis; ++j) out.centers[static_cast<std::size_t>(j)] = lo + dx * (j + 1);
  out.length_scale = 1.0 / dx;
  return out;
}

RbfLayout make_rbf_centers_fixed(int n_basis, double lo, double hi) {
  if (n_basis < 2) throw InvalidArgument("fixed RBF layout needs N >= 2");
  if (!(hi > lo)) throw InvalidArgument("fixed RBF layout needs hi > lo");
  const double spacing = (hi - lo) / (n_basis - 1);
  RbfLayout out;
  out.centers.resize(static_cast<std::size_t>(n_basis));
  for (int j = 0; j < n_basis; ++j) out.centers[static_cast<std::size_t>(j)] = lo + spacing * j;
  out.centers.back() = hi;
  out.length_scale = spacing;
  return out;
}

Matrix eval_matrix(const BasisSet& basis, std::span<const double> xs, int order) {
  if (order < 0 || order > 2) throw InvalidArgument("derivative order must be 0, 1 or 2");
  Matrix out(basis.size(), static_cast<Eigen::Index>(xs.size()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(xs.size()); ++k) {
    double* col = out.col(k).data();
    basis.eval_into(xs[static_cast<std::size_t>(k)], order == 0 ? col : nullptr,
                    order == 1 ? col : nullptr, order == 2 ? col : nullptr);
  }
  return out;
}

SnapshotMatrices build_snapshot_matrices(const BasisSet& basis, const SnapshotData& data) {
  if (data.x.size() != data.y.size() || data.x.empty())
    throw InvalidArgument("snapshot data must hold T >= 1 pairs of equal length");
  SnapshotMatrices out;
  out.psi_x = eval_matrix(basis, data.x, 0);
  out.psi_y = eval_matrix(basis, data.y, 0);
  if (basis.family() != BasisFamily::GaussianRBF) {
    for (double v : data.x) out.out_of_domain += basis.in_domain(v) ? 0 : 1;
    for (double v : data.y) out.out_of_domain += basis.in_domain(v) ? 0 : 1;
  }
  return out;
}

}  // namespace koopest
