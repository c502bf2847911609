#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koopest/types.hpp"

namespace koopest {

using ScalarFn = std::function<double(const Vector&)>;

/// Central-difference gradient with per-coordinate step fd_step * max(1, |x_j|).
/// A coordinate whose probe hits +inf falls back to the one-sided difference on
/// the finite side; `f0` (f(x)) is computed on demand if not supplied.
/// Throws GradientUnavailable when both probes of a coordinate are non-finite.
Vector fd_gradient(const ScalarFn& f, const Vector& x, double fd_step, std::optional<double> f0 = {});

enum class LineSearchKind { BacktrackingInterpolation, HagerZhang };

std::string_view line_search_name(LineSearchKind k) noexcept;
/// Accepts "backtracking" and "hager-zhang".
LineSearchKind line_search_from_name(std::string_view name);

struct BfgsOptions {
  LineSearchKind line_search = LineSearchKind::BacktrackingInterpolation;
  double fd_step = 1e-6;
  /// Convergence when the infinity norm of the gradient drops below this.
  double grad_tol = 1e-8;
  int max_iter = 200;
};

struct BfgsResult {
  Vector x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  /// Objective value at the start and after each accepted step.
  std::vector<double> history;
  std::string message;
  int evaluations = 0;
};

/// Quasi-Newton minimization with an inverse-Hessian BFGS update (identity
/// start) and finite-difference gradients. Never throws on line-search or
/// gradient failure; the best iterate found so far is returned with
/// converged = false.
BfgsResult minimize_bfgs(const ScalarFn& f, const Vector& x0, const BfgsOptions& opts);

}  // namespace koopest
