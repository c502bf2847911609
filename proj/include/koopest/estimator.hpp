#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koopest/objectives.hpp"
#include "koopest/optimizer.hpp"
#include "koopest/types.hpp"

namespace koopest {

struct OptimizerConfig {
  /// Unset picks the per-objective default (Hager-Zhang for constrained EDMD,
  /// backtracking otherwise).
  std::optional<LineSearchKind> line_search;
  double fd_step = 1e-6;
  double grad_tol = 1e-8;
  int max_iter = 200;
  Vector theta_init;

  void validate() const;
};

enum class FailureRule { AbsGreaterOne, None };

/// AbsGreaterOne: true iff some |theta_j| > 1. None: always false.
bool classify_failure(const Vector& theta_hat, FailureRule rule);

LineSearchKind default_line_search(ObjectiveKind kind) noexcept;

struct EstimateResult {
  Vector theta_hat;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  double gradient_norm = 0.0;
  double wall_time = 0.0;
  std::vector<double> history;
  std::string message;
};

EstimateResult estimate(const Objective& objective, const OptimizerConfig& cfg,
                        FailureRule rule = FailureRule::None);
EstimateResult estimate(const ObjectiveSpec& spec, const OptimizerConfig& cfg,
                        FailureRule rule = FailureRule::None);

/// Two-pass GMM: estimate with identity weight, set the weight to the residual
/// covariance at that estimate, and re-estimate from it.
EstimateResult estimate_gmm_reweighted(const ObjectiveSpec& spec, const OptimizerConfig& cfg,
                                       FailureRule rule = FailureRule::None);

}  // namespace koopest
