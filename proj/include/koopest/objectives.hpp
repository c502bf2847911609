#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "koopest/basis.hpp"
#include "koopest/koopman.hpp"
#include "koopest/sde_models.hpp"
#include "koopest/types.hpp"

namespace koopest {

enum class ObjectiveKind { Frobenius, OperatorNorm, ConstrainedEDMD, GMM };

std::string_view objective_name(ObjectiveKind k) noexcept;
/// Accepts "frobenius", "operator", "constrained", "gmm".
ObjectiveKind objective_from_name(std::string_view name);

/// Everything captured from one dataset: the empirical matrices, the generator
/// template and the snapshot matrices (the latter only used by the
/// data-sum objectives).
struct Problem {
  SdeModel model = SdeModel::ornstein_uhlenbeck();
  KoopmanMatrices koop;
  GeneratorTemplate tmpl;
  SnapshotMatrices psi;
};

Problem make_problem(const SdeModel& model, const BasisSet& basis, const SnapshotData& data);

/// How a rank-J truncation enters the Frobenius objective.
///   Projected:  ||exp(tLM^{-1}) P_J - A_J||_F^2, the residual on the retained modes.
///   TargetOnly: ||exp(tLM^{-1}) - A_J||_F^2.
enum class TruncationMode { Projected, TargetOnly };

std::string_view truncation_mode_name(TruncationMode m) noexcept;
/// Accepts "projected" and "target".
TruncationMode truncation_mode_from_name(std::string_view name);

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Frobenius;
  /// Eigen-truncation rank of the EDMD matrix (Frobenius only).
  std::optional<int> j_trunc;
  TruncationMode truncation_mode = TruncationMode::Projected;
  /// GMM covariance Sigma; the moment norm is weighted by Sigma^{-1}. Identity if unset.
  std::optional<Matrix> gmm_covariance;
  std::shared_ptr<const Problem> problem;
};

/// theta -> objective value, with +inf returned outside the parameter set or
/// when the matrix exponential overflows. Immutable and reentrant.
class Objective {
 public:
  explicit Objective(ObjectiveSpec spec);

  double operator()(const Vector& theta) const;

  /// exp(t L(theta) M^{-1}); throws NonFiniteResult.
  Matrix model_matrix(const Vector& theta) const { return koopman_(theta); }

  const ObjectiveSpec& spec() const noexcept { return spec_; }
  const Problem& problem() const noexcept { return *spec_.problem; }
  /// The EDMD matrix the Frobenius and operator objectives compare against (A_J).
  const Matrix& target() const noexcept { return target_; }
  const EigenTruncation* truncation() const noexcept { return truncation_ ? &*truncation_ : nullptr; }

 private:
  double evaluate(const Matrix& k) const;

  ObjectiveSpec spec_;
  ProjectedKoopman koopman_;
  Matrix target_;
  std::optional<EigenTruncation> truncation_;
  /// Set only for projected truncation with J < N.
  std::optional<Matrix> projector_;
  Matrix mass_sqrt_;
  Matrix mass_inv_sqrt_;
  std::optional<Eigen::LLT<Matrix>> gmm_weight_;
};

/// ||B||_M = sup_c sqrt(c^T B^T M B c / c^T M c) = sigma_max(M^{1/2} B M^{-1/2}).
/// Throws InvalidArgument if M is not symmetric positive definite.
double mass_operator_norm(const Matrix& b, const Matrix& mass);

double frobenius_objective(const ObjectiveSpec& spec, const Vector& theta);
double operator_norm_objective(const ObjectiveSpec& spec, const Vector& theta);
double constrained_edmd_objective(const ObjectiveSpec& spec, const Vector& theta);
double gmm_objective(const ObjectiveSpec& spec, const Vector& theta);

/// Empirical covariance of the moment residuals at theta, plus a ridge of
/// 1e-10 trace/N (1e-10 when the trace vanishes) on the diagonal.
Matrix gmm_weight_update(const ObjectiveSpec& spec, const Vector& theta);

}  // namespace koopest
