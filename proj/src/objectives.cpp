#include "koopest/objectives.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "koopest/errors.hpp"
#include "koopest/kernels.hpp"

namespace koopest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Problem& require_problem(const ObjectiveSpec& spec) {
  if (!spec.problem) throw InvalidArgument("objective spec has no captured problem");
  return *spec.problem;
}

void symmetric_roots(const Matrix& mass, Matrix& sqrt_out, Matrix& inv_sqrt_out) {
  if (!mass.isApprox(mass.transpose(), 1e-12)) throw InvalidArgument("mass matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(mass);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw InvalidArgument("mass matrix is not positive definite");
  sqrt_out = es.operatorSqrt();
  inv_sqrt_out = es.operatorInverseSqrt();
}

double spectral_norm(const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(b);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

std::string_view objective_name(ObjectiveKind k) noexcept {
  switch (k) {
    case ObjectiveKind::Frobenius: return "frobenius";
    case ObjectiveKind::OperatorNorm: return "operator";
    case ObjectiveKind::ConstrainedEDMD: return "constrained";
    case ObjectiveKind::GMM: return "gmm";
  }
  return "?";
}

ObjectiveKind objective_from_name(std::string_view name) {
  if (name == "frobenius") return ObjectiveKind::Frobenius;
  if (name == "operator") return ObjectiveKind::OperatorNorm;
  if (name == "constrained") return ObjectiveKind::ConstrainedEDMD;
  if (name == "gmm") return ObjectiveKind::GMM;
  throw InvalidArgument("unknown objective '" + std::string(name) +
                        "' (expected frobenius|operator|constrained|gmm)");
}

std::string_view truncation_mode_name(TruncationMode m) noexcept {
  return m == TruncationMode::Projected ? "projected" : "target";
}

TruncationMode truncation_mode_from_name(std::string_view name) {
  if (name == "projected") return TruncationMode::Projected;
  if (name == "target") return TruncationMode::TargetOnly;
  throw InvalidArgument("unknown truncation mode '" + std::string(name) + "' (expected projected|target)");
}

Problem make_problem(const SdeModel& model, const BasisSet& basis, const SnapshotData& data) {
  data.validate();
  Problem p;
  p.model = model;
  p.psi = build_snapshot_matrices(basis, data);
  p.koop = assemble(p.psi, data.t_step);
  p.tmpl = generator_template(basis, data, model);
  return p;
}

Objective::Objective(ObjectiveSpec spec)
    : spec_(std::move(spec)),
      koopman_(require_problem(spec_).tmpl, spec_.problem->koop.mass, spec_.problem->koop.t_step) {
  const Problem& p = *spec_.problem;
  const int n = static_cast<int>(p.koop.mass.rows());
  target_ = p.koop.edmd;
  if (spec_.j_trunc) {
    if (spec_.kind != ObjectiveKind::Frobenius)
      throw InvalidArgument("eigen-truncation is only defined for the Frobenius objective");
    if (*spec_.j_trunc < 1 || *spec_.j_trunc > n) throw InvalidArgument("truncation rank must satisfy 1 <= J <= N");
    truncation_ = eigen_truncate(p.koop.edmd, *spec_.j_trunc);
    target_ = truncation_->matrix;
    if (spec_.truncation_mode == TruncationMode::Projected && truncation_->j_used < n)
      projector_ = truncation_->projector;
  }
  switch (spec_.kind) {
    case ObjectiveKind::OperatorNorm:
      symmetric_roots(p.koop.mass, mass_sqrt_, mass_inv_sqrt_);
      break;
    case ObjectiveKind::ConstrainedEDMD:
    case ObjectiveKind::GMM:
      if (p.psi.psi_x.cols() == 0 || p.psi.psi_x.rows() != n)
        throw InvalidArgument("data-sum objectives need the snapshot matrices");
      break;
    case ObjectiveKind::Frobenius:
      break;
  }
  if (spec_.gmm_covariance) {
    if (spec_.kind != ObjectiveKind::GMM) throw InvalidArgument("a weight matrix only applies to GMM");
    const Matrix& s = *spec_.gmm_covariance;
    if (s.rows() != n || s.cols() != n) throw InvalidArgument("GMM weight matrix has the wrong size");
    gmm_weight_.emplace(s);
    if (gmm_weight_->info() != Eigen::Success || !(spd_condition_number(s) < 1e14))
      throw InvalidArgument("GMM weight matrix is singular or not positive definite");
  }
}

double Objective::evaluate(const Matrix& k) const {
  const Problem& p = *spec_.problem;
  switch (spec_.kind) {
    case ObjectiveKind::Frobenius:
      if (projector_) return (k * *projector_ - target_).squaredNorm();
      return (k - target_).squaredNorm();
    case ObjectiveKind::OperatorNorm:
      return spectral_norm(mass_sqrt_ * (k - target_) * mass_inv_sqrt_);
    case ObjectiveKind::ConstrainedEDMD:
      return kernels::residual_sum_squares(k, p.psi.psi_x, p.psi.psi_y);
    case ObjectiveKind::GMM: {
      const Vector r = kernels::residual_mean(k, p.psi.psi_x, p.psi.psi_y);
      if (!gmm_weight_) return std::sqrt(r.dot(r));
      return std::sqrt(std::max(0.0, r.dot(gmm_weight_->solve(r))));
    }
  }
  return kInf;
}

double Objective::operator()(const Vector& theta) const {
  if (!problem().model.in_parameter_space(theta)) return kInf;
  try {
    const double v = evaluate(koopman_(theta));
    return std::isfinite(v) ? v : kInf;
  } catch (const NonFiniteResult&) {
    return kInf;
  }
}

double mass_operator_norm(const Matrix& b, const Matrix& mass) {
  Matrix s, si;
  symmetric_roots(mass, s, si);
  return spectral_norm(s * b * si);
}

double frobenius_objective(const ObjectiveSpec& spec, const Vector& theta) {
  ObjectiveSpec s = spec;
  s.kind = ObjectiveKind::Frobenius;
  s.gmm_covariance.reset();
  return Objective(std::move(s))(theta);
}

double operator_norm_objective(const ObjectiveSpec& spec, const Vector& theta) {
  ObjectiveSpec s = spec;
  s.kind = ObjectiveKind::OperatorNorm;
  s.j_trunc.reset();
  s.gmm_covariance.reset();
  return Objective(std::move(s))(theta);
}

double constrained_edmd_objective(const ObjectiveSpec& spec, const Vector& theta) {
  ObjectiveSpec s = spec;
  s.kind = ObjectiveKind::ConstrainedEDMD;
  s.j_trunc.reset();
  s.gmm_covariance.reset();
  return Objective(std::move(s))(theta);
}

double gmm_objective(const ObjectiveSpec& spec, const Vector& theta) {
  ObjectiveSpec s = spec;
  s.kind = ObjectiveKind::GMM;
  s.j_trunc.reset();
  return Objective(std::move(s))(theta);
}

Matrix gmm_weight_update(const ObjectiveSpec& spec, const Vector& theta) {
  const Problem& p = require_problem(spec);
  if (!theta.allFinite()) throw InvalidArgument("theta must be finite");
  ProjectedKoopman koopman(p.tmpl, p.koop.mass, p.koop.t_step);
  const Matrix k = koopman(theta);
  Matrix sigma = kernels::residual_covariance(k, p.psi.psi_x, p.psi.psi_y);
  const double n = static_cast<double>(sigma.rows());
  const double tr = sigma.trace();
  const double ridge = 1e-10 * (tr > 0.0 ? tr / n : 1.0);
  sigma.diagonal().array() += ridge;
  return sigma;
}

}  // namespace koopest
