#include "koopest/estimator.hpp"

#include <chrono>
#include <cmath>

#include "koopest/errors.hpp"

namespace koopest {

void OptimizerConfig::validate() const {
  if (!(fd_step > 0.0) || !(grad_tol > 0.0) || max_iter <= 0)
    throw InvalidArgument("fd_step, grad_tol and max_iter must be positive");
  if (theta_init.size() == 0 || !theta_init.allFinite()) throw InvalidArgument("theta_init must be finite");
}

bool classify_failure(const Vector& theta_hat, FailureRule rule) {
  if (rule == FailureRule::None) return false;
  return theta_hat.size() > 0 && !(theta_hat.cwiseAbs().maxCoeff() <= 1.0);
}

LineSearchKind default_line_search(ObjectiveKind kind) noexcept {
  return kind == ObjectiveKind::ConstrainedEDMD ? LineSearchKind::HagerZhang
                                                : LineSearchKind::BacktrackingInterpolation;
}

EstimateResult estimate(const Objective& objective, const OptimizerConfig& cfg, FailureRule rule) {
  cfg.validate();
  const SdeModel& model = objective.problem().model;
  model.check_theta(cfg.theta_init);
  if (!model.in_parameter_space(cfg.theta_init)) throw InvalidArgument("theta_init lies outside the parameter set");

  BfgsOptions opts;
  opts.line_search = cfg.line_search.value_or(default_line_search(objective.spec().kind));
  opts.fd_step = cfg.fd_step;
  opts.grad_tol = cfg.grad_tol;
  opts.max_iter = cfg.max_iter;

  const auto start = std::chrono::steady_clock::now();
  const BfgsResult r = minimize_bfgs([&objective](const Vector& th) { return objective(th); },
                                     cfg.theta_init, opts);
  const auto stop = std::chrono::steady_clock::now();

  EstimateResult out;
  out.theta_hat = model.canonical(r.x);
  out.objective_value = r.f;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.gradient_norm = r.grad_norm;
  out.history = r.history;
  out.message = r.message;
  out.wall_time = std::chrono::duration<double>(stop - start).count();
  out.failed = classify_failure(out.theta_hat, rule);
  return out;
}

EstimateResult estimate(const ObjectiveSpec& spec, const OptimizerConfig& cfg, FailureRule rule) {
  return estimate(Objective(spec), cfg, rule);
}

EstimateResult estimate_gmm_reweighted(const ObjectiveSpec& spec, const OptimizerConfig& cfg, FailureRule rule) {
  ObjectiveSpec first = spec;
  first.kind = ObjectiveKind::GMM;
  first.gmm_covariance.reset();
  first.j_trunc.reset();
  const EstimateResult pass1 = estimate(first, cfg, FailureRule::None);

  ObjectiveSpec second = first;
  second.gmm_covariance = gmm_weight_update(first, pass1.theta_hat);
  OptimizerConfig cfg2 = cfg;
  cfg2.theta_init = pass1.theta_hat;
  if (!spec.problem->model.in_parameter_space(cfg2.theta_init)) cfg2.theta_init = cfg.theta_init;
  EstimateResult out = estimate(second, cfg2, rule);
  out.wall_time += pass1.wall_time;
  return out;
}

}  // namespace koopest
