#include "koopest/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "koopest/errors.hpp"

namespace koopest {

ReferenceRow eml_reference() {
  return {Vector{{0.1101, -0.0006, 0.0001}}, Vector{{0.1780, 0.0227, 0.0010}}};
}

BasisSet make_basis(const BasisConfig& cfg, const SnapshotData& data) {
  switch (cfg.family) {
    case BasisFamily::Chebyshev:
      return BasisSet::chebyshev(cfg.n_basis);
    case BasisFamily::Legendre:
      return BasisSet::legendre(cfg.n_basis);
    case BasisFamily::GaussianRBF:
      break;
  }
  if (cfg.frozen) return BasisSet::gaussian_rbf(*cfg.frozen);
  if (cfg.placement == RbfPlacement::FixedInterval)
    return BasisSet::gaussian_rbf(make_rbf_centers_fixed(cfg.n_basis, cfg.lo, cfg.hi));
  return BasisSet::gaussian_rbf(make_rbf_centers(data.x, cfg.n_basis));
}

BatchStats compute_batch_stats(const std::vector<PathEstimate>& paths, const Vector& theta_true) {
  const auto d = theta_true.size();
  BatchStats s;
  s.theta_true = theta_true;
  s.n_paths = paths.size();
  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  std::size_t used = 0;
  for (const auto& p : paths) {
    if (p.failed || !p.error.empty() || p.theta_hat.size() != d) {
      ++s.n_fail;
      continue;
    }
    const Vector dev = p.theta_hat - theta_true;
    sum += dev;
    sum_sq += dev.cwiseProduct(dev);
    ++used;
  }
  if (used == 0) throw AllPathsFailed(s.n_fail);
  const double n = static_cast<double>(used);
  s.bias = sum / n;
  s.rmse = (sum_sq / n).cwiseSqrt();
  // Guards the ordering against the last-ulp rounding of equal deviations.
  s.rmse = s.rmse.cwiseMax(s.bias.cwiseAbs());
  return s;
}

namespace {

BatchStats stats_or_nan(const std::vector<PathEstimate>& paths, const Vector& theta_true) {
  try {
    return compute_batch_stats(paths, theta_true);
  } catch (const AllPathsFailed& e) {
    BatchStats s;
    s.theta_true = theta_true;
    s.n_paths = paths.size();
    s.n_fail = e.n_fail();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.bias = Vector::Constant(theta_true.size(), nan);
    s.rmse = Vector::Constant(theta_true.size(), nan);
    return s;
  }
}

OptimizerConfig with_init(OptimizerConfig opt, const Vector& theta_true) {
  if (opt.theta_init.size() == 0) opt.theta_init = theta_true;
  return opt;
}

std::size_t pow2(int j) { return std::size_t{1} << static_cast<unsigned>(j); }

}  // namespace

DataSource simulated_source(const SdeModel& model, const SimConfig& sim) {
  sim.validate(model);
  return [model, sim](std::size_t k) { return simulate_path(model, sim, k); };
}

DataSource ingest_source(SnapshotData data) {
  data.validate();
  auto shared = std::make_shared<const SnapshotData>(std::move(data));
  return [shared](std::size_t k) { return shared->path(k); };
}

PathEstimate estimate_path(const BatchConfig& cfg, const SnapshotData& data, std::size_t path_id) {
  PathEstimate out;
  out.path_id = path_id;
  out.data_hash = data.content_hash();
  try {
    const BasisSet basis = make_basis(cfg.basis, data);
    auto problem = std::make_shared<Problem>(make_problem(cfg.model, basis, data));
    if (cfg.objective.planted) {
      problem->koop.edmd = ProjectedKoopman(problem->tmpl, problem->koop.mass, data.t_step)(cfg.theta_true);
    }
    ObjectiveSpec spec;
    spec.kind = cfg.objective.kind;
    spec.j_trunc = cfg.objective.j_trunc;
    spec.truncation_mode = cfg.objective.truncation_mode;
    spec.problem = problem;
    const OptimizerConfig opt = with_init(cfg.optimizer, cfg.theta_true);
    const EstimateResult r = cfg.objective.kind == ObjectiveKind::GMM && cfg.objective.gmm_reweight
                                 ? estimate_gmm_reweighted(spec, opt, cfg.rule)
                                 : estimate(spec, opt, cfg.rule);
    out.theta_hat = r.theta_hat;
    out.objective = r.objective_value;
    out.converged = r.converged;
    out.failed = r.failed;
    out.iterations = r.iterations;
    out.wall_time = r.wall_time;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

BatchResult run_batch(const BatchConfig& cfg, const DataSource& source) {
  if (cfg.n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  cfg.model.check_theta(cfg.theta_true);
  BatchResult out;
  out.paths.resize(cfg.n_paths);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t kp = 0; kp < static_cast<std::ptrdiff_t>(cfg.n_paths); ++kp) {
    const auto k = static_cast<std::size_t>(kp);
    try {
      out.paths[k] = estimate_path(cfg, source(k), k);
    } catch (const std::exception& e) {
      out.paths[k].path_id = k;
      out.paths[k].failed = true;
      out.paths[k].error = e.what();
    }
  }

  out.stats = compute_batch_stats(out.paths, cfg.theta_true);
  return out;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("slope fit needs equally many x and y values");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SlopeFit fit{nan, nan, nan};
  const std::size_t n = lx.size();
  if (n < 2) return fit;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      rss += r * r;
    }
    fit.std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

ConvergenceResult convergence_study(const ConvergenceConfig& cfg) {
  if (cfg.j_values.empty()) throw InvalidArgument("convergence study needs at least one j");
  if (cfg.n_replicates < 1 || cfg.base_T < 1) throw InvalidArgument("replicates and base_T must be positive");
  for (int j : cfg.j_values)
    if (j < 0 || j > 30) throw InvalidArgument("j out of range");
  const int j_max = *std::max_element(cfg.j_values.begin(), cfg.j_values.end());
  SimConfig sim = cfg.sim;
  sim.n_points = cfg.base_T * pow2(j_max);
  sim.n_paths = 1;
  sim.validate(cfg.batch.model);

  const std::size_t rows = cfg.j_values.size();
  ConvergenceResult out;
  out.estimates.assign(rows, std::vector<PathEstimate>(cfg.n_replicates));

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rp = 0; rp < static_cast<std::ptrdiff_t>(cfg.n_replicates); ++rp) {
    const auto r = static_cast<std::size_t>(rp);
    const SnapshotData full = simulate_path(cfg.batch.model, sim, r);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t t = cfg.base_T * pow2(cfg.j_values[i]);
      out.estimates[i][r] = estimate_path(cfg.batch, full.prefix(t), r);
    }
  }

  std::vector<double> ts;
  for (std::size_t i = 0; i < rows; ++i) {
    ConvergenceRow row;
    row.j = cfg.j_values[i];
    row.T = cfg.base_T * pow2(row.j);
    row.stats = stats_or_nan(out.estimates[i], cfg.batch.theta_true);
    ts.push_back(static_cast<double>(row.T));
    out.rows.push_back(std::move(row));
  }
  for (Eigen::Index p = 0; p < cfg.batch.theta_true.size(); ++p) {
    std::vector<double> rmse;
    for (const auto& row : out.rows) rmse.push_back(row.stats.rmse(p));
    out.slopes.push_back(fit_loglog(ts, rmse));
  }
  return out;
}

const GridCell* GridResult::find(int n, int j) const {
  const auto it = cells.find({n, j});
  return it == cells.end() ? nullptr : &it->second;
}

GridResult eigscan(const EigscanConfig& cfg, const SnapshotData& data) {
  cfg.model.check_theta(cfg.theta_true);
  data.validate();
  GridResult out;
  out.n_values = cfg.n_values;
  out.j_values = cfg.j_values;
  const OptimizerConfig opt = with_init(cfg.optimizer, cfg.theta_true);

  for (int n : cfg.n_values) {
    std::vector<int> js;
    for (int j : cfg.j_values)
      if (j >= 1 && j <= n) js.push_back(j);
    if (js.empty()) continue;

    std::vector<GridCell> cells(js.size());
    for (std::size_t i = 0; i < js.size(); ++i) {
      cells[i].n = n;
      cells[i].j = js[i];
    }

    std::shared_ptr<const Problem> problem;
    try {
      BasisConfig bc;
      bc.family = cfg.family;
      bc.n_basis = n;
      bc.placement = RbfPlacement::FixedInterval;
      bc.lo = cfg.lo;
      bc.hi = cfg.hi;
      problem = std::make_shared<const Problem>(make_problem(cfg.model, make_basis(bc, data), data));
    } catch (const std::exception& e) {
      for (auto& c : cells) c.error = e.what();
    }

    if (problem) {
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(js.size()); ++ip) {
        GridCell& c = cells[static_cast<std::size_t>(ip)];
        try {
          ObjectiveSpec spec;
          spec.kind = ObjectiveKind::Frobenius;
          spec.j_trunc = c.j;
          spec.truncation_mode = cfg.truncation_mode;
          spec.problem = problem;
          const Objective objective(spec);
          c.j_used = objective.truncation() ? objective.truncation()->j_used : c.j;
          const EstimateResult r = estimate(objective, opt, FailureRule::None);
          c.theta_hat = r.theta_hat;
          c.max_abs_error = (r.theta_hat - cfg.theta_true).cwiseAbs().maxCoeff();
          c.in_band = r.theta_hat.allFinite() && (r.theta_hat.array() > cfg.band_lo).all() &&
                      (r.theta_hat.array() < cfg.band_hi).all();
        } catch (const std::exception& e) {
          c.error = e.what();
        }
      }
    }
    for (auto& c : cells) out.cells.emplace(std::make_pair(c.n, c.j), std::move(c));
  }
  return out;
}

CompareResult compare_variants(const CompareConfig& cfg) {
  if (cfg.variants.empty()) throw InvalidArgument("compare needs at least one variant");
  if (cfg.j_values.empty()) throw InvalidArgument("compare needs at least one j");
  if (cfg.batch.n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  for (int j : cfg.j_values)
    if (j < 0 || j > 30) throw InvalidArgument("j out of range");
  const int j_max = *std::max_element(cfg.j_values.begin(), cfg.j_values.end());
  SimConfig sim = cfg.sim;
  sim.n_points = cfg.base_T * pow2(j_max);
  sim.n_paths = 1;
  sim.validate(cfg.batch.model);

  const std::size_t rows = cfg.j_values.size();
  const std::size_t nv = cfg.variants.size();
  const std::size_t np = cfg.batch.n_paths;

  std::vector<BatchConfig> configs(nv, cfg.batch);
  for (std::size_t v = 0; v < nv; ++v) {
    configs[v].objective = cfg.variants[v].objective;
    if (cfg.variants[v].line_search) configs[v].optimizer.line_search = cfg.variants[v].line_search;
  }

  CompareResult out;
  for (const auto& v : cfg.variants) out.labels.push_back(v.label);
  out.estimates.assign(rows, std::vector<std::vector<PathEstimate>>(nv, std::vector<PathEstimate>(np)));

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rp = 0; rp < static_cast<std::ptrdiff_t>(np); ++rp) {
    const auto r = static_cast<std::size_t>(rp);
    for (std::size_t v = 0; v < nv; ++v) {
      // Each variant regenerates its data so that the hash check below is meaningful.
      const SnapshotData full = simulate_path(cfg.batch.model, sim, r);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t t = cfg.base_T * pow2(cfg.j_values[i]);
        out.estimates[i][v][r] = estimate_path(configs[v], full.prefix(t), r);
      }
    }
  }

  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t r = 0; r < np; ++r)
      for (std::size_t v = 1; v < nv; ++v)
        if (out.estimates[i][v][r].data_hash != out.estimates[i][0][r].data_hash)
          throw Error("variants saw different data for path " + std::to_string(r));
    CompareRow row;
    row.j = cfg.j_values[i];
    row.T = cfg.base_T * pow2(row.j);
    for (std::size_t v = 0; v < nv; ++v) row.per_variant.push_back(stats_or_nan(out.estimates[i][v], cfg.batch.theta_true));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace koopest
