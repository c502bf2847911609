#include "cli.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "koopest/bench.hpp"
#include "koopest/errors.hpp"
#include "koopest/estimator.hpp"
#include "koopest/io.hpp"

namespace koopest::cli {

namespace {

using io::Json;

/// Raised for bad option values found after parsing; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option sets

struct Common {
  int threads = 0;
  std::uint64_t seed = 2024;
  std::string out;
  std::string format = "json";
  std::string plot_data;
  std::string config;
};

struct ModelOpts {
  std::string model = "ou";
  std::string theta;
};

struct SimOpts {
  std::size_t T = 501;
  double dt = 1.0 / 12;
  std::size_t paths = 1;
  std::string scheme;
  double internal_dt = 0.0;
  std::string x0;
};

struct BasisOpts {
  std::string family = "rbf";
  int n = 3;
  std::string placement = "adaptive";
  double lo = -1.0;
  double hi = 1.0;
};

struct ObjectiveOpts {
  std::string kind = "frobenius";
  int trunc = 0;
  std::string trunc_mode = "projected";
  bool gmm_reweight = false;
};

struct OptimizerOpts {
  std::string init;
  std::string line_search;
  double fd_step = 1e-6;
  double grad_tol = 1e-8;
  int max_iter = 200;
  std::string failure_rule;
};

struct Options {
  Common common;
  ModelOpts model;
  SimOpts sim;
  BasisOpts basis;
  ObjectiveOpts objective;
  OptimizerOpts opt;
  std::string data;
  double data_dt = 0.0;
  long path = -1;
  std::string paths_out;
  std::string j_values;
  std::string n_values;
  std::size_t replicates = 200;
  std::size_t base_T = 500;
  std::string variants = "alg1=frobenius,cedmd=constrained";
  double band_lo = 0.9;
  double band_hi = 1.1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--out", c.out, "output file (default: standard output)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--config", c.config, "flat key=value file of option defaults")->check(CLI::ExistingFile);
}

void add_model(CLI::App* app, ModelOpts& m) {
  app->add_option("--model", m.model, "ou or bmr")->check(CLI::IsMember({"ou", "bmr"}));
  app->add_option("--theta", m.theta, "parameter vector, comma separated");
}

void add_sim(CLI::App* app, SimOpts& s) {
  app->add_option("--T", s.T, "observations per path (pairs = T - 1)")->check(CLI::Range(2ul, 1ul << 40));
  app->add_option("--dt", s.dt, "time between observations")->check(CLI::PositiveNumber);
  app->add_option("--paths", s.paths, "number of paths")->check(CLI::PositiveNumber);
  app->add_option("--scheme", s.scheme, "exact or milstein (default: exact for ou)")
      ->check(CLI::IsMember({"exact", "exact-ou", "milstein"}));
  app->add_option("--internal-dt", s.internal_dt, "Milstein sub-step (default: dt)")->check(CLI::PositiveNumber);
  app->add_option("--x0", s.x0, "initial state or 'stationary' (default: theta_2 for ou)");
}

void add_basis(CLI::App* app, BasisOpts& b) {
  app->add_option("--basis", b.family, "rbf, chebyshev or legendre")
      ->check(CLI::IsMember({"rbf", "chebyshev", "legendre"}));
  app->add_option("--n", b.n, "number of basis functions")->check(CLI::PositiveNumber);
  app->add_option("--rbf-placement", b.placement, "adaptive or fixed")->check(CLI::IsMember({"adaptive", "fixed"}));
  app->add_option("--lo", b.lo, "left end of the fixed RBF interval");
  app->add_option("--hi", b.hi, "right end of the fixed RBF interval");
}

void add_objective(CLI::App* app, ObjectiveOpts& o) {
  app->add_option("--objective", o.kind, "frobenius, operator, constrained or gmm")
      ->check(CLI::IsMember({"frobenius", "operator", "constrained", "gmm"}));
  app->add_option("--trunc", o.trunc, "eigen-truncation rank J (0: none)")->check(CLI::NonNegativeNumber);
  app->add_option("--trunc-mode", o.trunc_mode, "projected: fit the retained modes only; target: truncate the data side")
      ->check(CLI::IsMember({"projected", "target"}));
  app->add_flag("--gmm-reweight", o.gmm_reweight, "two-pass GMM weighting");
}

void add_optimizer(CLI::App* app, OptimizerOpts& o, bool init_required) {
  auto* init = app->add_option("--init", o.init, "initial parameter vector, comma separated");
  if (init_required) init->required();
  app->add_option("--line-search", o.line_search, "backtracking or hager-zhang")
      ->check(CLI::IsMember({"backtracking", "hager-zhang"}));
  app->add_option("--fd-step", o.fd_step, "relative finite-difference step")->check(CLI::PositiveNumber);
  app->add_option("--grad-tol", o.grad_tol, "gradient tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", o.max_iter, "iteration limit")->check(CLI::PositiveNumber);
  app->add_option("--failure-rule", o.failure_rule, "abs1 or none")->check(CLI::IsMember({"abs1", "none"}));
}

// ---------------------------------------------------------------------------
// Conversions

Vector parse_theta(const std::string& s, const SdeModel& model, const char* what) {
  Vector v;
  try {
    v = io::parse_vector(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
  if (v.size() != model.dim_theta())
    throw ConfigError(std::string(what) + " needs " + std::to_string(model.dim_theta()) + " entries for model " +
                      std::string(model.name()));
  return v;
}

Vector default_theta(const SdeModel& model) {
  return model.kind() == ModelKind::OrnsteinUhlenbeck ? Vector{{0.2, 0.08, 0.03}} : Vector{{1.0, 1.0}};
}

Vector theta_of(const ModelOpts& m, const SdeModel& model) {
  return m.theta.empty() ? default_theta(model) : parse_theta(m.theta, model, "--theta");
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int a = std::stoi(item.substr(0, colon));
        const int b = std::stoi(item.substr(colon + 1));
        for (int k = a; k <= b; ++k) out.push_back(k);
      }
    }
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": expected integers or ranges a:b, got '" + s + "'");
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

SimConfig sim_config(const Options& o, const SdeModel& model, const Vector& theta) {
  SimConfig c;
  c.theta = theta;
  c.t_step = o.sim.dt;
  c.n_points = o.sim.T - 1;
  c.n_paths = o.sim.paths;
  c.seed = o.common.seed;
  const bool ou = model.kind() == ModelKind::OrnsteinUhlenbeck;
  c.scheme = o.sim.scheme.empty() ? (ou ? Scheme::ExactOU : Scheme::Milstein) : scheme_from_name(o.sim.scheme);
  c.internal_dt = o.sim.internal_dt > 0 ? o.sim.internal_dt : o.sim.dt;
  if (o.sim.x0 == "stationary") {
    c.x0.reset();
  } else if (!o.sim.x0.empty()) {
    const auto v = io::parse_double(o.sim.x0);
    if (!v) throw ConfigError("--x0: expected a number or 'stationary'");
    c.x0 = *v;
  } else if (ou) {
    c.x0 = theta[1];
  }
  try {
    c.validate(model);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

BasisConfig basis_config(const BasisOpts& b) {
  BasisConfig c;
  c.family = family_from_name(b.family);
  c.n_basis = b.n;
  c.placement = b.placement == "fixed" ? RbfPlacement::FixedInterval : RbfPlacement::DataAdaptive;
  c.lo = b.lo;
  c.hi = b.hi;
  return c;
}

ObjectiveConfig objective_config(const ObjectiveOpts& o) {
  ObjectiveConfig c;
  c.kind = objective_from_name(o.kind);
  if (o.trunc > 0) c.j_trunc = o.trunc;
  c.truncation_mode = truncation_mode_from_name(o.trunc_mode);
  c.gmm_reweight = o.gmm_reweight;
  return c;
}

OptimizerConfig optimizer_config(const OptimizerOpts& o, const SdeModel& model) {
  OptimizerConfig c;
  if (!o.line_search.empty()) c.line_search = line_search_from_name(o.line_search);
  c.fd_step = o.fd_step;
  c.grad_tol = o.grad_tol;
  c.max_iter = o.max_iter;
  if (!o.init.empty()) c.theta_init = parse_theta(o.init, model, "--init");
  return c;
}

FailureRule failure_rule(const std::string& s, FailureRule fallback) {
  if (s.empty()) return fallback;
  return s == "abs1" ? FailureRule::AbsGreaterOne : FailureRule::None;
}

SnapshotData load_data(const Options& o) {
  auto d = io::load_snapshots(o.data, o.data_dt > 0 ? std::optional<double>(o.data_dt) : std::nullopt);
  if (o.path >= 0) {
    if (static_cast<std::size_t>(o.path) >= d.n_paths())
      throw ConfigError("--path " + std::to_string(o.path) + " but the data has " + std::to_string(d.n_paths()) +
                        " paths");
    d = d.path(static_cast<std::size_t>(o.path));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Output

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot write " + path);
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }
  void finish(const std::string& path) {
    os_->flush();
    if (!*os_) throw Error("write failed: " + (path.empty() ? std::string("standard output") : path));
  }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  Sink s(path, fallback);
  write(*s);
  s.finish(path);
}

void write_stats_csv(std::ostream& os, const BatchStats& s) {
  os << "param,bias,rmse,n_fail,n_paths\n";
  for (Eigen::Index j = 0; j < s.bias.size(); ++j)
    os << "theta_" << j + 1 << ',' << io::format_double(s.bias[j]) << ',' << io::format_double(s.rmse[j]) << ','
       << s.n_fail << ',' << s.n_paths << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands

int run_simulate(const Options& o, std::ostream& out) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto cfg = sim_config(o, model, theta_of(o.model, model));
  const auto data = simulate_snapshots(model, cfg);
  if (o.common.format == "csv") {
    if (o.common.out.empty()) {
      io::write_snapshots_csv(out, data);
    } else {
      io::save_snapshots(o.common.out, data);
    }
    return kExitOk;
  }
  Json j;
  j["metadata"] = io::metadata_to_json(*data.meta, data.t_step);
  Json paths = Json::array();
  for (std::size_t k = 0; k < data.n_paths(); ++k) {
    const auto p = data.path(k);
    paths.push_back({{"path_id", k}, {"x", p.x}, {"y", p.y}});
  }
  j["paths"] = paths;
  emit(o.common.out, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return kExitOk;
}

int run_estimate(const Options& o, std::ostream& out) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto data = load_data(o);
  const auto basis = make_basis(basis_config(o.basis), data);
  const auto ocfg = objective_config(o.objective);
  ObjectiveSpec spec;
  spec.kind = ocfg.kind;
  spec.j_trunc = ocfg.j_trunc;
  spec.truncation_mode = ocfg.truncation_mode;
  spec.problem = std::make_shared<Problem>(make_problem(model, basis, data));
  const auto opt = optimizer_config(o.opt, model);
  const auto rule = failure_rule(o.opt.failure_rule, FailureRule::None);
  const auto r = ocfg.gmm_reweight ? estimate_gmm_reweighted(spec, opt, rule) : estimate(spec, opt, rule);
  emit(o.common.out, out, [&](std::ostream& os) {
    if (o.common.format == "csv") {
      PathEstimate p;
      p.theta_hat = r.theta_hat;
      p.objective = r.objective_value;
      p.converged = r.converged;
      p.failed = r.failed;
      p.iterations = r.iterations;
      p.wall_time = r.wall_time;
      io::write_batch_csv(os, {p}, model.dim_theta());
    } else {
      os << io::estimate_to_json(r).dump(2) << '\n';
    }
  });
  return kExitOk;
}

BatchConfig batch_config(const Options& o, const SdeModel& model, const Vector& theta) {
  BatchConfig b;
  b.model = model;
  b.theta_true = theta;
  b.basis = basis_config(o.basis);
  b.objective = objective_config(o.objective);
  b.optimizer = optimizer_config(o.opt, model);
  b.rule = failure_rule(o.opt.failure_rule, model.kind() == ModelKind::OrnsteinUhlenbeck ? FailureRule::AbsGreaterOne
                                                                                         : FailureRule::None);
  b.n_paths = o.sim.paths;
  return b;
}

int run_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto theta = theta_of(o.model, model);
  auto cfg = batch_config(o, model, theta);
  DataSource source;
  if (!o.data.empty()) {
    auto data = load_data(o);
    cfg.n_paths = data.n_paths();
    source = ingest_source(std::move(data));
  } else {
    source = simulated_source(model, sim_config(o, model, theta));
  }
  const auto res = run_batch(cfg, source);
  if (res.stats.n_fail > 0) err << res.stats.n_fail << " of " << res.stats.n_paths << " paths failed\n";
  if (!o.paths_out.empty())
    emit(o.paths_out, out, [&](std::ostream& os) { io::write_batch_csv(os, res.paths, model.dim_theta()); });
  emit(o.common.out, out, [&](std::ostream& os) {
    if (o.common.format == "csv") {
      write_stats_csv(os, res.stats);
      return;
    }
    Json j;
    j["stats"] = io::stats_to_json(res.stats);
    if (model.kind() == ModelKind::OrnsteinUhlenbeck) {
      const auto ref = eml_reference();
      j["reference_eml"] = {{"bias", std::vector<double>(ref.bias.begin(), ref.bias.end())},
                            {"rmse", std::vector<double>(ref.rmse.begin(), ref.rmse.end())}};
    }
    os << j.dump(2) << '\n';
  });
  return kExitOk;
}

int run_converge(const Options& o, std::ostream& out) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto theta = theta_of(o.model, model);
  ConvergenceConfig c;
  c.batch = batch_config(o, model, theta);
  c.sim = sim_config(o, model, theta);
  c.j_values = parse_int_list(o.j_values.empty() ? "0:4" : o.j_values, "--j");
  c.base_T = o.base_T;
  c.n_replicates = o.replicates;
  const auto r = convergence_study(c);
  if (!o.common.plot_data.empty())
    emit(o.common.plot_data, out, [&](std::ostream& os) { io::write_convergence_plot_data(os, r); });
  emit(o.common.out, out, [&](std::ostream& os) {
    if (o.common.format == "csv")
      io::write_convergence_plot_data(os, r);
    else
      os << io::convergence_to_json(r).dump(2) << '\n';
  });
  return kExitOk;
}

int run_eigscan(const Options& o, std::ostream& out) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto theta = theta_of(o.model, model);
  SnapshotData data;
  if (!o.data.empty()) {
    data = load_data(o);
  } else {
    auto sim = sim_config(o, model, theta);
    sim.n_paths = 1;
    data = simulate_snapshots(model, sim);
  }
  EigscanConfig c;
  c.model = model;
  c.theta_true = theta;
  c.family = family_from_name(o.basis.family);
  c.n_values = parse_int_list(o.n_values.empty() ? "2:8" : o.n_values, "--n-values");
  c.j_values = o.j_values.empty() ? c.n_values : parse_int_list(o.j_values, "--j-values");
  c.optimizer = optimizer_config(o.opt, model);
  if (c.optimizer.theta_init.size() == 0) c.optimizer.theta_init = theta;
  c.band_lo = o.band_lo;
  c.truncation_mode = truncation_mode_from_name(o.objective.trunc_mode);
  c.band_hi = o.band_hi;
  c.lo = o.basis.lo;
  c.hi = o.basis.hi;
  const auto g = eigscan(c, data);
  if (!o.common.plot_data.empty())
    emit(o.common.plot_data, out, [&](std::ostream& os) { io::write_grid_plot_data(os, g); });
  emit(o.common.out, out, [&](std::ostream& os) {
    if (o.common.format == "csv")
      io::write_grid_plot_data(os, g);
    else
      os << io::grid_to_json(g).dump(2) << '\n';
  });
  return kExitOk;
}

std::vector<Variant> parse_variants(const std::string& s, const ObjectiveConfig& base) {
  std::vector<Variant> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--variants: expected label=objective[:line-search], got '" + item + "'");
    Variant v;
    v.label = item.substr(0, eq);
    std::string rest = item.substr(eq + 1);
    const auto colon = rest.find(':');
    v.objective = base;
    try {
      v.objective.kind = objective_from_name(rest.substr(0, colon));
      if (colon != std::string::npos) v.line_search = line_search_from_name(rest.substr(colon + 1));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--variants: ") + e.what());
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--variants is empty");
  return out;
}

int run_compare(const Options& o, std::ostream& out) {
  const auto model = SdeModel::from_name(o.model.model);
  const auto theta = theta_of(o.model, model);
  CompareConfig c;
  c.batch = batch_config(o, model, theta);
  c.sim = sim_config(o, model, theta);
  c.j_values = parse_int_list(o.j_values.empty() ? "0:2" : o.j_values, "--j");
  c.base_T = o.base_T;
  c.variants = parse_variants(o.variants, c.batch.objective);
  const auto r = compare_variants(c);
  if (!o.common.plot_data.empty())
    emit(o.common.plot_data, out, [&](std::ostream& os) { io::write_compare_plot_data(os, r); });
  emit(o.common.out, out, [&](std::ostream& os) {
    if (o.common.format == "csv")
      io::write_compare_plot_data(os, r);
    else
      os << io::compare_to_json(r).dump(2) << '\n';
  });
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Config files

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Turns `key = value` lines into `--key=value` tokens for the given subcommand.
std::vector<std::string> config_tokens(const std::string& path, const CLI::App& sub) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config" || sub.get_option_no_throw("--" + key) == nullptr)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + sub.get_name());
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Parameter estimation for one-dimensional SDEs from Koopman/EDMD matrices", "koopest"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "simulate sample paths to CSV");
  add_common(sim, o.common);
  add_model(sim, o.model);
  add_sim(sim, o.sim);

  auto* est = app.add_subcommand("estimate", "estimate parameters from a snapshot CSV");
  add_common(est, o.common);
  add_model(est, o.model);
  add_basis(est, o.basis);
  add_objective(est, o.objective);
  add_optimizer(est, o.opt, true);

  auto* bench = app.add_subcommand("bench", "bias/RMSE/failure statistics over many paths");
  auto* conv = app.add_subcommand("converge", "RMSE against data length with log-log slopes");
  auto* cmp = app.add_subcommand("compare", "several objectives on the same datasets");
  auto* scan = app.add_subcommand("eigscan", "estimates over a grid of basis sizes and truncation ranks");
  for (auto* s : {bench, conv, cmp, scan}) {
    add_common(s, o.common);
    add_model(s, o.model);
    add_sim(s, o.sim);
    add_basis(s, o.basis);
    add_objective(s, o.objective);
    add_optimizer(s, o.opt, false);
    s->add_option("--plot-data", o.common.plot_data, "long-format CSV for plotting");
  }
  for (auto* s : {est, bench, scan}) {
    s->add_option("--data", o.data, "snapshot CSV (t_step from its sidecar unless --data-dt)")
        ->check(CLI::ExistingFile);
    s->add_option("--data-dt", o.data_dt, "time step of the snapshot CSV")->check(CLI::PositiveNumber);
  }
  est->add_option("--path", o.path, "use only this path of the data")->check(CLI::NonNegativeNumber);
  bench->add_option("--paths-out", o.paths_out, "per-path estimates CSV");
  for (auto* s : {conv, cmp}) {
    s->add_option("--j", o.j_values, "exponents j of T = base_T 2^j (list or a:b)");
    s->add_option("--base-T", o.base_T, "snapshot pairs at j = 0")->check(CLI::PositiveNumber);
  }
  conv->add_option("--replicates", o.replicates, "independent replicates")->check(CLI::PositiveNumber);
  cmp->add_option("--variants", o.variants, "label=objective[:line-search],...");
  scan->add_option("--n-values", o.n_values, "basis sizes N (list or a:b)");
  scan->add_option("--j-values", o.j_values, "truncation ranks J (default: the N values)");
  scan->add_option("--band-lo", o.band_lo, "lower edge of the accuracy band");
  scan->add_option("--band-hi", o.band_hi, "upper edge of the accuracy band");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty()) {
      if (const auto path = find_config(args)) {
        const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
        if (sub == nullptr) throw ConfigError("--config must follow a subcommand");
        auto extra = config_tokens(*path, *sub);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
      }
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (o.common.threads > 0) omp_set_num_threads(o.common.threads);
    if (sim->parsed()) return run_simulate(o, out);
    if (est->parsed()) return run_estimate(o, out);
    if (bench->parsed()) return run_bench(o, out, err);
    if (conv->parsed()) return run_converge(o, out);
    if (cmp->parsed()) return run_compare(o, out);
    if (scan->parsed()) {
      // The grid study is a bounded-model experiment: 100 time units sampled every 2^-10.
      if (scan->count("--model") == 0) o.model.model = "bmr";
      if (scan->count("--basis") == 0) o.basis.family = "legendre";
      if (scan->count("--dt") == 0) o.sim.dt = std::ldexp(1.0, -10);
      if (scan->count("--T") == 0) o.sim.T = static_cast<std::size_t>(std::llround(100.0 / o.sim.dt)) + 1;
      return run_eigscan(o, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IngestError& e) {
    err << "error: malformed input at " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace koopest::cli
