#include "koopest/sde_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "koopest/errors.hpp"

namespace koopest {

SdeModel SdeModel::from_name(std::string_view name) {
  if (name == "ou") return ornstein_uhlenbeck();
  if (name == "bmr") return bounded_mean_reversion();
  throw InvalidArgument("unknown model '" + std::string(name) + "' (expected ou|bmr)");
}

std::string_view SdeModel::name() const noexcept {
  return kind_ == ModelKind::OrnsteinUhlenbeck ? "ou" : "bmr";
}

int SdeModel::dim_theta() const noexcept { return kind_ == ModelKind::OrnsteinUhlenbeck ? 3 : 2; }

Interval SdeModel::state_space() const noexcept {
  if (kind_ == ModelKind::OrnsteinUhlenbeck)
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  return {-1.0, 1.0};
}

double SdeModel::drift(double x, const Vector& theta) const {
  if (kind_ == ModelKind::OrnsteinUhlenbeck) return theta[0] * (theta[1] - x);
  return -2.0 * theta[0] * x;
}

double SdeModel::volatility(double x, const Vector& theta) const {
  if (kind_ == ModelKind::OrnsteinUhlenbeck) return theta[2];
  return std::sqrt(2.0 * theta[1] * std::max(0.0, 1.0 - x * x));
}

double SdeModel::milstein_correction(double x, const Vector& theta) const {
  if (kind_ == ModelKind::OrnsteinUhlenbeck) return 0.0;
  // b b' = (b^2)'/2 = -2 th2 x
  return -theta[1] * x;
}

void SdeModel::check_theta(const Vector& theta) const {
  if (theta.size() != dim_theta())
    throw InvalidArgument("model '" + std::string(name()) + "' expects " +
                          std::to_string(dim_theta()) + " parameters, got " +
                          std::to_string(theta.size()));
  if (!theta.allFinite()) throw InvalidArgument("parameters must be finite");
}

bool SdeModel::in_parameter_space(const Vector& theta) const {
  if (theta.size() != dim_theta() || !theta.allFinite()) return false;
  if (kind_ == ModelKind::OrnsteinUhlenbeck) return theta[0] > 0.0;
  return theta[0] > 0.0 && theta[1] > 0.0;
}

Vector SdeModel::canonical(const Vector& theta) const {
  Vector out = theta;
  if (kind_ == ModelKind::OrnsteinUhlenbeck && out.size() == 3) out[2] = std::abs(out[2]);
  return out;
}

GeneratorCoefficients generator_coefficients(const SdeModel& model, const Vector& theta) {
  model.check_theta(theta);
  return {[model, theta](double x) { return model.drift(x, theta); },
          [model, theta](double x) {
            const double b = model.volatility(x, theta);
            return 0.5 * b * b;
          }};
}

double generator_apply(const SdeModel& model, const Vector& theta,
                       const std::function<Jet(double)>& g, double x) {
  const Jet j = g(x);
  const double b = model.volatility(x, theta);
  return model.drift(x, theta) * j.d1 + 0.5 * b * b * j.d2;
}

std::string_view scheme_name(Scheme s) noexcept {
  return s == Scheme::ExactOU ? "exact-ou" : "milstein";
}

Scheme scheme_from_name(std::string_view name) {
  if (name == "exact-ou" || name == "exact") return Scheme::ExactOU;
  if (name == "milstein") return Scheme::Milstein;
  throw InvalidArgument("unknown scheme '" + std::string(name) + "' (expected exact-ou|milstein)");
}

std::size_t SimConfig::substeps() const {
  if (scheme == Scheme::ExactOU) return 1;
  return static_cast<std::size_t>(std::llround(t_step / internal_dt));
}

void SimConfig::validate(const SdeModel& model) const {
  model.check_theta(theta);
  if (!(t_step > 0.0) || !std::isfinite(t_step)) throw InvalidArgument("t_step must be positive");
  if (n_points == 0) throw InvalidArgument("n_points must be positive");
  if (n_paths == 0) throw InvalidArgument("n_paths must be positive");
  if (x0 && !model.state_space().contains(*x0))
    throw InvalidArgument("x0 lies outside the state space");
  if (scheme == Scheme::ExactOU) {
    if (model.kind() != ModelKind::OrnsteinUhlenbeck)
      throw InvalidArgument("the exact scheme is only available for the OU model");
    if (!(theta[0] > 0.0)) throw InvalidArgument("exact OU sampling requires th1 > 0");
    return;
  }
  if (!(internal_dt > 0.0) || internal_dt > t_step * (1.0 + 1e-12))
    throw InvalidArgument("internal_dt must lie in (0, t_step]");
  const double ratio = t_step / internal_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw InvalidArgument("t_step must be an integer multiple of internal_dt");
}

OuMoments ou_transition_moments(double x, const Vector& theta, double t) {
  const double decay = std::exp(-theta[0] * t);
  const double mean = theta[1] + (x - theta[1]) * decay;
  // -expm1(-2 th1 t) = 1 - e^{-2 th1 t} without cancellation for small t
  const double var = theta[2] * theta[2] * (-std::expm1(-2.0 * theta[0] * t)) / (2.0 * theta[0]);
  return {mean, var};
}

double ou_exact_step(double x, const Vector& theta, double t, Rng& rng) {
  if (!std::isfinite(x) || !std::isfinite(t) || theta.size() != 3 || !theta.allFinite())
    throw InvalidArgument("ou_exact_step: non-finite or malformed input");
  if (!(theta[0] > 0.0) || !(t > 0.0)) throw InvalidArgument("ou_exact_step requires th1 > 0 and t > 0");
  const auto m = ou_transition_moments(x, theta, t);
  return m.mean + std::sqrt(m.variance) * rng.normal();
}

double milstein_update(double x, const SdeModel& model, const Vector& theta, double dt, double dW) {
  return x + model.drift(x, theta) * dt + model.volatility(x, theta) * dW +
         model.milstein_correction(x, theta) * (dW * dW - dt);
}

StepResult milstein_step(double x, const SdeModel& model, const Vector& theta, double dt, Rng& rng) {
  if (!std::isfinite(x) || !model.state_space().contains(x))
    throw InvalidArgument("milstein_step: x outside the closed state space");
  const double dW = std::sqrt(dt) * rng.normal();
  double next = milstein_update(x, model, theta, dt, dW);
  if (model.kind() == ModelKind::BoundedMeanReversion) {
    const double bound = 1.0 - kBoundaryEps;
    const double clamped = std::clamp(next, -bound, bound);
    if (clamped != next) return {clamped, true};
  }
  return {next, false};
}

double sample_stationary(const SdeModel& model, const Vector& theta, Rng& rng) {
  if (model.kind() == ModelKind::OrnsteinUhlenbeck) {
    if (!(theta[0] > 0.0)) throw InvalidArgument("stationary OU law requires th1 > 0");
    return theta[1] + std::abs(theta[2]) / std::sqrt(2.0 * theta[0]) * rng.normal();
  }
  if (!(theta[0] > 0.0) || !(theta[1] > 0.0))
    throw InvalidArgument("stationary bounded law requires th1, th2 > 0");
  const double shape = theta[0] / theta[1];
  const double g1 = rng.gamma(shape);
  const double g2 = rng.gamma(shape);
  const double bound = 1.0 - kBoundaryEps;
  return std::clamp(2.0 * g1 / (g1 + g2) - 1.0, -bound, bound);
}

namespace {

/// Fills n_points pairs of path k into x/y; returns the number of clamped sub-steps.
std::size_t simulate_path_into(const SdeModel& model, const SimConfig& cfg, std::size_t k, double* xs,
                               double* ys) {
  const std::size_t sub = cfg.substeps();
  const double h = cfg.scheme == Scheme::ExactOU ? cfg.t_step : cfg.t_step / static_cast<double>(sub);
  Rng rng(substream_seed(cfg.seed, k));
  double state = cfg.x0 ? *cfg.x0 : sample_stationary(model, cfg.theta, rng);
  std::size_t clamps = 0;
  for (std::size_t j = 0; j < cfg.n_points; ++j) {
    xs[j] = state;
    if (cfg.scheme == Scheme::ExactOU) {
      state = ou_exact_step(state, cfg.theta, h, rng);
    } else {
      for (std::size_t s = 0; s < sub; ++s) {
        const auto r = milstein_step(state, model, cfg.theta, h, rng);
        state = r.x;
        clamps += r.clamped ? 1 : 0;
      }
    }
    ys[j] = state;
  }
  return clamps;
}

SimMetadata make_metadata(const SdeModel& model, const SimConfig& cfg, std::size_t n_paths, std::size_t clamps) {
  SimMetadata meta;
  meta.model = std::string(model.name());
  meta.theta = cfg.theta;
  meta.t_step = cfg.t_step;
  meta.n_points = cfg.n_points;
  meta.n_paths = n_paths;
  meta.seed = cfg.seed;
  meta.scheme = std::string(scheme_name(cfg.scheme));
  meta.internal_dt =
      cfg.scheme == Scheme::ExactOU ? cfg.t_step : cfg.t_step / static_cast<double>(cfg.substeps());
  meta.clamp_count = clamps;
  return meta;
}

}  // namespace

SnapshotData simulate_path(const SdeModel& model, const SimConfig& cfg, std::size_t path_index) {
  cfg.validate(model);
  SnapshotData data;
  data.t_step = cfg.t_step;
  data.x.resize(cfg.n_points);
  data.y.resize(cfg.n_points);
  const std::size_t clamps = simulate_path_into(model, cfg, path_index, data.x.data(), data.y.data());
  data.meta = make_metadata(model, cfg, 1, clamps);
  return data;
}

SnapshotData simulate_snapshots(const SdeModel& model, const SimConfig& cfg) {
  cfg.validate(model);
  const std::size_t n = cfg.n_points;
  const std::size_t paths = cfg.n_paths;

  SnapshotData data;
  data.t_step = cfg.t_step;
  data.x.resize(n * paths);
  data.y.resize(n * paths);
  data.path_offsets.resize(paths);
  std::vector<std::size_t> clamps(paths, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kp = 0; kp < static_cast<std::ptrdiff_t>(paths); ++kp) {
    const auto k = static_cast<std::size_t>(kp);
    data.path_offsets[k] = k * n;
    clamps[k] = simulate_path_into(model, cfg, k, data.x.data() + k * n, data.y.data() + k * n);
  }

  std::size_t total = 0;
  for (auto c : clamps) total += c;
  data.meta = make_metadata(model, cfg, paths, total);
  return data;
}

}  // namespace koopest
