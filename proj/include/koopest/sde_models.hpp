#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "koopest/rng.hpp"
#include "koopest/snapshot.hpp"
#include "koopest/types.hpp"

namespace koopest {

enum class ModelKind { OrnsteinUhlenbeck, BoundedMeanReversion };

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// A one-dimensional autonomous SDE  dX = a(X; theta) dt + b(X; theta) dW.
///
///   OrnsteinUhlenbeck:     a = th1 (th2 - x),   b = th3,                  x in R
///   BoundedMeanReversion:  a = -2 th1 x,        b = sqrt(2 th2 (1 - x^2)), x in (-1, 1)
class SdeModel {
 public:
  static SdeModel ornstein_uhlenbeck() { return SdeModel(ModelKind::OrnsteinUhlenbeck); }
  static SdeModel bounded_mean_reversion() { return SdeModel(ModelKind::BoundedMeanReversion); }
  /// Accepts "ou" or "bmr" (case-sensitive).
  static SdeModel from_name(std::string_view name);

  ModelKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  int dim_theta() const noexcept;
  Interval state_space() const noexcept;

  double drift(double x, const Vector& theta) const;
  double volatility(double x, const Vector& theta) const;
  /// The Milstein correction coefficient b b' / 2.
  double milstein_correction(double x, const Vector& theta) const;

  /// Throws InvalidArgument on wrong dimension or non-finite entries.
  void check_theta(const Vector& theta) const;
  /// Positivity constraints of the parameter set (th1 > 0 for OU; th1, th2 > 0 for BMR).
  bool in_parameter_space(const Vector& theta) const;
  /// Representative of the equivalence class of theta; OU volatility enters only squared.
  Vector canonical(const Vector& theta) const;

  friend bool operator==(const SdeModel&, const SdeModel&) = default;

 private:
  explicit SdeModel(ModelKind kind) : kind_(kind) {}
  ModelKind kind_;
};

/// Coefficients of the generator  L g = c_drift g' + c_diff g''.
struct GeneratorCoefficients {
  std::function<double(double)> c_drift;
  std::function<double(double)> c_diff;
};

GeneratorCoefficients generator_coefficients(const SdeModel& model, const Vector& theta);

/// Value and first two derivatives of a function at a point.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// a(x) g'(x) + b(x)^2/2 g''(x).
double generator_apply(const SdeModel& model, const Vector& theta,
                       const std::function<Jet(double)>& g, double x);

enum class Scheme { ExactOU, Milstein };

std::string_view scheme_name(Scheme s) noexcept;
Scheme scheme_from_name(std::string_view name);

/// Boundary margin used to keep bounded-model paths strictly inside (-1, 1).
inline constexpr double kBoundaryEps = 1e-12;

struct SimConfig {
  Vector theta;
  double t_step = 0.0;
  /// Number of snapshot pairs per path.
  std::size_t n_points = 0;
  std::size_t n_paths = 1;
  /// Initial state; nullopt draws each path's start from the stationary law.
  std::optional<double> x0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::Milstein;
  /// Milstein sub-step; t_step must be an integer multiple of it.
  double internal_dt = 0.0;

  void validate(const SdeModel& model) const;
  /// Number of internal steps per snapshot interval.
  std::size_t substeps() const;
};

struct OuMoments {
  double mean;
  double variance;
};

/// Conditional law of X_t given X_0 = x for the OU model.
OuMoments ou_transition_moments(double x, const Vector& theta, double t);

/// Exact draw of X_t | X_0 = x for the OU model.
double ou_exact_step(double x, const Vector& theta, double t, Rng& rng);

/// Deterministic Milstein map for a given Brownian increment, without clamping.
double milstein_update(double x, const SdeModel& model, const Vector& theta, double dt, double dW);

struct StepResult {
  double x;
  bool clamped;
};

/// One Milstein step with dW ~ N(0, dt). Bounded-model results are clamped into
/// [-1 + kBoundaryEps, 1 - kBoundaryEps].
StepResult milstein_step(double x, const SdeModel& model, const Vector& theta, double dt, Rng& rng);

/// Draw from the stationary law: N(th2, th3^2 / (2 th1)) for OU, the symmetric
/// Beta(th1/th2, th1/th2) law mapped to (-1, 1) for BMR.
double sample_stationary(const SdeModel& model, const Vector& theta, Rng& rng);

/// Path `path_index` of the ensemble described by cfg (cfg.n_paths is
/// ignored); identical to the corresponding slice of simulate_snapshots.
SnapshotData simulate_path(const SdeModel& model, const SimConfig& cfg, std::size_t path_index);

/// Simulates `n_paths` independent sample paths of `n_points` snapshot pairs
/// each (so x_{j+1} = y_j within a path). Path k draws from substream k of the
/// seed; the result does not depend on the number of threads.
SnapshotData simulate_snapshots(const SdeModel& model, const SimConfig& cfg);

}  // namespace koopest
