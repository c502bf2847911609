#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "koopest/basis.hpp"
#include "koopest/estimator.hpp"
#include "koopest/objectives.hpp"
#include "koopest/sde_models.hpp"
#include "koopest/snapshot.hpp"
#include "koopest/types.hpp"

namespace koopest {

/// EML row of the reference comparison study (reported, never recomputed).
struct ReferenceRow {
  Vector bias;
  Vector rmse;
};
ReferenceRow eml_reference();

enum class RbfPlacement { DataAdaptive, FixedInterval };

struct BasisConfig {
  BasisFamily family = BasisFamily::GaussianRBF;
  int n_basis = 3;
  RbfPlacement placement = RbfPlacement::DataAdaptive;
  double lo = -1.0;
  double hi = 1.0;
  /// Centers frozen from a reference dataset; overrides placement.
  std::optional<RbfLayout> frozen;
};

BasisSet make_basis(const BasisConfig& cfg, const SnapshotData& data);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::Frobenius;
  std::optional<int> j_trunc;
  TruncationMode truncation_mode = TruncationMode::Projected;
  /// Two-pass GMM weighting.
  bool gmm_reweight = false;
  /// Replace the EDMD matrix by the model matrix at theta_true (noiseless target).
  bool planted = false;
};

/// Per-path outcome of a batch; `error` is set when estimation threw.
struct PathEstimate {
  std::size_t path_id = 0;
  Vector theta_hat;
  double objective = 0.0;
  bool converged = false;
  bool failed = false;
  int iterations = 0;
  double wall_time = 0.0;
  std::uint64_t data_hash = 0;
  std::string error;
};

struct BatchStats {
  Vector bias;
  Vector rmse;
  std::size_t n_fail = 0;
  std::size_t n_paths = 0;
  Vector theta_true;
};

/// Statistics over the non-failed estimates. Throws AllPathsFailed.
BatchStats compute_batch_stats(const std::vector<PathEstimate>& paths, const Vector& theta_true);

using DataSource = std::function<SnapshotData(std::size_t path_id)>;

/// Path k is simulate_path(model, sim, k).
DataSource simulated_source(const SdeModel& model, const SimConfig& sim);
/// Path k of an ingested multi-path dataset.
DataSource ingest_source(SnapshotData data);

struct BatchConfig {
  SdeModel model = SdeModel::ornstein_uhlenbeck();
  Vector theta_true;
  BasisConfig basis;
  ObjectiveConfig objective;
  /// theta_init defaults to theta_true when empty.
  OptimizerConfig optimizer;
  FailureRule rule = FailureRule::AbsGreaterOne;
  std::size_t n_paths = 1;
};

/// Estimates one dataset under the batch configuration; never throws.
PathEstimate estimate_path(const BatchConfig& cfg, const SnapshotData& data, std::size_t path_id);

struct BatchResult {
  BatchStats stats;
  std::vector<PathEstimate> paths;
};

/// Paths are estimated in parallel and merged in path order.
BatchResult run_batch(const BatchConfig& cfg, const DataSource& source);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
};

/// Least-squares fit of log(y) = a + b log(x).
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceConfig {
  BatchConfig batch;
  /// Simulation template; n_points is overwritten by base_T * 2^j.
  SimConfig sim;
  std::vector<int> j_values{0, 1, 2, 3, 4};
  std::size_t base_T = 500;
  std::size_t n_replicates = 200;
};

struct ConvergenceRow {
  int j = 0;
  std::size_t T = 0;
  BatchStats stats;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  /// One fit per parameter over the rows.
  std::vector<SlopeFit> slopes;
  /// Per-row per-replicate estimates.
  std::vector<std::vector<PathEstimate>> estimates;
};

/// Replicate r is one long path (substream r of the seed); the dataset at
/// T = base_T 2^j is its first T pairs.
ConvergenceResult convergence_study(const ConvergenceConfig& cfg);

struct GridCell {
  int n = 0;
  int j = 0;
  int j_used = 0;
  std::optional<Vector> theta_hat;
  bool in_band = false;
  double max_abs_error = 0.0;
  std::string error;
};

struct GridResult {
  std::vector<int> n_values;
  std::vector<int> j_values;
  std::map<std::pair<int, int>, GridCell> cells;

  /// Null for J > N and for cells not scanned.
  const GridCell* find(int n, int j) const;
};

struct EigscanConfig {
  SdeModel model = SdeModel::bounded_mean_reversion();
  Vector theta_true;
  BasisFamily family = BasisFamily::Legendre;
  std::vector<int> n_values;
  std::vector<int> j_values;
  OptimizerConfig optimizer;
  TruncationMode truncation_mode = TruncationMode::Projected;
  double band_lo = 0.9;
  double band_hi = 1.1;
  /// Interval of the fixed RBF layout.
  double lo = -1.0;
  double hi = 1.0;
};

/// One Frobenius estimate with rank-J truncation per (N, J) cell, J <= N.
GridResult eigscan(const EigscanConfig& cfg, const SnapshotData& data);

struct Variant {
  std::string label;
  ObjectiveConfig objective;
  std::optional<LineSearchKind> line_search;
};

struct CompareConfig {
  BatchConfig batch;
  SimConfig sim;
  std::vector<int> j_values{0};
  std::size_t base_T = 500;
  std::vector<Variant> variants;
};

struct CompareRow {
  int j = 0;
  std::size_t T = 0;
  std::vector<BatchStats> per_variant;
};

struct CompareResult {
  std::vector<std::string> labels;
  std::vector<CompareRow> rows;
  /// [row][variant] per-path estimates.
  std::vector<std::vector<std::vector<PathEstimate>>> estimates;
};

/// Runs every variant on the same datasets (nested prefixes as in
/// convergence_study). Throws Error if the data hashes seen by two variants differ.
CompareResult compare_variants(const CompareConfig& cfg);

}  // namespace koopest
