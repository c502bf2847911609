#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopest/basis.hpp"
#include "koopest/bench.hpp"
#include "koopest/estimator.hpp"
#include "koopest/koopman.hpp"
#include "koopest/snapshot.hpp"

namespace koopest::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
/// Parses a full token as a double; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::string format_vector(const Vector& v, char sep = ',');
/// Comma-separated list of doubles; throws InvalidArgument.
Vector parse_vector(std::string_view s);

/// CSV with header `path_id,index,x,y`, one row per snapshot pair.
void write_snapshots_csv(std::ostream& os, const SnapshotData& data);
/// Throws IngestError with the 1-based line number of the first bad line.
/// Rows must be grouped by path (ids 0, 1, ...) with consecutive indices from 0.
SnapshotData read_snapshots_csv(std::istream& is, double t_step);

/// `<stem>.meta.json` next to a CSV path.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);
Json metadata_to_json(const SimMetadata& meta, double t_step);
SimMetadata metadata_from_json(const Json& j);

/// Writes the CSV and, when metadata or a t_step is present, its sidecar.
void save_snapshots(const std::filesystem::path& csv, const SnapshotData& data);
/// Reads the CSV; t_step comes from the override or else the sidecar.
SnapshotData load_snapshots(const std::filesystem::path& csv, std::optional<double> t_step = {});

Json basis_to_json(const BasisSet& basis);
BasisSet basis_from_json(const Json& j);

/// Header `n,t_step`, then the values, then n rows of n entries.
void write_matrix_csv(std::ostream& os, const Matrix& m, double t_step);
Matrix read_matrix_csv(std::istream& is, double* t_step = nullptr);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json koopman_to_json(const KoopmanMatrices& k);

Json estimate_to_json(const EstimateResult& r);
EstimateResult estimate_from_json(const Json& j);

/// Header `path_id,theta_1..theta_d,objective,converged,failed,iters,wall_time`.
void write_batch_csv(std::ostream& os, const std::vector<PathEstimate>& paths, int dim);
std::vector<PathEstimate> read_batch_csv(std::istream& is);

Json stats_to_json(const BatchStats& s);
Json convergence_to_json(const ConvergenceResult& r);
Json grid_to_json(const GridResult& g);
Json compare_to_json(const CompareResult& r);

/// Long-format plot data: `j,T,param,rmse,bias,n_fail`.
void write_convergence_plot_data(std::ostream& os, const ConvergenceResult& r);
/// Long-format plot data: `n,j,param,estimate,in_band,error`.
void write_grid_plot_data(std::ostream& os, const GridResult& g);
/// Long-format plot data: `variant,j,T,param,rmse,bias,n_fail`.
void write_compare_plot_data(std::ostream& os, const CompareResult& r);

}  // namespace koopest::io
