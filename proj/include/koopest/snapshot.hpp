#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "koopest/types.hpp"

namespace koopest {

/// Provenance of simulated data, written to the JSON sidecar of a snapshot CSV.
struct SimMetadata {
  std::string model;
  Vector theta;
  double t_step = 0.0;
  std::size_t n_points = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string scheme;
  double internal_dt = 0.0;
  std::size_t clamp_count = 0;
};

/// Paired snapshots (x_j, y_j) where y_j is the time-`t_step` image of x_j.
///
/// Several paths may be concatenated; `path_offsets[k]` is the index of the
/// first pair of path k, and path k ends where path k+1 starts.
struct SnapshotData {
  std::vector<double> x;
  std::vector<double> y;
  double t_step = 0.0;
  std::vector<std::size_t> path_offsets{0};
  std::optional<SimMetadata> meta;

  std::size_t size() const noexcept { return x.size(); }
  std::size_t n_paths() const noexcept { return path_offsets.size(); }
  std::size_t path_begin(std::size_t k) const { return path_offsets.at(k); }
  std::size_t path_end(std::size_t k) const {
    return k + 1 < path_offsets.size() ? path_offsets[k + 1] : x.size();
  }

  /// Copy of one path as a standalone single-path dataset.
  SnapshotData path(std::size_t k) const;
  /// First `n` pairs of a single-path dataset.
  SnapshotData prefix(std::size_t n) const;

  /// Throws InvalidArgument if the shape contract is violated.
  void validate() const;

  /// FNV-1a hash over the raw bytes of x, y and t_step.
  std::uint64_t content_hash() const noexcept;
};

}  // namespace koopest
