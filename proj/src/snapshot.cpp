#include "koopest/snapshot.hpp"

#include <cmath>
#include <cstring>

#include "koopest/errors.hpp"

namespace koopest {

SnapshotData SnapshotData::path(std::size_t k) const {
  const auto b = path_begin(k);
  const auto e = path_end(k);
  SnapshotData out;
  out.x.assign(x.begin() + static_cast<std::ptrdiff_t>(b), x.begin() + static_cast<std::ptrdiff_t>(e));
  out.y.assign(y.begin() + static_cast<std::ptrdiff_t>(b), y.begin() + static_cast<std::ptrdiff_t>(e));
  out.t_step = t_step;
  return out;
}

SnapshotData SnapshotData::prefix(std::size_t n) const {
  if (n_paths() != 1) throw InvalidArgument("prefix requires single-path data");
  if (n == 0 || n > size()) throw InvalidArgument("prefix length out of range");
  SnapshotData out;
  out.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  out.y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  out.t_step = t_step;
  return out;
}

void SnapshotData::validate() const {
  if (x.size() != y.size()) throw InvalidArgument("x and y must have equal length");
  if (x.empty()) throw InvalidArgument("snapshot data is empty");
  if (!(t_step > 0.0) || !std::isfinite(t_step)) throw InvalidArgument("t_step must be positive");
  if (path_offsets.empty() || path_offsets.front() != 0)
    throw InvalidArgument("path offsets must start at 0");
  for (std::size_t k = 1; k < path_offsets.size(); ++k)
    if (path_offsets[k] <= path_offsets[k - 1] || path_offsets[k] >= x.size())
      throw InvalidArgument("path offsets must be strictly increasing and inside the data");
}

std::uint64_t SnapshotData::content_hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(x.data(), x.size() * sizeof(double));
  feed(y.data(), y.size() * sizeof(double));
  feed(&t_step, sizeof t_step);
  return h;
}

}  // namespace koopest
