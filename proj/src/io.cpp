#include "koopest/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "koopest/errors.hpp"

namespace koopest::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::size_t> parse_index(std::string_view s) {
  s = trim(s);
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v(i)));
  return a;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) =
        j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
  return v;
}

}  // namespace

std::string format_vector(const Vector& v, char sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v(i));
  }
  return out;
}

Vector parse_vector(std::string_view s) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto d = parse_double(parts[i]);
    if (!d) throw InvalidArgument("not a number: '" + std::string(parts[i]) + "'");
    v(static_cast<Eigen::Index>(i)) = *d;
  }
  return v;
}

void write_snapshots_csv(std::ostream& os, const SnapshotData& data) {
  os << "path_id,index,x,y\n";
  for (std::size_t k = 0; k < data.n_paths(); ++k) {
    const auto b = data.path_begin(k);
    const auto e = data.path_end(k);
    for (std::size_t i = b; i < e; ++i)
      os << k << ',' << (i - b) << ',' << format_double(data.x[i]) << ',' << format_double(data.y[i]) << '\n';
  }
}

SnapshotData read_snapshots_csv(std::istream& is, double t_step) {
  SnapshotData data;
  data.t_step = t_step;
  data.path_offsets.clear();
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t cur_path = 0;
  std::size_t next_index = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    const auto f = split(sv, ',');
    if (!header) {
      if (f.size() != 4 || trim(f[0]) != "path_id" || trim(f[1]) != "index" || trim(f[2]) != "x" ||
          trim(f[3]) != "y")
        throw IngestError(lineno, "expected header 'path_id,index,x,y'");
      header = true;
      continue;
    }
    if (f.size() != 4) throw IngestError(lineno, "expected 4 fields, found " + std::to_string(f.size()));
    const auto pid = parse_index(f[0]);
    const auto idx = parse_index(f[1]);
    const auto x = parse_double(f[2]);
    const auto y = parse_double(f[3]);
    if (!pid || !idx) throw IngestError(lineno, "path_id and index must be non-negative integers");
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) throw IngestError(lineno, "x and y must be finite numbers");
    if (data.path_offsets.empty()) {
      if (*pid != 0) throw IngestError(lineno, "path ids must start at 0");
      data.path_offsets.push_back(0);
      cur_path = 0;
      next_index = 0;
    } else if (*pid == cur_path + 1) {
      data.path_offsets.push_back(data.x.size());
      cur_path = *pid;
      next_index = 0;
    } else if (*pid != cur_path) {
      throw IngestError(lineno, "path ids must be consecutive and grouped");
    }
    if (*idx != next_index) throw IngestError(lineno, "expected index " + std::to_string(next_index));
    ++next_index;
    data.x.push_back(*x);
    data.y.push_back(*y);
  }
  if (!header) throw IngestError(lineno + 1, "missing header");
  if (data.x.empty()) throw IngestError(lineno + 1, "no data rows");
  return data;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension();
  p += ".meta.json";
  return p;
}

Json metadata_to_json(const SimMetadata& meta, double t_step) {
  Json j;
  j["model"] = meta.model;
  j["theta"] = vector_to_json(meta.theta);
  j["t_step"] = t_step;
  j["n_points"] = meta.n_points;
  j["n_paths"] = meta.n_paths;
  j["seed"] = meta.seed;
  j["scheme"] = meta.scheme;
  j["internal_dt"] = meta.internal_dt;
  j["clamp_count"] = meta.clamp_count;
  return j;
}

SimMetadata metadata_from_json(const Json& j) {
  SimMetadata m;
  m.model = j.value("model", "");
  if (j.contains("theta")) m.theta = vector_from_json(j["theta"]);
  m.t_step = j.at("t_step").get<double>();
  m.n_points = j.value("n_points", std::size_t{0});
  m.n_paths = j.value("n_paths", std::size_t{0});
  m.seed = j.value("seed", std::uint64_t{0});
  m.scheme = j.value("scheme", "");
  m.internal_dt = j.value("internal_dt", 0.0);
  m.clamp_count = j.value("clamp_count", std::size_t{0});
  return m;
}

void save_snapshots(const std::filesystem::path& csv, const SnapshotData& data) {
  data.validate();
  {
    std::ofstream os(csv, std::ios::binary);
    if (!os) throw Error("cannot write " + csv.string());
    write_snapshots_csv(os, data);
    if (!os) throw Error("write failed: " + csv.string());
  }
  SimMetadata meta = data.meta.value_or(SimMetadata{});
  if (!data.meta) meta.n_paths = data.n_paths();
  std::ofstream js(sidecar_path(csv), std::ios::binary);
  if (!js) throw Error("cannot write " + sidecar_path(csv).string());
  js << metadata_to_json(meta, data.t_step).dump(2) << '\n';
}

SnapshotData load_snapshots(const std::filesystem::path& csv, std::optional<double> t_step) {
  std::ifstream is(csv, std::ios::binary);
  if (!is) throw Error("cannot open " + csv.string());
  std::optional<SimMetadata> meta;
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    std::ifstream js(side);
    try {
      meta = metadata_from_json(Json::parse(js));
    } catch (const nlohmann::json::exception& e) {
      throw Error("bad sidecar " + side.string() + ": " + e.what());
    }
  }
  if (!t_step && meta) t_step = meta->t_step;
  if (!t_step) throw InvalidArgument("no time step: pass one explicitly or provide " + side.string());
  if (!(*t_step > 0.0) || !std::isfinite(*t_step)) throw InvalidArgument("t_step must be positive");
  SnapshotData data = read_snapshots_csv(is, *t_step);
  data.meta = meta;
  return data;
}

Json basis_to_json(const BasisSet& basis) {
  Json j;
  j["family"] = std::string(family_name(basis.family()));
  j["n_basis"] = basis.size();
  if (basis.family() == BasisFamily::GaussianRBF) {
    j["centers"] = basis.centers();
    j["length_scale"] = basis.length_scale();
  }
  return j;
}

BasisSet basis_from_json(const Json& j) {
  try {
    const BasisFamily f = family_from_name(j.at("family").get<std::string>());
    const int n = j.at("n_basis").get<int>();
    switch (f) {
      case BasisFamily::Chebyshev:
        return BasisSet::chebyshev(n);
      case BasisFamily::Legendre:
        return BasisSet::legendre(n);
      case BasisFamily::GaussianRBF:
        break;
    }
    auto centers = j.at("centers").get<std::vector<double>>();
    if (static_cast<int>(centers.size()) != n) throw InvalidArgument("n_basis does not match the center count");
    return BasisSet::gaussian_rbf(std::move(centers), j.at("length_scale").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad basis description: ") + e.what());
  }
}

void write_matrix_csv(std::ostream& os, const Matrix& m, double t_step) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix CSV holds square matrices");
  os << "n,t_step\n" << m.rows() << ',' << format_double(t_step) << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is, double* t_step) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    while (std::getline(is, line)) {
      ++lineno;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next() || trim(line) != "n,t_step") throw IngestError(lineno, "expected header 'n,t_step'");
  if (!next()) throw IngestError(lineno + 1, "missing size line");
  const auto head = split(trim(line), ',');
  const auto n = head.size() == 2 ? parse_index(head[0]) : std::nullopt;
  const auto t = head.size() == 2 ? parse_double(head[1]) : std::nullopt;
  if (!n || !t || *n == 0) throw IngestError(lineno, "expected '<n>,<t_step>'");
  if (t_step) *t_step = *t;
  Matrix m(static_cast<Eigen::Index>(*n), static_cast<Eigen::Index>(*n));
  for (std::size_t i = 0; i < *n; ++i) {
    if (!next()) throw IngestError(lineno + 1, "missing matrix row");
    const auto f = split(trim(line), ',');
    if (f.size() != *n) throw IngestError(lineno, "expected " + std::to_string(*n) + " entries");
    for (std::size_t j = 0; j < *n; ++j) {
      const auto v = parse_double(f[j]);
      if (!v) throw IngestError(lineno, "bad number '" + std::string(f[j]) + "'");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != c) throw InvalidArgument("ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

Json koopman_to_json(const KoopmanMatrices& k) {
  Json j;
  j["t_step"] = k.t_step;
  j["n_samples"] = k.n_samples;
  j["cond_mass"] = finite_or_null(k.cond_mass);
  j["mass"] = matrix_to_json(k.mass);
  j["cross"] = matrix_to_json(k.cross);
  j["edmd"] = matrix_to_json(k.edmd);
  return j;
}

Json estimate_to_json(const EstimateResult& r) {
  Json j;
  j["theta_hat"] = vector_to_json(r.theta_hat);
  j["objective_value"] = finite_or_null(r.objective_value);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["failed"] = r.failed;
  j["gradient_norm"] = finite_or_null(r.gradient_norm);
  j["wall_time"] = r.wall_time;
  j["message"] = r.message;
  Json h = Json::array();
  for (double v : r.history) h.push_back(finite_or_null(v));
  j["history"] = h;
  return j;
}

EstimateResult estimate_from_json(const Json& j) {
  EstimateResult r;
  r.theta_hat = vector_from_json(j.at("theta_hat"));
  const auto num = [&j](const char* key) {
    return j.at(key).is_null() ? std::numeric_limits<double>::infinity() : j.at(key).get<double>();
  };
  r.objective_value = num("objective_value");
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.failed = j.at("failed").get<bool>();
  r.gradient_norm = num("gradient_norm");
  r.wall_time = j.at("wall_time").get<double>();
  r.message = j.value("message", "");
  for (const auto& v : j.value("history", Json::array()))
    r.history.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
  return r;
}

void write_batch_csv(std::ostream& os, const std::vector<PathEstimate>& paths, int dim) {
  os << "path_id";
  for (int i = 1; i <= dim; ++i) os << ",theta_" << i;
  os << ",objective,converged,failed,iters,wall_time\n";
  for (const auto& p : paths) {
    os << p.path_id;
    for (int i = 0; i < dim; ++i)
      os << ',' << (i < p.theta_hat.size() ? format_double(p.theta_hat(i)) : std::string("nan"));
    os << ',' << format_double(p.objective) << ',' << (p.converged ? 1 : 0) << ','
       << (p.failed || !p.error.empty() ? 1 : 0) << ',' << p.iterations << ',' << format_double(p.wall_time)
       << '\n';
  }
}

std::vector<PathEstimate> read_batch_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw IngestError(1, "missing header");
  ++lineno;
  const auto head = split(trim(line), ',');
  if (head.size() < 7 || trim(head[0]) != "path_id") throw IngestError(lineno, "not a batch CSV header");
  const std::size_t dim = head.size() - 6;
  std::vector<PathEstimate> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != head.size()) throw IngestError(lineno, "wrong field count");
    PathEstimate p;
    const auto id = parse_index(f[0]);
    if (!id) throw IngestError(lineno, "bad path_id");
    p.path_id = *id;
    p.theta_hat.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      const auto v = parse_double(f[1 + i]);
      if (!v) throw IngestError(lineno, "bad theta entry");
      p.theta_hat(static_cast<Eigen::Index>(i)) = *v;
    }
    const auto obj = parse_double(f[1 + dim]);
    const auto conv = parse_index(f[2 + dim]);
    const auto fail = parse_index(f[3 + dim]);
    const auto iters = parse_index(f[4 + dim]);
    const auto wall = parse_double(f[5 + dim]);
    if (!obj || !conv || !fail || !iters || !wall) throw IngestError(lineno, "bad numeric field");
    p.objective = *obj;
    p.converged = *conv != 0;
    p.failed = *fail != 0;
    p.iterations = static_cast<int>(*iters);
    p.wall_time = *wall;
    out.push_back(std::move(p));
  }
  return out;
}

Json stats_to_json(const BatchStats& s) {
  Json j;
  j["theta_true"] = vector_to_json(s.theta_true);
  j["bias"] = vector_to_json(s.bias);
  j["rmse"] = vector_to_json(s.rmse);
  j["n_fail"] = s.n_fail;
  j["n_paths"] = s.n_paths;
  return j;
}

Json convergence_to_json(const ConvergenceResult& r) {
  Json j;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json e = stats_to_json(row.stats);
    e["j"] = row.j;
    e["T"] = row.T;
    rows.push_back(e);
  }
  j["rows"] = rows;
  Json slopes = Json::array();
  for (const auto& s : r.slopes)
    slopes.push_back({{"slope", finite_or_null(s.slope)},
                      {"intercept", finite_or_null(s.intercept)},
                      {"std_error", finite_or_null(s.std_error)}});
  j["slopes"] = slopes;
  return j;
}

Json grid_to_json(const GridResult& g) {
  Json j;
  j["n_values"] = g.n_values;
  j["j_values"] = g.j_values;
  Json cells = Json::array();
  for (const auto& [key, c] : g.cells) {
    Json e;
    e["n"] = c.n;
    e["j"] = c.j;
    e["j_used"] = c.j_used;
    e["theta_hat"] = c.theta_hat ? vector_to_json(*c.theta_hat) : Json(nullptr);
    e["in_band"] = c.in_band;
    e["max_abs_error"] = c.theta_hat ? finite_or_null(c.max_abs_error) : Json(nullptr);
    if (!c.error.empty()) e["error"] = c.error;
    cells.push_back(e);
  }
  j["cells"] = cells;
  return j;
}

Json compare_to_json(const CompareResult& r) {
  Json j;
  j["variants"] = r.labels;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json e;
    e["j"] = row.j;
    e["T"] = row.T;
    Json per = Json::array();
    for (const auto& s : row.per_variant) per.push_back(stats_to_json(s));
    e["stats"] = per;
    rows.push_back(e);
  }
  j["rows"] = rows;
  return j;
}

void write_convergence_plot_data(std::ostream& os, const ConvergenceResult& r) {
  os << "j,T,param,rmse,bias,n_fail\n";
  for (const auto& row : r.rows)
    for (Eigen::Index p = 0; p < row.stats.rmse.size(); ++p)
      os << row.j << ',' << row.T << ",theta_" << (p + 1) << ',' << format_double(row.stats.rmse(p)) << ','
         << format_double(row.stats.bias(p)) << ',' << row.stats.n_fail << '\n';
}

void write_grid_plot_data(std::ostream& os, const GridResult& g) {
  os << "n,j,param,estimate,in_band,error\n";
  for (const auto& [key, c] : g.cells) {
    if (!c.theta_hat) {
      os << c.n << ',' << c.j << ",,nan,0,1\n";
      continue;
    }
    for (Eigen::Index p = 0; p < c.theta_hat->size(); ++p)
      os << c.n << ',' << c.j << ",theta_" << (p + 1) << ',' << format_double((*c.theta_hat)(p)) << ','
         << (c.in_band ? 1 : 0) << ",0\n";
  }
}

void write_compare_plot_data(std::ostream& os, const CompareResult& r) {
  os << "variant,j,T,param,rmse,bias,n_fail\n";
  for (const auto& row : r.rows)
    for (std::size_t v = 0; v < row.per_variant.size(); ++v) {
      const auto& s = row.per_variant[v];
      for (Eigen::Index p = 0; p < s.rmse.size(); ++p)
        os << r.labels[v] << ',' << row.j << ',' << row.T << ",theta_" << (p + 1) << ','
           << format_double(s.rmse(p)) << ',' << format_double(s.bias(p)) << ',' << s.n_fail << '\n';
    }
}

}  // namespace koopest::io
