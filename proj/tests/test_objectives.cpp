#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "koopest/errors.hpp"
#include "koopest/kernels.hpp"
#include "koopest/objectives.hpp"
#include "oracles.hpp"

using namespace koopest;

namespace {

const Vector kOu{{0.2, 0.08, 0.03}};
const auto kOuModel = SdeModel::ornstein_uhlenbeck();

SnapshotData ou_data(std::size_t n, std::uint64_t seed, std::size_t path = 0) {
  SimConfig c;
  c.theta = kOu;
  c.t_step = 1.0 / 12;
  c.n_points = n;
  c.x0 = 0.08;
  c.seed = seed;
  c.scheme = Scheme::ExactOU;
  return simulate_path(kOuModel, c, path);
}

std::shared_ptr<Problem> rbf_problem(const SnapshotData& d, int n = 3) {
  return std::make_shared<Problem>(
      make_problem(kOuModel, BasisSet::gaussian_rbf(make_rbf_centers(d.x, n)), d));
}

ObjectiveSpec spec_of(ObjectiveKind kind, std::shared_ptr<const Problem> p) {
  ObjectiveSpec s;
  s.kind = kind;
  s.problem = std::move(p);
  return s;
}

/// Replaces the data side so that theta0 reproduces it exactly.
void plant(Problem& p, const Vector& theta0) {
  const Matrix k = ProjectedKoopman(p.tmpl, p.koop.mass, p.koop.t_step)(theta0);
  p.koop.edmd = k;
  p.psi.psi_y = k * p.psi.psi_x;
}

double min_time_per_call(const Objective& f, const Vector& theta, int calls, int repeats) {
  double best = 1e300;
  volatile double sink = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < calls; ++i) sink = sink + f(theta);
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count() / calls);
  }
  return best;
}

/// Median over rounds of the time ratio g/f, with f and g timed back to back
/// in each round so that clock drift hits both alike.
double interleaved_time_ratio(const Objective& f, const Objective& g, const Vector& theta, int calls, int rounds) {
  std::vector<double> ratios;
  for (int r = 0; r < rounds; ++r) {
    double tf = 0.0;
    double tg = 0.0;
    if (r % 2) {
      tg = min_time_per_call(g, theta, calls, 1);
      tf = min_time_per_call(f, theta, calls, 1);
    } else {
      tf = min_time_per_call(f, theta, calls, 1);
      tg = min_time_per_call(g, theta, calls, 1);
    }
    ratios.push_back(tg / tf);
  }
  std::nth_element(ratios.begin(), ratios.begin() + rounds / 2, ratios.end());
  return ratios[static_cast<std::size_t>(rounds / 2)];
}

}  // namespace

TEST_CASE("objective names") {
  for (auto k : {ObjectiveKind::Frobenius, ObjectiveKind::OperatorNorm, ObjectiveKind::ConstrainedEDMD,
                 ObjectiveKind::GMM})
    CHECK(objective_from_name(objective_name(k)) == k);
  CHECK_THROWS_AS(objective_from_name("likelihood"), InvalidArgument);
}

TEST_CASE("constant basis has zero Frobenius objective") {
  const auto d = ou_data(200, 1);
  auto p = std::make_shared<Problem>(make_problem(kOuModel, BasisSet::chebyshev(1), d));
  const auto s = spec_of(ObjectiveKind::Frobenius, p);
  for (const Vector& th : {kOu, Vector{{0.5, -0.3, 0.2}}, Vector{{3.0, 0.0, 1.0}}})
    CHECK(frobenius_objective(s, th) == doctest::Approx(0.0).epsilon(1e-24));
}

TEST_CASE("planted solutions are zeros of every objective") {
  const auto d = ou_data(600, 2);
  auto p = rbf_problem(d);
  plant(*p, kOu);
  for (auto kind : {ObjectiveKind::Frobenius, ObjectiveKind::OperatorNorm, ObjectiveKind::ConstrainedEDMD,
                    ObjectiveKind::GMM}) {
    const Objective f(spec_of(kind, p));
    CAPTURE(objective_name(kind));
    CHECK(f(kOu) < 1e-12);
    for (const Vector& th : {Vector{{0.25, 0.08, 0.03}}, Vector{{0.2, 0.07, 0.03}}, Vector{{0.2, 0.08, 0.05}}})
      CHECK(f(th) > 1e-10);
  }
}

TEST_CASE("sentinel outside the parameter set and on overflow") {
  const auto d = ou_data(300, 3);
  auto p = rbf_problem(d);
  const Objective f(spec_of(ObjectiveKind::Frobenius, p));
  CHECK(std::isinf(f(Vector{{-0.1, 0.08, 0.03}})));
  CHECK(std::isinf(f(Vector{{0.0, 0.08, 0.03}})));
  CHECK(std::isinf(f(Vector{{0.2, NAN, 0.03}})));
  CHECK(std::isfinite(f(Vector{{0.2, 0.08, -0.03}})));
  CHECK(f(Vector{{0.2, 0.08, -0.03}}) == f(kOu));

  auto q = std::make_shared<Problem>();
  q->model = kOuModel;
  q->koop.mass = Matrix::Identity(1, 1);
  q->koop.edmd = Matrix::Identity(1, 1);
  q->koop.t_step = 1.0;
  q->tmpl.model = kOuModel;
  q->tmpl.terms = {Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  const Objective g(spec_of(ObjectiveKind::Frobenius, q));
  CHECK(std::isinf(g(Vector{{1000.0, 1000.0, 0.1}})));
  CHECK(std::isfinite(g(Vector{{0.1, 0.1, 0.1}})));
}

TEST_CASE("Frobenius objective with truncation") {
  const auto d = ou_data(800, 4);
  auto p = rbf_problem(d, 4);
  ObjectiveSpec s = spec_of(ObjectiveKind::Frobenius, p);
  s.j_trunc = 2;
  const Objective f(s);
  REQUIRE(f.truncation() != nullptr);
  const auto tr = eigen_truncate(p->koop.edmd, 2);
  CHECK(f.target() == tr.matrix);
  SUBCASE("projected residual") {
    const Matrix& proj = f.truncation()->projector;
    CHECK((proj * proj - proj).norm() < 1e-8 * proj.norm());
    CHECK((p->koop.edmd * proj - tr.matrix).norm() < 1e-8 * tr.matrix.norm());
    const Matrix resid = (f.model_matrix(kOu) - p->koop.edmd) * proj;
    CHECK(f(kOu) == doctest::Approx(resid.squaredNorm()).epsilon(1e-8));
  }
  SUBCASE("target-only residual") {
    s.truncation_mode = TruncationMode::TargetOnly;
    const Objective g(s);
    CHECK(g(kOu) == doctest::Approx((g.model_matrix(kOu) - g.target()).squaredNorm()));
    CHECK(g(kOu) != f(kOu));
  }
  CHECK(truncation_mode_from_name("target") == TruncationMode::TargetOnly);
  CHECK(truncation_mode_name(TruncationMode::Projected) == "projected");
  CHECK_THROWS_AS(truncation_mode_from_name("both"), InvalidArgument);
  s.j_trunc = 4;
  CHECK(Objective(s).target() == p->koop.edmd);
  s.j_trunc = 5;
  CHECK_THROWS_AS(Objective{s}, InvalidArgument);
  s.j_trunc = 2;
  s.kind = ObjectiveKind::ConstrainedEDMD;
  CHECK_THROWS_AS(Objective{s}, InvalidArgument);
}

TEST_CASE("Frobenius objective at the truth shrinks with more data") {
  std::vector<double> small, large;
  for (std::size_t r = 0; r < 50; ++r) {
    const auto big = ou_data(256000, 5, r);
    small.push_back(frobenius_objective(spec_of(ObjectiveKind::Frobenius, rbf_problem(big.prefix(500))), kOu));
    large.push_back(frobenius_objective(spec_of(ObjectiveKind::Frobenius, rbf_problem(big)), kOu));
  }
  std::nth_element(small.begin(), small.begin() + 25, small.end());
  std::nth_element(large.begin(), large.begin() + 25, large.end());
  CHECK(small[25] >= 10 * large[25]);
}

TEST_CASE("operator norm") {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> nd;
  auto rnd = [&](int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = nd(eng);
    return m;
  };
  SUBCASE("zero matrix") { CHECK(mass_operator_norm(Matrix::Zero(3, 3), Matrix::Identity(3, 3)) == 0.0); }
  SUBCASE("unit mass gives the spectral norm") {
    for (int n : {2, 4, 7}) {
      const Matrix b = rnd(n);
      CHECK(std::abs(mass_operator_norm(b, Matrix::Identity(n, n)) - oracle::spectral_norm(b)) < 1e-8);
    }
  }
  SUBCASE("definition as a supremum over coefficient vectors") {
    const Matrix r = rnd(4);
    const Matrix m = r * r.transpose() + 0.5 * Matrix::Identity(4, 4);
    const Matrix b = rnd(4);
    const double norm = mass_operator_norm(b, m);
    double best = 0.0;
    for (int i = 0; i < 20000; ++i) {
      Vector c(4);
      for (int j = 0; j < 4; ++j) c[j] = nd(eng);
      best = std::max(best, std::sqrt(c.dot(b.transpose() * m * b * c) / c.dot(m * c)));
    }
    CHECK(best <= norm * (1 + 1e-12));
    CHECK(best >= 0.9 * norm);
  }
  SUBCASE("reordering the basis leaves the norm unchanged") {
    const Matrix r = rnd(5);
    const Matrix m = r * r.transpose() + Matrix::Identity(5, 5);
    const Matrix b = rnd(5);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    const Matrix pm = perm * m * perm.transpose();
    const Matrix pb = perm * b * perm.transpose();
    CHECK(std::abs(mass_operator_norm(pb, pm) - mass_operator_norm(b, m)) < 1e-8);
  }
  SUBCASE("mass must be positive definite") {
    CHECK_THROWS_AS(mass_operator_norm(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), InvalidArgument);
  }
  SUBCASE("objective uses the EDMD difference") {
    const auto d = ou_data(500, 8);
    auto p = rbf_problem(d);
    const Objective f(spec_of(ObjectiveKind::OperatorNorm, p));
    CHECK(f(kOu) == doctest::Approx(mass_operator_norm(f.model_matrix(kOu) - p->koop.edmd, p->koop.mass)));
  }
}

TEST_CASE("constrained EDMD objective") {
  SUBCASE("deterministic contraction data is matched exactly") {
    const double th1 = 0.5, th2 = 0.1, t = 0.2;
    SnapshotData d;
    d.t_step = t;
    for (double x = -1.0; x <= 1.0; x += 0.1) {
      d.x.push_back(x);
      d.y.push_back(th2 + (x - th2) * std::exp(-th1 * t));
    }
    auto p = std::make_shared<Problem>(make_problem(kOuModel, BasisSet::chebyshev(2), d));
    CHECK(constrained_edmd_objective(spec_of(ObjectiveKind::ConstrainedEDMD, p), Vector{{th1, th2, 0.0}}) < 1e-26);
    CHECK(constrained_edmd_objective(spec_of(ObjectiveKind::ConstrainedEDMD, p), Vector{{th1, th2 + 0.1, 0.0}}) > 1e-6);
  }
  SUBCASE("doubling map is reproduced by its EDMD matrix") {
    SnapshotData d;
    d.x = {1.0, 2.0};
    d.y = {2.0, 4.0};
    d.t_step = 1.0;
    const auto m = build_snapshot_matrices(BasisSet::chebyshev(2), d);
    const Matrix k = Vector{{1.0, 2.0}}.asDiagonal();
    CHECK(kernels::residual_sum_squares(k, m.psi_x, m.psi_y) == 0.0);
  }
  SUBCASE("single snapshot with the identity") {
    SnapshotData d;
    d.x = {0.3};
    d.y = {-0.2};
    d.t_step = 1.0;
    const auto b = BasisSet::legendre(3);
    const auto m = build_snapshot_matrices(b, d);
    CHECK(kernels::residual_sum_squares(Matrix::Identity(3, 3), m.psi_x, m.psi_y) ==
          doctest::Approx((b.eval(0.3, 0) - b.eval(-0.2, 0)).squaredNorm()));
  }
  SUBCASE("additive over datasets") {
    const auto a = ou_data(300, 9, 0);
    const auto b = ou_data(500, 9, 1);
    SnapshotData both = a;
    both.x.insert(both.x.end(), b.x.begin(), b.x.end());
    both.y.insert(both.y.end(), b.y.begin(), b.y.end());
    both.path_offsets = {0, 300};
    const auto basis = BasisSet::chebyshev(2);
    const Vector th{{0.3, 0.05, 0.02}};
    auto f = [&](const SnapshotData& d) {
      return constrained_edmd_objective(
          spec_of(ObjectiveKind::ConstrainedEDMD, std::make_shared<Problem>(make_problem(kOuModel, basis, d))), th);
    };
    CHECK(f(both) == doctest::Approx(f(a) + f(b)).epsilon(1e-10));
  }
}

TEST_CASE("GMM objective") {
  SUBCASE("identity weight equals no weight") {
    const auto d = ou_data(400, 10);
    auto p = rbf_problem(d);
    ObjectiveSpec s = spec_of(ObjectiveKind::GMM, p);
    const double plain = gmm_objective(s, kOu);
    s.gmm_covariance = Matrix::Identity(3, 3);
    CHECK(gmm_objective(s, kOu) == plain);
    const Vector r = kernels::serial::residual_mean(Objective(s).model_matrix(kOu), p->psi.psi_x, p->psi.psi_y);
    CHECK(plain == doctest::Approx(r.norm()).epsilon(1e-12));
  }
  SUBCASE("the norm is taken of the mean residual") {
    const double t = 0.5;
    const Vector th{{0.4, 0.1, 0.0}};
    const double e = std::exp(-th[0] * t);
    const double a = th[1] * (1 - e);
    SnapshotData d;
    d.t_step = t;
    d.x = {-0.5, 0.7};
    d.y = {a + e * -0.5 - 0.01, a + e * 0.7 + 0.01};
    auto p = std::make_shared<Problem>(make_problem(kOuModel, BasisSet::chebyshev(2), d));
    CHECK(gmm_objective(spec_of(ObjectiveKind::GMM, p), th) < 1e-15);
    CHECK(constrained_edmd_objective(spec_of(ObjectiveKind::ConstrainedEDMD, p), th) ==
          doctest::Approx(2e-4).epsilon(1e-8));
  }
  SUBCASE("images matching the model in expectation drive the objective to zero") {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> nd;
    std::vector<double> vals;
    for (std::size_t n : {500u, 8000u, 128000u}) {
      double acc = 0.0;
      for (std::size_t r = 0; r < 10; ++r) {
        auto p = rbf_problem(ou_data(n, 11, r));
        const Matrix k = ProjectedKoopman(p->tmpl, p->koop.mass, p->koop.t_step)(kOu);
        p->psi.psi_y = k * p->psi.psi_x;
        for (Eigen::Index j = 0; j < p->psi.psi_y.cols(); ++j)
          for (Eigen::Index i = 0; i < 3; ++i) p->psi.psi_y(i, j) += 0.05 * nd(eng);
        acc += gmm_objective(spec_of(ObjectiveKind::GMM, p), kOu);
      }
      vals.push_back(acc / 10);
    }
    CHECK(vals[1] < vals[0]);
    CHECK(vals[2] < vals[1]);
    CHECK(vals[2] < 0.1 * vals[0]);
  }
  SUBCASE("singular weight") {
    const auto d = ou_data(300, 12);
    ObjectiveSpec s = spec_of(ObjectiveKind::GMM, rbf_problem(d));
    s.gmm_covariance = Matrix::Zero(3, 3);
    CHECK_THROWS_AS(Objective{s}, InvalidArgument);
    s.gmm_covariance = Matrix::Identity(3, 3);
    s.kind = ObjectiveKind::Frobenius;
    CHECK_THROWS_AS(Objective{s}, InvalidArgument);
  }
}

TEST_CASE("GMM weight update") {
  SUBCASE("zero residuals give the ridge alone") {
    const auto d = ou_data(50, 13);
    auto p = std::make_shared<Problem>(make_problem(kOuModel, BasisSet::chebyshev(1), d));
    const Matrix s = gmm_weight_update(spec_of(ObjectiveKind::GMM, p), kOu);
    CHECK(s(0, 0) == 1e-10);
  }
  SUBCASE("one snapshot is an outer product plus ridge") {
    SnapshotData d;
    d.x = {0.1};
    d.y = {0.25};
    d.t_step = 1.0 / 12;
    auto p = std::make_shared<Problem>(make_problem(kOuModel, BasisSet::legendre(1), d));
    p->psi = build_snapshot_matrices(BasisSet::gaussian_rbf({0.0, 0.2}, 3.0), d);
    p->koop.mass = Matrix::Identity(2, 2);
    p->tmpl.terms = {Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
    const ObjectiveSpec s = spec_of(ObjectiveKind::GMM, p);
    const Matrix k = ProjectedKoopman(p->tmpl, p->koop.mass, d.t_step)(kOu);
    const Vector r = k * p->psi.psi_x.col(0) - p->psi.psi_y.col(0);
    Matrix expect = r * r.transpose();
    expect.diagonal().array() += 1e-10 * expect.trace() / 2;
    const Matrix got = gmm_weight_update(s, kOu);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(got == got.transpose());
  }
  SUBCASE("symmetric on real data") {
    const auto d = ou_data(700, 14);
    const Matrix s = gmm_weight_update(spec_of(ObjectiveKind::GMM, rbf_problem(d)), Vector{{0.3, 0.1, 0.04}});
    CHECK(s == s.transpose());
    CHECK(Eigen::LLT<Matrix>(s).info() == Eigen::Success);
  }
}

TEST_CASE("evaluation cost") {
  const auto big = ou_data(1000000, 15);
  // Same basis for both sizes, so that only T differs.
  const auto basis = BasisSet::gaussian_rbf(make_rbf_centers(std::vector<double>{-0.1, 0.26}, 3));
  auto p_small = std::make_shared<Problem>(make_problem(kOuModel, basis, big.prefix(1000)));
  auto p_big = std::make_shared<Problem>(make_problem(kOuModel, basis, big));
  SUBCASE("matrix objectives do not depend on the sample size") {
    for (auto kind : {ObjectiveKind::Frobenius, ObjectiveKind::OperatorNorm}) {
      const Objective fs(spec_of(kind, p_small));
      const Objective fb(spec_of(kind, p_big));
      const double ratio = interleaved_time_ratio(fs, fb, kOu, 2000, 41);
      CAPTURE(objective_name(kind));
      CHECK(ratio == doctest::Approx(1.0).epsilon(0.10));
    }
  }
  SUBCASE("data-sum objectives scale with the sample size") {
    const Objective fs(spec_of(ObjectiveKind::ConstrainedEDMD, rbf_problem(big.prefix(10000))));
    const Objective fb(spec_of(ObjectiveKind::ConstrainedEDMD, rbf_problem(big.prefix(100000))));
    const double ratio = min_time_per_call(fb, kOu, 20, 5) / min_time_per_call(fs, kOu, 200, 5);
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
  }
}
