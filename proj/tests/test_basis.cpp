#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "koopest/basis.hpp"
#include "koopest/errors.hpp"
#include "oracles.hpp"

using namespace koopest;

namespace {

std::vector<BasisSet> sample_bases() {
  std::vector<BasisSet> out;
  for (int n = 1; n <= 10; ++n) {
    out.push_back(BasisSet::chebyshev(n));
    out.push_back(BasisSet::legendre(n));
  }
  for (int n = 2; n <= 10; ++n) {
    out.push_back(BasisSet::gaussian_rbf(make_rbf_centers_fixed(n)));
    out.push_back(BasisSet::gaussian_rbf(make_rbf_centers(std::vector<double>{-0.9, 0.8}, n)));
  }
  return out;
}

// Richardson-extrapolated central difference.
double richardson(const std::function<double(double)>& f, double x, double h) {
  const double d1 = oracle::central_diff(f, x, h);
  const double d2 = oracle::central_diff(f, x, h / 2);
  return (4 * d2 - d1) / 3;
}

}  // namespace

TEST_CASE("family names") {
  CHECK(family_from_name("rbf") == BasisFamily::GaussianRBF);
  CHECK(family_from_name("chebyshev") == BasisFamily::Chebyshev);
  CHECK(family_from_name("legendre") == BasisFamily::Legendre);
  CHECK(family_name(BasisFamily::Legendre) == "legendre");
  CHECK_THROWS_AS(family_from_name("fourier"), InvalidArgument);
}

TEST_CASE("pointwise values") {
  SUBCASE("chebyshev recurrence at one half") {
    const Vector v = BasisSet::chebyshev(3).eval(0.5, 0);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.5);
    CHECK(v[2] == doctest::Approx(-0.5));
  }
  SUBCASE("legendre is one at the right endpoint") {
    for (int n = 1; n <= 12; ++n) {
      const Vector v = BasisSet::legendre(n).eval(1.0, 0);
      for (int j = 0; j < n; ++j) CHECK(v[j] == doctest::Approx(1.0));
    }
  }
  SUBCASE("gaussian peak") {
    const double l = 2.5;
    const auto b = BasisSet::gaussian_rbf({-0.3, 0.1, 0.7}, l);
    const double x = 0.1;
    CHECK(b.eval(x, 0)[1] == 1.0);
    CHECK(b.eval(x, 1)[1] == 0.0);
    CHECK(b.eval(x, 2)[1] == doctest::Approx(-2 * l * l));
    CHECK(b.eval(x, 0)[0] == doctest::Approx(std::exp(-l * l * 0.16)));
  }
  SUBCASE("legendre agrees with the explicit sum") {
    const auto b = BasisSet::legendre(9);
    for (double x : {-0.95, -0.3, 0.0, 0.41, 0.77}) {
      const Vector v = b.eval(x, 0);
      for (int n = 0; n < 9; ++n) CHECK(v[n] == doctest::Approx(oracle::legendre(n, x)).epsilon(1e-12));
    }
  }
  SUBCASE("eval_into matches eval") {
    const auto b = BasisSet::chebyshev(6);
    std::vector<double> v0(6), v1(6), v2(6);
    b.eval_into(0.3, v0.data(), nullptr, v2.data());
    b.eval_into(0.3, nullptr, v1.data(), nullptr);
    for (int j = 0; j < 6; ++j) {
      CHECK(v0[j] == b.eval(0.3, 0)[j]);
      CHECK(v1[j] == b.eval(0.3, 1)[j]);
      CHECK(v2[j] == b.eval(0.3, 2)[j]);
    }
  }
  SUBCASE("polynomial domain") {
    CHECK(BasisSet::legendre(3).in_domain(1.0));
    CHECK_FALSE(BasisSet::legendre(3).in_domain(1.01));
    CHECK(BasisSet::gaussian_rbf({0.0, 1.0}, 1.0).in_domain(50.0));
  }
}

TEST_CASE("derivatives agree with finite differences") {
  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  const double h = 1e-5;
  for (const auto& b : sample_bases()) {
    for (int p = 0; p < 100; ++p) {
      const double x = u(eng);
      const Vector d1 = b.eval(x, 1);
      const Vector d2 = b.eval(x, 2);
      for (int j = 0; j < b.size(); ++j) {
        const double fd1 = richardson([&](double s) { return b.eval(s, 0)[j]; }, x, h);
        const double fd2 = richardson([&](double s) { return b.eval(s, 1)[j]; }, x, h);
        CHECK(std::abs(fd1 - d1[j]) <= 1e-5 * std::abs(d1[j]) + 1e-7);
        CHECK(std::abs(fd2 - d2[j]) <= 1e-5 * std::abs(d2[j]) + 1e-7);
      }
    }
  }
}

TEST_CASE("chebyshev trigonometric identity") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, M_PI);
  const auto b = BasisSet::chebyshev(15);
  for (int i = 0; i < 50; ++i) {
    const double phi = u(eng);
    const Vector v = b.eval(std::cos(phi), 0);
    for (int n = 0; n < 15; ++n) CHECK(std::abs(v[n] - std::cos(n * phi)) <= 1e-10);
  }
}

TEST_CASE("legendre differential equation") {
  std::mt19937_64 eng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto b = BasisSet::legendre(15);
  for (int i = 0; i < 50; ++i) {
    const double x = u(eng);
    const Vector p = b.eval(x, 0);
    const Vector p1 = b.eval(x, 1);
    const Vector p2 = b.eval(x, 2);
    for (int n = 0; n < 15; ++n) CHECK(std::abs((1 - x * x) * p2[n] - 2 * x * p1[n] + n * (n + 1) * p[n]) <= 1e-8);
  }
}

TEST_CASE("rbf center layouts") {
  SUBCASE("data adaptive") {
    const std::vector<double> data{0.0, 0.3, 1.0, 0.6};
    const auto lay = make_rbf_centers(data, 3);
    REQUIRE(lay.centers.size() == 3);
    CHECK(lay.centers[0] == doctest::Approx(0.25));
    CHECK(lay.centers[1] == doctest::Approx(0.5));
    CHECK(lay.centers[2] == doctest::Approx(0.75));
    CHECK(lay.length_scale == doctest::Approx(4.0));
  }
  SUBCASE("fixed interval") {
    const auto three = make_rbf_centers_fixed(3);
    CHECK(three.centers == std::vector<double>{-1.0, 0.0, 1.0});
    CHECK(three.length_scale == 1.0);
    const auto two = make_rbf_centers_fixed(2);
    CHECK(two.centers == std::vector<double>{-1.0, 1.0});
    CHECK(two.length_scale == 2.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(make_rbf_centers(std::vector<double>{0.4, 0.4, 0.4}, 3), InvalidArgument);
    CHECK_THROWS_AS(make_rbf_centers(std::vector<double>{0.0, 1.0}, 1), InvalidArgument);
    CHECK_THROWS_AS(BasisSet::gaussian_rbf({0.0, 0.0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BasisSet::gaussian_rbf({0.0, 1.0}, -1.0), InvalidArgument);
    CHECK_THROWS_AS(BasisSet::chebyshev(0), InvalidArgument);
  }
}

TEST_CASE("snapshot matrices") {
  SUBCASE("constant basis") {
    SnapshotData d;
    d.x = {0.1, -0.4, 0.9};
    d.y = {0.2, 0.3, 0.5};
    d.t_step = 1.0;
    const auto m = build_snapshot_matrices(BasisSet::chebyshev(1), d);
    CHECK(m.psi_x.rows() == 1);
    CHECK(m.psi_x.cols() == 3);
    CHECK((m.psi_x.array() == 1.0).all());
    CHECK((m.psi_y.array() == 1.0).all());
  }
  SUBCASE("affine basis by hand") {
    SnapshotData d;
    d.x = {1.0, 2.0};
    d.y = {2.0, 4.0};
    d.t_step = 1.0;
    const auto m = build_snapshot_matrices(BasisSet::chebyshev(2), d);
    Matrix expected(2, 2);
    expected << 1, 1, 1, 2;
    CHECK(m.psi_x == expected);
    CHECK(m.out_of_domain == 3);
  }
  SUBCASE("shape contract and pointwise agreement") {
    SnapshotData d;
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 3000; ++i) {
      d.x.push_back(u(eng));
      d.y.push_back(u(eng));
    }
    d.t_step = 0.1;
    for (const auto& b : sample_bases()) {
      const auto m = build_snapshot_matrices(b, d);
      CHECK(m.psi_x.rows() == b.size());
      CHECK(m.psi_x.cols() == 3000);
      CHECK(m.psi_y.cols() == 3000);
      CHECK(m.psi_x.col(1234) == b.eval(d.x[1234], 0));
      CHECK(m.psi_y.col(2999) == b.eval(d.y[2999], 0));
      CHECK(eval_matrix(b, d.x, 2).col(7) == b.eval(d.x[7], 2));
    }
  }
}
