#include "koopest/expm.hpp"

#include <array>
#include <cmath>

#include "koopest/errors.hpp"

namespace koopest {
namespace {

// Largest 1-norms for which Padé degree m reaches unit roundoff in double precision.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

constexpr std::array<double, 4> kB3 = {120., 60., 12., 1.};
constexpr std::array<double, 6> kB5 = {30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kB7 = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
constexpr std::array<double, 10> kB9 = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                        2162160.,     110880.,     3960.,       90.,        1.};
constexpr std::array<double, 14> kB13 = {
    64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800., 129060195264000.,
    10559470521600.,    670442572800.,      33522128640.,      1323241920.,       40840800.,
    960960.,            16380.,             182.,              1.};

double norm1(const Matrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

/// r_m = q_m(A)^{-1} p_m(A) for odd-structured Padé numerator U and even part V.
template <std::size_t K>
Matrix pade_low(const Matrix& a, const std::array<double, K>& b) {
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix even_u = b[1] * ident;
  Matrix even_v = b[0] * ident;
  Matrix power = ident;
  for (std::size_t k = 2; k + 1 < K + 1; k += 2) {
    power = power * a2;
    even_u += b[k + 1] * power;
    even_v += b[k] * power;
  }
  const Matrix u = a * even_u;
  return (even_v - u).partialPivLu().solve(even_v + u);
}

Matrix pade13(const Matrix& a) {
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const auto& b = kB13;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  const Matrix u = a * (u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                   b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("expm requires a square matrix");
  if (a.size() == 0) return a;
  if (!a.allFinite()) throw NonFiniteResult("expm: input contains non-finite entries");

  const double norm = norm1(a);
  Matrix result;
  if (norm <= kTheta3) {
    result = pade_low(a, kB3);
  } else if (norm <= kTheta5) {
    result = pade_low(a, kB5);
  } else if (norm <= kTheta7) {
    result = pade_low(a, kB7);
  } else if (norm <= kTheta9) {
    result = pade_low(a, kB9);
  } else {
    int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
    // 2^-1100 underflows every entry; anything this large overflows on squaring anyway.
    if (squarings > 1000) throw NonFiniteResult("expm: input norm too large");
    result = pade13(std::ldexp(1.0, -squarings) * a);
    for (int s = 0; s < squarings; ++s) {
      result = result * result;
      if (!result.allFinite()) break;
    }
  }
  if (!result.allFinite()) throw NonFiniteResult("expm: result overflowed");
  return result;
}

}  // namespace koopest
