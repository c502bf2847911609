#pragma once

#include <cstddef>
#include <vector>

#include "koopest/basis.hpp"
#include "koopest/sde_models.hpp"
#include "koopest/snapshot.hpp"
#include "koopest/types.hpp"

namespace koopest {

/// Mass matrices whose condition number exceeds this are rejected.
inline constexpr double kMaxMassCondition = 1e12;

/// Empirical matrices of one dataset under the basis psi:
///   mass  M = (1/T) psi(X) psi(X)^T
///   cross K = (1/T) psi(Y) psi(X)^T
///   edmd  A = K M^{-1}
struct KoopmanMatrices {
  Matrix mass;
  Matrix cross;
  Matrix edmd;
  double t_step = 0.0;
  double cond_mass = 0.0;
  std::size_t n_samples = 0;
};

/// lambda_max / lambda_min of a symmetric matrix; +inf if not positive definite.
double spd_condition_number(const Matrix& m);

/// Assembles the matrices over all pairs of `data` (paths are concatenated).
/// Throws IllConditionedMass if cond(M) > kMaxMassCondition.
KoopmanMatrices assemble(const BasisSet& basis, const SnapshotData& data);
KoopmanMatrices assemble(const SnapshotMatrices& psi, double t_step);

/// Cholesky factorization of the mass matrix, applied from the right.
class MassSolver {
 public:
  explicit MassSolver(const Matrix& mass);
  /// B M^{-1}
  Matrix right_solve(const Matrix& b) const;
  /// M^{-1} B
  Matrix left_solve(const Matrix& b) const;
  const Matrix& mass() const noexcept { return mass_; }

 private:
  Matrix mass_;
  Eigen::LLT<Matrix> llt_;
};

/// Precomputed data integrals from which the generator matrix
///   L(theta) = (1/T) sum_k (L(theta) psi)(x_k) psi(x_k)^T
/// is rebuilt as a linear combination:
///   OU:  terms = {D1, D1x, D2},  L = th1 th2 D1 - th1 D1x + th3^2/2 D2
///   BMR: terms = {D2q, D1x},     L = th2 D2q - 2 th1 D1x
/// with D1 = E[psi' psi^T], D1x = E[x psi' psi^T], D2 = E[psi'' psi^T],
/// D2q = E[(1 - x^2) psi'' psi^T] under the empirical measure of X.
struct GeneratorTemplate {
  SdeModel model = SdeModel::ornstein_uhlenbeck();
  std::vector<Matrix> terms;
};

GeneratorTemplate generator_template(const BasisSet& basis, const SnapshotData& data, const SdeModel& model);

/// Scalar weights of the template terms at theta.
Vector template_weights(const SdeModel& model, const Vector& theta);

Matrix generator_matrix(const GeneratorTemplate& tmpl, const Vector& theta);

/// exp(t L(theta) M^{-1}); throws NonFiniteResult on overflow.
Matrix projected_koopman_matrix(const GeneratorTemplate& tmpl, const Matrix& mass, const Vector& theta,
                                double t_step);

/// Reusable evaluator of theta -> exp(t L(theta) M^{-1}) for a fixed dataset.
class ProjectedKoopman {
 public:
  ProjectedKoopman(GeneratorTemplate tmpl, const Matrix& mass, double t_step);

  /// L(theta) M^{-1}
  Matrix generator_in_basis(const Vector& theta) const;
  Matrix operator()(const Vector& theta) const;

  const SdeModel& model() const noexcept { return tmpl_.model; }
  const MassSolver& mass_solver() const noexcept { return solver_; }
  double t_step() const noexcept { return t_step_; }
  int size() const noexcept { return static_cast<int>(solver_.mass().rows()); }

 private:
  GeneratorTemplate tmpl_;
  MassSolver solver_;
  double t_step_;
};

/// Eigentriplets of a real matrix sorted by descending |lambda|, with complex
/// conjugate pairs kept adjacent. Rows of `left` are biorthonormal to the
/// columns of `right`: left * right = I.
struct SpectralDecomposition {
  ComplexVector eigenvalues;
  ComplexMatrix right;
  ComplexMatrix left;
  /// Size (1 or 2) of the atom starting at each index; 0 for the second member of a pair.
  std::vector<int> atom_size;
  double eigenvector_condition = 0.0;
};

/// Throws TruncationUnavailable if the eigenvector matrix has condition > 1e10.
SpectralDecomposition spectral_decomposition(const Matrix& a);

/// Re(sum_{j < J} lambda_j v_j w_j^T); J must not split a conjugate pair.
Matrix spectral_reconstruct(const SpectralDecomposition& d, int j);
/// Re(sum_{j < J} v_j w_j^T), the oblique projector onto the leading J modes.
Matrix spectral_projector(const SpectralDecomposition& d, int j);

struct EigenTruncation {
  Matrix matrix;
  int j_requested = 0;
  /// j_requested, or j_requested + 1 when the cut would split a conjugate pair.
  int j_used = 0;
  bool bumped = false;
  ComplexVector eigenvalues;
  /// P_J with A_J = A P_J; the identity when j_used = N.
  Matrix projector;
};

/// Rank-J spectral truncation A_J; A_N is A itself.
EigenTruncation eigen_truncate(const Matrix& a, int j_trunc);

/// Matrix of the data-driven Perron-Frobenius approximation, K^T M^{-1}.
Matrix perron_frobenius_matrix(const KoopmanMatrices& koop);

}  // namespace koopest
