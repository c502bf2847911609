#include "koopest/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "koopest/errors.hpp"
#include "koopest/expm.hpp"
#include "koopest/kernels.hpp"

namespace koopest {

double spd_condition_number(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

MassSolver::MassSolver(const Matrix& mass) : mass_(mass), llt_(mass) {
  if (mass.rows() != mass.cols() || mass.rows() == 0) throw InvalidArgument("mass matrix must be square");
  if (llt_.info() != Eigen::Success) throw IllConditionedMass(spd_condition_number(mass));
}

Matrix MassSolver::right_solve(const Matrix& b) const { return llt_.solve(b.transpose()).transpose(); }

Matrix MassSolver::left_solve(const Matrix& b) const { return llt_.solve(b); }

KoopmanMatrices assemble(const SnapshotMatrices& psi, double t_step) {
  if (psi.psi_x.rows() != psi.psi_y.rows() || psi.psi_x.cols() != psi.psi_y.cols() || psi.psi_x.cols() == 0)
    throw InvalidArgument("snapshot matrices must be non-empty and of equal shape");
  KoopmanMatrices out;
  out.t_step = t_step;
  out.n_samples = static_cast<std::size_t>(psi.psi_x.cols());
  out.mass = kernels::gram(psi.psi_x);
  out.cross = kernels::weighted_cross(psi.psi_y, psi.psi_x);
  out.cond_mass = spd_condition_number(out.mass);
  if (!(out.cond_mass <= kMaxMassCondition)) throw IllConditionedMass(out.cond_mass);
  out.edmd = MassSolver(out.mass).right_solve(out.cross);
  return out;
}

KoopmanMatrices assemble(const BasisSet& basis, const SnapshotData& data) {
  data.validate();
  return assemble(build_snapshot_matrices(basis, data), data.t_step);
}

GeneratorTemplate generator_template(const BasisSet& basis, const SnapshotData& data, const SdeModel& model) {
  data.validate();
  const Matrix psi = eval_matrix(basis, data.x, 0);
  const Matrix d1 = eval_matrix(basis, data.x, 1);
  const Matrix d2 = eval_matrix(basis, data.x, 2);
  GeneratorTemplate out;
  out.model = model;
  if (model.kind() == ModelKind::OrnsteinUhlenbeck) {
    out.terms.push_back(kernels::weighted_cross(d1, psi));
    out.terms.push_back(kernels::weighted_cross(d1, psi, data.x));
    out.terms.push_back(kernels::weighted_cross(d2, psi));
  } else {
    std::vector<double> q(data.x.size());
    std::transform(data.x.begin(), data.x.end(), q.begin(), [](double x) { return 1.0 - x * x; });
    out.terms.push_back(kernels::weighted_cross(d2, psi, q));
    out.terms.push_back(kernels::weighted_cross(d1, psi, data.x));
  }
  return out;
}

Vector template_weights(const SdeModel& model, const Vector& theta) {
  model.check_theta(theta);
  if (model.kind() == ModelKind::OrnsteinUhlenbeck)
    return Vector{{theta[0] * theta[1], -theta[0], 0.5 * theta[2] * theta[2]}};
  return Vector{{theta[1], -2.0 * theta[0]}};
}

Matrix generator_matrix(const GeneratorTemplate& tmpl, const Vector& theta) {
  const Vector w = template_weights(tmpl.model, theta);
  if (static_cast<std::size_t>(w.size()) != tmpl.terms.size())
    throw InvalidArgument("generator template does not match the model");
  Matrix l = w[0] * tmpl.terms[0];
  for (std::size_t i = 1; i < tmpl.terms.size(); ++i) l += w[static_cast<Eigen::Index>(i)] * tmpl.terms[i];
  return l;
}

Matrix projected_koopman_matrix(const GeneratorTemplate& tmpl, const Matrix& mass, const Vector& theta,
                                double t_step) {
  return ProjectedKoopman(tmpl, mass, t_step)(theta);
}

ProjectedKoopman::ProjectedKoopman(GeneratorTemplate tmpl, const Matrix& mass, double t_step)
    : tmpl_(std::move(tmpl)), solver_(mass), t_step_(t_step) {
  if (!(t_step > 0.0)) throw InvalidArgument("t_step must be positive");
  for (const auto& term : tmpl_.terms)
    if (term.rows() != mass.rows() || term.cols() != mass.cols())
      throw InvalidArgument("generator template and mass matrix differ in size");
}

Matrix ProjectedKoopman::generator_in_basis(const Vector& theta) const {
  return solver_.right_solve(generator_matrix(tmpl_, theta));
}

Matrix ProjectedKoopman::operator()(const Vector& theta) const {
  return expm(t_step_ * generator_in_basis(theta));
}

SpectralDecomposition spectral_decomposition(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("eigendecomposition needs a square matrix");
  if (!a.allFinite()) throw TruncationUnavailable("matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) throw TruncationUnavailable("eigenvalue iteration did not converge");
  const ComplexVector lambda = es.eigenvalues();
  const ComplexMatrix v = es.eigenvectors();
  const auto n = a.rows();

  Eigen::JacobiSVD<ComplexMatrix> svd(v);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e10)) throw TruncationUnavailable("matrix is numerically defective");

  // Atoms: real eigenvalues alone, conjugate pairs (adjacent in EigenSolver output) together.
  struct Atom {
    Eigen::Index first;
    int size;
    double modulus;
  };
  std::vector<Atom> atoms;
  for (Eigen::Index i = 0; i < n;) {
    const int size = (lambda(i).imag() != 0.0 && i + 1 < n) ? 2 : 1;
    atoms.push_back({i, size, std::abs(lambda(i))});
    i += size;
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& l, const Atom& r) { return l.modulus > r.modulus; });

  std::vector<Eigen::Index> order;
  SpectralDecomposition d;
  for (const auto& at : atoms) {
    for (int s = 0; s < at.size; ++s) {
      order.push_back(at.first + s);
      d.atom_size.push_back(s == 0 ? at.size : 0);
    }
  }
  d.eigenvalues.resize(n);
  d.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d.eigenvalues(k) = lambda(order[static_cast<std::size_t>(k)]);
    d.right.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  d.left = d.right.partialPivLu().inverse();
  d.eigenvector_condition = cond;
  return d;
}

Matrix spectral_reconstruct(const SpectralDecomposition& d, int j) {
  const auto n = d.eigenvalues.size();
  if (j < 1 || j > n) throw InvalidArgument("truncation rank out of range");
  if (j < n && d.atom_size[static_cast<std::size_t>(j)] == 0)
    throw InvalidArgument("truncation rank would split a conjugate pair");
  const ComplexMatrix part =
      d.right.leftCols(j) * d.eigenvalues.head(j).asDiagonal() * d.left.topRows(j);
  return part.real();
}

Matrix spectral_projector(const SpectralDecomposition& d, int j) {
  const auto n = d.eigenvalues.size();
  if (j < 1 || j > n) throw InvalidArgument("truncation rank out of range");
  if (j < n && d.atom_size[static_cast<std::size_t>(j)] == 0)
    throw InvalidArgument("truncation rank would split a conjugate pair");
  const ComplexMatrix part = d.right.leftCols(j) * d.left.topRows(j);
  return part.real();
}

EigenTruncation eigen_truncate(const Matrix& a, int j_trunc) {
  const auto n = static_cast<int>(a.rows());
  if (j_trunc < 1 || j_trunc > n) throw InvalidArgument("truncation rank must satisfy 1 <= J <= N");
  const SpectralDecomposition d = spectral_decomposition(a);
  EigenTruncation out;
  out.j_requested = j_trunc;
  out.j_used = j_trunc;
  if (j_trunc < n && d.atom_size[static_cast<std::size_t>(j_trunc)] == 0) {
    out.j_used = j_trunc + 1;
    out.bumped = true;
  }
  out.eigenvalues = d.eigenvalues;
  out.matrix = out.j_used == n ? a : spectral_reconstruct(d, out.j_used);
  out.projector = out.j_used == n ? Matrix::Identity(n, n) : spectral_projector(d, out.j_used);
  return out;
}

Matrix perron_frobenius_matrix(const KoopmanMatrices& koop) {
  return MassSolver(koop.mass).right_solve(koop.cross.transpose());
}

}  // namespace koopest
