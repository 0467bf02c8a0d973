#include "fiberstrat/subspace.hpp"

#include <algorithm>
#include <stdexcept>

namespace fiberstrat {

namespace {

void require_finite(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
}

// Jacobi SVD everywhere: the matrices in this problem are small (a few
// hundred entries at most) and guaranteed-accurate singular values keep the
// rank thresholds trustworthy.
Eigen::JacobiSVD<Eigen::MatrixXd> full_svd(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

Int rank_from_singular_values(const Eigen::VectorXd& sv, Int rows, Int cols, double rank_rel) {
  if (sv.size() == 0) return 0;
  const double cutoff = rank_rel * sv(0) * static_cast<double>(std::max(rows, cols));
  Int r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  return r;
}

}  // namespace

void validate(const Tolerances& tol) {
  if (!(tol.rank_rel > 0 && tol.rank_rel < 1e-2) || !(tol.angle > 0 && tol.angle < 1e-2))
    throw std::invalid_argument("tolerances must lie in (0, 1e-2)");
}

Subspace Subspace::trivial(Int ambient) {
  if (ambient < 0) throw std::invalid_argument("negative ambient dimension");
  return Subspace(Eigen::MatrixXd(ambient, 0));
}

Subspace Subspace::full(Int ambient) {
  if (ambient < 0) throw std::invalid_argument("negative ambient dimension");
  return Subspace(Eigen::MatrixXd::Identity(ambient, ambient));
}

Subspace Subspace::from_span(const Eigen::MatrixXd& vectors, const Tolerances& tol) {
  validate(tol);
  require_finite(vectors);
  if (vectors.cols() == 0 || vectors.rows() == 0) return trivial(vectors.rows());
  auto svd = full_svd(vectors);
  const Int r = rank_from_singular_values(svd.singularValues(), vectors.rows(), vectors.cols(),
                                          tol.rank_rel);
  return Subspace(svd.matrixU().leftCols(r));
}

Subspace Subspace::from_orthonormal(Eigen::MatrixXd basis) {
  require_finite(basis);
  const Int m = basis.cols();
  if (m == 0) return Subspace(std::move(basis));
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  if ((gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("columns are not orthonormal");
  return Subspace(std::move(basis));
}

Eigen::MatrixXd Subspace::project(const Eigen::MatrixXd& vectors) const {
  if (vectors.rows() != ambient()) throw std::invalid_argument("ambient dimension mismatch");
  return basis_ * (basis_.transpose() * vectors);
}

Int numerical_rank(const Eigen::MatrixXd& M, const Tolerances& tol) {
  validate(tol);
  require_finite(M);
  if (M.rows() == 0 || M.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return rank_from_singular_values(svd.singularValues(), M.rows(), M.cols(), tol.rank_rel);
}

FundamentalSubspaces fundamental_subspaces(const Eigen::MatrixXd& M, const Tolerances& tol) {
  validate(tol);
  require_finite(M);
  const Int p = M.rows(), q = M.cols();
  FundamentalSubspaces f;
  if (p == 0 || q == 0) {
    f.rank = 0;
    f.row = Subspace::trivial(q);
    f.col = Subspace::trivial(p);
    f.null_space = Subspace::full(q);
    f.left_null = Subspace::full(p);
    return f;
  }
  auto svd = full_svd(M);
  f.rank = rank_from_singular_values(svd.singularValues(), p, q, tol.rank_rel);
  f.col = Subspace::from_orthonormal(svd.matrixU().leftCols(f.rank));
  f.left_null = Subspace::from_orthonormal(svd.matrixU().rightCols(p - f.rank));
  f.row = Subspace::from_orthonormal(svd.matrixV().leftCols(f.rank));
  f.null_space = Subspace::from_orthonormal(svd.matrixV().rightCols(q - f.rank));
  return f;
}

Subspace intersect(const Subspace& a, const Subspace& b, const Tolerances& tol) {
  validate(tol);
  if (a.ambient() != b.ambient()) throw std::invalid_argument("ambient dimension mismatch");
  if (a.dim() == 0 || b.dim() == 0) return Subspace::trivial(a.ambient());
  // principal angles: singular values of B_a^T B_b are the cosines; keep the
  // directions that are (numerically) at angle zero
  auto svd = full_svd(a.basis().transpose() * b.basis());
  const Eigen::VectorXd& sv = svd.singularValues();
  Int t = 0;
  while (t < sv.size() && sv(t) >= 1.0 - tol.angle) ++t;
  return Subspace::from_span(a.basis() * svd.matrixU().leftCols(t), tol);
}

Subspace sum(const Subspace& a, const Subspace& b, const Tolerances& tol) {
  if (a.ambient() != b.ambient()) throw std::invalid_argument("ambient dimension mismatch");
  Eigen::MatrixXd stacked(a.ambient(), a.dim() + b.dim());
  stacked << a.basis(), b.basis();
  return Subspace::from_span(stacked, tol);
}

Subspace complement(const Subspace& s, const Tolerances& tol) {
  if (s.dim() == 0) return Subspace::full(s.ambient());
  return fundamental_subspaces(s.basis().transpose(), tol).null_space;
}

Subspace map_subspace(const Eigen::MatrixXd& M, const Subspace& s, const Tolerances& tol) {
  if (M.cols() != s.ambient()) throw std::invalid_argument("matrix/subspace shape mismatch");
  return Subspace::from_span(M * s.basis(), tol);
}

Subspace standard_complement_within(const Subspace& Z, const Subspace& Y,
                                    const Tolerances& tol) {
  validate(tol);
  if (Z.ambient() != Y.ambient()) throw std::invalid_argument("ambient dimension mismatch");
  if (containment_residual(Z, Y) > tol.angle)
    throw std::invalid_argument("Y is not contained in Z");
  if (Y.dim() == 0) return Z;
  // X = Z /\ Y-perp: project Y out of Z's basis and re-orthonormalize
  const Eigen::MatrixXd residual = Z.basis() - Y.project(Z.basis());
  Subspace X = Subspace::from_span(residual, tol);
  if (X.dim() != Z.dim() - Y.dim())
    throw std::runtime_error("standard complement has unexpected dimension (tolerances too "
                             "tight or inputs nearly degenerate)");
  return X;
}

bool subspace_equal(const Subspace& a, const Subspace& b, const Tolerances& tol) {
  validate(tol);
  if (a.ambient() != b.ambient()) return false;
  if (a.dim() != b.dim()) return false;
  if (a.dim() == 0) return true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.basis().transpose() * b.basis());
  return svd.singularValues().minCoeff() >= 1.0 - tol.angle;
}

bool contains(const Subspace& s, const Eigen::VectorXd& v, const Tolerances& tol) {
  validate(tol);
  if (v.size() != s.ambient()) throw std::invalid_argument("ambient dimension mismatch");
  const double n = v.norm();
  if (n == 0.0) return true;
  return (v - s.project(v)).norm() <= tol.angle * n;
}

bool contains_subspace(const Subspace& outer, const Subspace& inner, const Tolerances& tol) {
  validate(tol);
  if (outer.ambient() != inner.ambient()) return false;
  return containment_residual(outer, inner) <= tol.angle;
}

double containment_residual(const Subspace& outer, const Subspace& inner) {
  if (outer.ambient() != inner.ambient()) throw std::invalid_argument("ambient mismatch");
  if (inner.dim() == 0) return 0.0;
  const Eigen::MatrixXd r = inner.basis() - outer.project(inner.basis());
  return r.colwise().norm().maxCoeff();
}

}  // namespace fiberstrat
