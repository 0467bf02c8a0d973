#pragma once

#include <Eigen/Dense>

#include "fiberstrat/ranklist.hpp"

namespace fiberstrat {

struct Tolerances {
  double rank_rel = 1e-10;  // relative singular-value cutoff for rank decisions
  double angle = 1e-8;      // principal-angle cosine slack for subspace tests
};

// Both tolerances must lie in (0, 1e-2).
void validate(const Tolerances& tol);

// A linear subspace of R^n held as an n x m matrix with orthonormal columns;
// m = 0 is the trivial subspace and is a perfectly ordinary value here.
class Subspace {
 public:
  Subspace() = default;

  static Subspace trivial(Int ambient);
  static Subspace full(Int ambient);
  // span of arbitrary columns: SVD-orthonormalized and rank-truncated
  static Subspace from_span(const Eigen::MatrixXd& vectors, const Tolerances& tol = {});
  // adopt columns verified to be orthonormal already
  static Subspace from_orthonormal(Eigen::MatrixXd basis);

  Int ambient() const { return basis_.rows(); }
  Int dim() const { return basis_.cols(); }
  const Eigen::MatrixXd& basis() const { return basis_; }

  // orthogonal projection of columns onto the subspace
  Eigen::MatrixXd project(const Eigen::MatrixXd& vectors) const;

 private:
  explicit Subspace(Eigen::MatrixXd basis) : basis_(std::move(basis)) {}
  Eigen::MatrixXd basis_;  // n x m, orthonormal columns
};

Int numerical_rank(const Eigen::MatrixXd& M, const Tolerances& tol = {});

struct FundamentalSubspaces {
  Int rank = 0;
  Subspace row, col, null_space, left_null;
};

// All four from one SVD, mutually consistent by construction.
FundamentalSubspaces fundamental_subspaces(const Eigen::MatrixXd& M, const Tolerances& tol = {});

Subspace intersect(const Subspace& a, const Subspace& b, const Tolerances& tol = {});
Subspace sum(const Subspace& a, const Subspace& b, const Tolerances& tol = {});
Subspace complement(const Subspace& s, const Tolerances& tol = {});

// image {Mv : v in s}, orthonormalized (dimension may drop)
Subspace map_subspace(const Eigen::MatrixXd& M, const Subspace& s, const Tolerances& tol = {});

// The canonical complement-of-Y-within-Z element: X = Z /\ Y-perp, so
// X + Y = Z with X _|_ Y.  Requires Y inside Z; throws otherwise.
Subspace standard_complement_within(const Subspace& Z, const Subspace& Y,
                                    const Tolerances& tol = {});

bool subspace_equal(const Subspace& a, const Subspace& b, const Tolerances& tol = {});
bool contains(const Subspace& s, const Eigen::VectorXd& v, const Tolerances& tol = {});
bool contains_subspace(const Subspace& outer, const Subspace& inner, const Tolerances& tol = {});

// largest residual of projecting inner's basis columns onto outer (0 when contained)
double containment_residual(const Subspace& outer, const Subspace& inner);

}  // namespace fiberstrat
