#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fiberstrat/ranklist.hpp"
#include "fiberstrat/subspace.hpp"

namespace fiberstrat {

// θ = (W_1, ..., W_L) stored ascending; W[j-1] is W_j of size d_j x d_{j-1}.
struct WeightVector {
  NetworkShape shape;
  std::vector<Eigen::MatrixXd> W;

  const Eigen::MatrixXd& Wmat(Int j) const;  // 1-based layer index
  Eigen::MatrixXd& Wmat(Int j);
};

WeightVector zero_weights(NetworkShape shape);
void validate_weights(const WeightVector& th);

// W_{k~i} = W_k ... W_{i+1} (identity when k = i); L >= k >= i >= 0.
Eigen::MatrixXd mu_sub(const WeightVector& th, Int k, Int i);
// the end-to-end product μ(θ) = W_{L~0}
Eigen::MatrixXd mu(const WeightVector& th);

RankList ranklist_of(const WeightVector& th, const Tolerances& tol = {});

// Normative parameter vectorization: vec(θ) = [vec W_1; ...; vec W_L],
// each block column-major.  Everything downstream depends on this ordering.
Eigen::VectorXd flatten(const WeightVector& th);
WeightVector unflatten(const NetworkShape& shape, const Eigen::VectorXd& v);

// first parameter index of block j in the vectorization above
Int param_offset(const NetworkShape& shape, Int j);
// d_θ-vector that is vec(M) in block j and zero elsewhere
Eigen::VectorXd embed_block(const NetworkShape& shape, Int j, const Eigen::MatrixXd& M);

// dμ(θ) as a (d_L·d_0) x d_θ matrix: block j equals W_{j-1~0}^T ⊗ W_{L~j},
// so dμ·vec(Δθ) = vec(Σ_j W_{L~j} ΔW_j W_{j-1~0}).
Eigen::MatrixXd dmu_matrix(const WeightVector& th);

// differential of the sub-product μ_{y~x}: (d_y·d_x) x d_θ, blocks only for
// x < j <= y
Eigen::MatrixXd dmu_sub_matrix(const WeightVector& th, Int y, Int x);

// adjoint: dμ(θ)^T M has blocks ΔW_j = W_{L~j}^T M W_{j-1~0}^T
WeightVector dmu_transpose_apply(const WeightVector& th, const Eigen::MatrixXd& M);

// gauge transform η: W_j -> J_j W_j J_{j-1}^{-1} (or its inverse); J has
// L+1 invertible matrices J_0..J_L; rank lists are preserved and
// μ(η(θ)) = J_L μ(θ) J_0^{-1}.
WeightVector eta_apply(const WeightVector& th, const std::vector<Eigen::MatrixXd>& J,
                       bool inverse = false);

// Deterministic point on stratum r inside the fiber of Wmat, built from the
// full SVD of Wmat around the canonical factor matrices.
WeightVector fiber_point(const Eigen::MatrixXd& Wmat, const RankList& r,
                         const Tolerances& tol = {});

// Same, then conjugated by random invertible gauges (condition < 1e4) drawn
// from the seeded generator; μ and the rank list are unchanged.
WeightVector sample_on_stratum(const Eigen::MatrixXd& Wmat, const RankList& r,
                               std::uint64_t seed, const Tolerances& tol = {});

// Random d_rows x d_cols matrix of exact numerical rank R (product of two
// gaussian factors), for callers that need a W to sample around.
Eigen::MatrixXd random_matrix_with_rank(Int rows, Int cols, Int R, std::uint64_t seed,
                                        const Tolerances& tol = {});

}  // namespace fiberstrat
