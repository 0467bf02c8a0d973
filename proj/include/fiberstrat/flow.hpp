#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"
#include "fiberstrat/subspace.hpp"

namespace fiberstrat {

// The unique almost-identity weight vector realizing rank list r: layer
// matrix j carries an ω(k,i) identity block exactly where the interval
// [i,k] covers both layers j-1 and j, in the canonical block order
// (decreasing k, then increasing i).
WeightVector canonical_weight_vector(const RankList& r);

// One weight vector's flow structure: the fundamental subspaces of every
// subsequence matrix, seed subspaces a(k,i,i), their unnormalized forward
// propagations Jgen, the per-layer bases Jfull (their blocks), the dual
// bases Kfull = Jfull^{-T} with blocks Kgen, and the canonical factors.
struct FlowSystem {
  WeightVector theta;
  RankList ranks;          // the rank list the construction is built against
  IntervalMultiset omega;
  Tolerances tol;

  // intervals [i,k] with ω(k,i) > 0 containing layer j, decreasing k then
  // increasing i; the block order of Jfull/Kfull columns
  std::vector<std::vector<std::pair<Int, Int>>> intervals;  // index j = 0..L

  // Generator matrices keyed (k,j,i), i <= j <= k; ω(k,i) columns each.
  // Jgen(k,j,i) = W_{j~i} · seed(k,i) exactly (no re-orthonormalization), so
  // the flow identity W_j·Jgen(k,j-1,i) = Jgen(k,j,i) holds by construction;
  // Kgen satisfies W_j^T·Kgen(k,j,i) = Kgen(k,j-1,i) as a theorem.
  std::map<std::tuple<Int, Int, Int>, Eigen::MatrixXd> jgen_, kgen_;

  std::vector<Eigen::MatrixXd> jfull_, kfull_;  // index j = 0..L, d_j x d_j
  std::vector<Eigen::MatrixXd> itilde_;         // index j-1 = 0..L-1

  Int L() const { return theta.shape.L(); }
  const std::vector<std::pair<Int, Int>>& layer_intervals(Int j) const;
  Int block_offset(Int j, Int k, Int i) const;  // column offset of block (k,i) at layer j

  const Eigen::MatrixXd& Jgen(Int k, Int j, Int i) const;
  const Eigen::MatrixXd& Kgen(Int k, Int j, Int i) const;
  const Eigen::MatrixXd& Jfull(Int j) const;
  const Eigen::MatrixXd& Kfull(Int j) const;
  const Eigen::MatrixXd& Itilde(Int j) const;  // Jfull_j^{-1} W_j Jfull_{j-1}

  // fundamental subspaces of W_{k~i}, cached at construction
  const FundamentalSubspaces& fs(Int k, Int i) const;

  // Flow subspaces from the definitions (boundary conventions included):
  //   A(k,j,i) = null W_{k+1~j}  /\  col W_{j~i}
  //   B(k,j,i) = row  W_{k~j}    /\  null W_{j~i-1}^T
  Subspace A(Int k, Int j, Int i) const;
  Subspace B(Int k, Int j, Int i) const;

  // orthonormalized views of span Jgen / span Kgen
  Subspace a_sub(Int k, Int j, Int i) const;
  Subspace b_sub(Int k, Int j, Int i) const;

  // the same flow subspaces assembled from prebasis blocks (nesting lemma)
  Subspace A_from_prebasis(Int k, Int j, Int i) const;
  Subspace B_from_prebasis(Int k, Int j, Int i) const;

 private:
  std::map<std::pair<Int, Int>, FundamentalSubspaces> fs_cache_;
  friend FlowSystem build_flow_prebases(WeightVector, std::optional<RankList>,
                                        const Tolerances&);
};

// Builds the complete system.  When expected_ranks is given the construction
// is attempted against that rank list (and throws if the weights disagree);
// otherwise the numerical rank list of theta is used.  Throws
// std::runtime_error when any flow basis comes out singular or any prebasis
// dimension misses its ω — the signal that rank list and tolerances are
// inconsistent with the weights.
FlowSystem build_flow_prebases(WeightVector theta,
                               std::optional<RankList> expected_ranks = std::nullopt,
                               const Tolerances& tol = {});

struct CanonicalFactorization {
  std::vector<Eigen::MatrixXd> Jfull;   // L+1 invertible matrices
  std::vector<Eigen::MatrixXd> Itilde;  // L factors; W = J_L Ĩ_L ··· Ĩ_1 J_0^{-1}
};

// Extracts the factorization and verifies it: J_j·Ĩ_j = W_j·J_{j-1} within
// 1e-9·scale, and each Ĩ_j thresholded at 1e-7·(1+|θ|) matches the 0/1
// pattern of canonical_weight_vector(ranks).  Throws on mismatch.
CanonicalFactorization canonical_factorization(const FlowSystem& flow);

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // worst normalized residual, or |dim error|
  std::string detail;     // first offending site, when any
};

struct TheoremReport {
  bool all_pass = false;
  std::vector<CheckResult> checks;
};

// Checks, at one weight vector, every clause of the flow-basis structure
// theorem: rank agreement, prebasis dimensions, flow conditions (forward,
// transpose, annihilation), basis duality JᵀK = I, subspace agreement and
// nesting, dimension identities, and complementarity.  expected_ranks turns
// it into a negative-control probe against a foreign rank list.
TheoremReport verify_fundamental_theorem(const WeightVector& theta,
                                         const Tolerances& tol = {},
                                         std::optional<RankList> expected_ranks = std::nullopt);

std::string format(const TheoremReport& report);

// A rank-one move site: interval indices (l,k,i,h) of the abstract move plus
// the layer slot j whose matrix gets edited.  Legal slots run
// max(i, h+1) <= j <= min(l, k+1).
struct MoveSiteIndex {
  Int l = 0, k = 0, j = 0, i = 0, h = 0;
};

// The rank-c direction D = sum of dyads u_t v_t^T with u_t the first c
// columns of Jgen(l,j,i) and v_t the first c columns of Kgen(k,j-1,h),
// normalized to unit Frobenius norm.  Throws when either block has fewer
// than c columns (the move is not available at this rank list).
Eigen::MatrixXd move_direction(const FlowSystem& flow, const MoveSiteIndex& idx,
                               Int c = 1);

struct OneMatrixMoveResult {
  WeightVector theta_prime;
  RankList ranks_before;
  RankList ranks_after;
  double eps_used = 0.0;
};

// Executes W_j <- W_j + eps·D and reports the rank lists on both sides.
// eps <= 0 asks for the default 1e-3·(|W_j|_F + 1); the step is halved (at
// most 20 times) while any subsequence rank drops below its starting value.
// Checks first that D lives in the admissible cone for the site,
// D = P_a·D·P_b within 1e-8·|D| with P_a the projector onto span Jgen(l,j,i)
// and P_b onto span Kgen(k,j-1,h); throws when the direction is foreign.
OneMatrixMoveResult one_matrix_move(const FlowSystem& flow, const MoveSiteIndex& idx,
                                    const Eigen::MatrixXd& direction, double eps = 0.0);

// The curve through theta obtained by the gauge action at layer j:
//   W_{j+1} <- W_{j+1}(I + eps·H),   W_j <- (I + eps·H)^{-1} W_j.
// Leaves the product invariant exactly; throws when I + eps·H is singular or
// worse than 1e8-conditioned.  Requires 1 <= j <= L-1.
WeightVector two_matrix_path_point(const WeightVector& theta, Int j,
                                   const Eigen::MatrixXd& H, double eps);

}  // namespace fiberstrat
