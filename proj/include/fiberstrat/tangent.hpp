#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fiberstrat/flow.hpp"
#include "fiberstrat/moves.hpp"

namespace fiberstrat {

// Three kinds of indexed weight-space families:
//   one_matrix φ(l,k,j,i,h):  ΔW_j = u v^T,  u ∈ a(l,j,i), v ∈ b(k,j-1,h)
//   two_matrix τ(l,k,j,i,h):  (ΔW_{j+1}, ΔW_j) = (W_{j+1}H, -H W_j),
//                             H = u v^T,  u ∈ a(l,j,i), v ∈ b(k,j,h)
//   normal     ψ(l,k,i,h):    block X_j = W_{l~j}^T M W_{j-1~h}^T on the
//                             slots j ∈ [max(i,h+1), min(k+1,l)], zero
//                             elsewhere, M = u v^T, u ∈ b(l,l,i), v ∈ a(k,h,h)
enum class FamilyKind { one_matrix, two_matrix, normal };

struct FamilyIndex {
  FamilyKind kind = FamilyKind::one_matrix;
  Int l = 0, k = 0, j = 0, i = 0, h = 0;  // normal families ignore j

  bool operator==(const FamilyIndex&) const = default;
};

std::string to_string(const FamilyIndex& idx);  // "phi(2,1,1,1,0)" etc.

// Membership flags in the named classes and in the prebasis selections.
struct ClassTags {
  bool L0 = false;       // rank-raising: l = L and h = 0
  bool fiber = false;    // not L0
  bool comb = false;     // combining: l > k and i > h
  bool conn = false;     // connecting combining: k + 1 = i
  bool swap = false;     // swapping combining: k >= i
  bool free = false;     // member of the freedom prebasis
  bool stratum = false;  // member of the stratum prebasis
};

// Tags from the definitional formulas above.  Throws std::invalid_argument
// on out-of-range indices and on non-canonical two-matrix indices (l = j or
// h = j), naming the one-matrix family the index collapses to.
ClassTags classify_index(Int L, const FamilyIndex& idx);

struct WeightSubspace {
  FamilyIndex idx;
  ClassTags tags;
  Int dim = 0;  // ω(l,i) · ω(k,h); generators are materialized lazily
};

// Every nonzero canonical one- and two-matrix family, deterministic order.
// The one-matrix dims alone sum to d_θ (they span the whole weight space).
std::vector<WeightSubspace> build_weight_prebases(const FlowSystem& flow);

// Every nonzero normal family of the stratum selection (which contains the
// freedom selection: filter on tags.free for it).
std::vector<WeightSubspace> build_normal_prebases(const FlowSystem& flow);

// selection filters over the lists above
std::vector<WeightSubspace> select_free(const std::vector<WeightSubspace>& families);
std::vector<WeightSubspace> select_stratum(const std::vector<WeightSubspace>& families);
// the fiber prebasis: the stratum one plus each combining fiber one-matrix
// family taken at the single slot j = k+1
std::vector<WeightSubspace> select_fiber(const std::vector<WeightSubspace>& families);

// Raw generator columns, one flattened d_θ-vector per (u,v) pair,
// unnormalized so the exact block identities hold.
Eigen::MatrixXd materialize_family(const FlowSystem& flow, const FamilyIndex& idx);

// Joint span of the families (columns unit-normalized before the SVD).
Subspace materialize_span(const FlowSystem& flow, const std::vector<WeightSubspace>& families,
                          std::optional<Tolerances> tol = std::nullopt);

Subspace tangent_space(const FlowSystem& flow);  // span of the stratum tangent prebasis
Subspace normal_space(const FlowSystem& flow);   // span of the stratum normal prebasis
Subspace rowspace_dmu(const FlowSystem& flow);   // span of the freedom normal prebasis

// reference subspaces straight from the differential
Subspace nullspace_dmu(const WeightVector& theta, const Tolerances& tol = {});
Subspace rowspace_dmu_direct(const WeightVector& theta, const Tolerances& tol = {});

// The stratum normal space by the direct formula: row dμ plus, for every
// subsequence product W_{y~x}, the pullbacks dμ_{y~x}^T(u v^T) over
// u ∈ left-null and v ∈ null of W_{y~x}.
Subspace normal_space_direct(const WeightVector& theta, const Tolerances& tol = {});

// Dimension of span(stratum tangent prebasis ∪ the move's one-matrix family
// at slot j = k+1).  When the ledger identity
// stratum_dim(r) + ω(l,i)·ω(k,h) = stratum_dim(s) holds for the move's
// destination s, this measures the tangent of the destination's closure.
Int edge_subset_dim(const FlowSystem& flow, const AbstractMove& m);

struct GeometryCheck {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // cosine deficit / max inner product / |dim error|
  double expected = 0.0;
  double measured = 0.0;
};

struct GeometryReport {
  bool all_pass = false;
  std::vector<GeometryCheck> checks;
};

// All tangent/normal dimension counts and span identities at one point.
// measure_tol overrides the tolerance used for the measured spans (the flow
// itself keeps its own); a deliberately coarse one is the negative control.
GeometryReport verify_geometry(const FlowSystem& flow,
                               std::optional<Tolerances> measure_tol = std::nullopt);

std::string format(const GeometryReport& report);

}  // namespace fiberstrat
