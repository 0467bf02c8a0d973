#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fiberstrat {

using Int = std::int64_t;

// Layer widths d_0..d_L of a fully connected linear network
//   x -> W_L * ... * W_1 * x,   W_j of size d_j x d_{j-1}.
struct NetworkShape {
  std::vector<Int> d;

  Int L() const { return static_cast<Int>(d.size()) - 1; }
  Int width(Int j) const;
  Int min_width() const;
  // dimension of the parameter space (all L matrices)
  Int param_dim() const;
  bool operator==(const NetworkShape&) const = default;
};

// Validates L >= 1 and every width >= 1.
NetworkShape make_shape(std::vector<Int> widths);

// Storage index into the lower triangle {(k,i) : 0 <= i <= k <= L}.
inline Int tri_index(Int k, Int i) { return k * (k + 1) / 2 + i; }
inline Int tri_size(Int L) { return (L + 1) * (L + 2) / 2; }

// Ranks r(k,i) = rk(W_k * ... * W_{i+1}) of all subsequence products,
// stored for L >= k >= i >= 0.  The empty product W_{k..k} is the identity,
// so r(k,k) = d_k; by convention the out-of-range products W_{L+1..x} and
// W_{y..-1} are zero maps, so at() returns 0 for k = L+1 or i = -1.
struct RankList {
  NetworkShape shape;
  std::vector<Int> r;

  Int at(Int k, Int i) const;
  void set(Int k, Int i, Int value);
  // rank of the end-to-end product, r(L,0); constant across one fiber
  Int fiber_rank() const { return at(shape.L(), 0); }
  // canonical byte serialization, usable as a hash/map key
  std::string key() const;
  bool operator==(const RankList&) const = default;
};

// All entries zero (diagonal included); the enumeration code fills it in.
RankList zero_ranklist(NetworkShape shape);

// The unique minimum of the stratification order: every off-diagonal rank
// equals the fiber rank R.  Valid iff 0 <= R <= min_j d_j.
RankList minimal_ranklist(NetworkShape shape, Int R);

// Interval multiplicities w(k,i) over intervals [i,k] in {0..L}, same
// triangular layout.  For a rank list these are its second differences
//   w(k,i) = r(k,i) - r(k,i-1) - r(k+1,i) + r(k+1,i-1).
struct IntervalMultiset {
  NetworkShape shape;
  std::vector<Int> w;

  // reads 0 outside the triangle; set/add stay bounds-checked
  Int at(Int k, Int i) const;
  void set(Int k, Int i, Int value);
  void add(Int k, Int i, Int delta);
  bool operator==(const IntervalMultiset&) const = default;
};

IntervalMultiset zero_multiset(NetworkShape shape);
IntervalMultiset omega_of(const RankList& r);

// Inverse of omega_of:  r(k,i) = sum_{t=k..L} sum_{s=0..i} w(t,s).
RankList ranks_of(const IntervalMultiset& w);

struct Validation {
  bool ok = true;
  std::string reason;  // empty when ok
  Int k = -1, i = -1;  // offending cell when applicable
};

// A rank list is realizable by actual matrices iff its diagonal equals the
// layer widths and all interval multiplicities are nonnegative.
Validation validate(const RankList& r);

// A multiset is realizable iff all multiplicities are nonnegative and each
// layer j is covered with total multiplicity d_j:
//   sum over intervals [i,k] containing j of w(k,i) = d_j.
Validation validate(const IntervalMultiset& w);

// Pointwise partial order on rank lists of one shape.
bool leq(const RankList& a, const RankList& b);

// dim A(k,j,i) = dim( null W_{k+1..j} /\ col W_{j..i} )
//              = sum_{t=j..k} sum_{s=0..i} w(t,s) = r(j,i) - r(k+1,i),
// for L >= k >= j >= i >= -1 (i = -1 gives the zero space).
Int alpha(const RankList& r, Int k, Int j, Int i);

// dim B(k,j,i) = dim( row W_{k..j} /\ null W_{j..i-1}^T )
//              = sum_{t=k..L} sum_{s=i..j} w(t,s) = r(k,j) - r(k,i-1),
// for L >= k >= j >= i >= 0.
Int beta(const RankList& r, Int k, Int j, Int i);

// Dimension counts attached to one stratum, all integer formulas in the
// rank list.  Naming scheme: O = one-matrix variation families, T =
// two-matrix families; L0 = rank-raising directions (l = L and h = 0),
// fiber = their complement; comb = combining directions (conn = connecting,
// swap = swapping); stratum = directions that stay on the stratum.
struct DimensionLedger {
  Int d_theta = 0;  // total parameter dimension; also the one-matrix total
  Int O_L0 = 0;
  Int O_fiber = 0;
  Int O_comb = 0;
  Int O_conn = 0;
  Int O_swap = 0;
  Int O_L0_comb = 0;
  Int O_L0_conn = 0;
  Int O_L0_noncomb = 0;
  Int O_fiber_comb = 0;
  Int O_fiber_conn = 0;
  Int O_stratum = 0;
  Int T_L0 = 0;
  Int T_comb = 0;
  Int T_L0_comb = 0;
  Int T_L0_noncomb = 0;
  Int T_fiber_comb = 0;
  Int free_dim = 0;     // nullity of dmu; equals fiber_dim
  Int fiber_dim = 0;
  Int stratum_dim = 0;  // manifold dimension of the stratum
  Int rank_dmu = 0;

  // stratum dimension / fiber degrees of freedom / rank-changing dof
  Int dim() const { return stratum_dim; }
  Int dof() const { return free_dim; }
  Int rdof() const { return free_dim - stratum_dim; }
};

// Requires a valid rank list; cross-checks the internal additivity
// identities and throws std::logic_error if any fails.
DimensionLedger dimension_ledger(const RankList& r);

}  // namespace fiberstrat
