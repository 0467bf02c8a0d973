#pragma once

#include <utility>
#include <vector>

#include "fiberstrat/ranklist.hpp"

namespace fiberstrat {

// Abstract rank-c move labeled (l,k,i,h): joins an interval [i,l] with an
// interval [h,k] into [h,l] (plus [i,k] when k >= i).  Legal labels satisfy
//   L >= l >= k+1 >= i > h >= 0,  c >= 1.
// Connecting moves (k+1 = i) merge adjacent intervals; swapping moves
// (k >= i) overlap.  Exactly one of the two holds for a legal label.
struct AbstractMove {
  Int l = 0, k = 0, i = 0, h = 0;
  Int c = 1;

  bool connecting() const { return k + 1 == i; }
  bool swapping() const { return k >= i; }
  bool operator==(const AbstractMove&) const = default;
};

// ordering by (l,k,i,h,c); used for deterministic exports
bool move_less(const AbstractMove& a, const AbstractMove& b);

const char* kind_name(const AbstractMove& m);  // "connecting" / "swapping"

// Throws std::invalid_argument unless the label is legal for this L.
void validate_abstract_move(Int L, const AbstractMove& m);

// Moves with l = L and h = 0 raise the end-to-end rank r(L,0) and therefore
// leave the fiber; all others preserve it.
inline bool stays_on_fiber(const AbstractMove& m, Int L) { return m.l < L || m.h > 0; }

struct OmegaDelta {
  Int k = 0, i = 0, delta = 0;
};

struct MoveEffect {
  bool connecting = false;
  // every rank r(y,x) with y in [y_lo,y_hi], x in [x_lo,x_hi] gains delta
  Int y_lo = 0, y_hi = 0, x_lo = 0, x_hi = 0, delta = 0;
  // 3 multiplicity changes for connecting moves, 4 for swapping
  std::vector<OmegaDelta> omega_changes;
};

// Effects depend only on the label and c, not on any particular rank list.
MoveEffect predict_move_effects(const AbstractMove& m);

// Requires w(l,i) >= c and w(k,h) >= c at r; the result is again valid and
// strictly greater under leq.
RankList apply_abstract_move(const RankList& r, const AbstractMove& m);

// All rank-1 moves available at r — every legal (l,k,i,h) with w(l,i) > 0
// and w(k,h) > 0 — in ascending (l,k,i,h) order.  Includes the fiber-leaving
// ones (l = L, h = 0); callers building the stratum dag filter those out.
std::vector<AbstractMove> enumerate_abstract_moves(const RankList& r);

// Given valid r < s, produce the predecessor t and the final rank-1 move m
// of some chain r -> ... -> t -> s, so apply_abstract_move(t, m) == s.
std::pair<RankList, AbstractMove> find_last_move(const RankList& r, const RankList& s);

// Full chain r = t_0 < t_1 < ... < t_n = s as pairs (t_j, m_j) with
// apply_abstract_move(t_{j-1}, m_j) == t_j; empty when r == s.
// Works across fibers too (r(L,0) may increase; such chains contain
// fiber-leaving moves).
std::vector<std::pair<RankList, AbstractMove>> find_all_moves(const RankList& r,
                                                              const RankList& s);

}  // namespace fiberstrat
