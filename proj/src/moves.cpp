#include "fiberstrat/moves.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace fiberstrat {

namespace {

std::string label_str(const AbstractMove& m) {
  std::ostringstream os;
  os << "(" << m.l << "," << m.k << "," << m.i << "," << m.h << ")";
  return os.str();
}

}  // namespace

bool move_less(const AbstractMove& a, const AbstractMove& b) {
  return std::tie(a.l, a.k, a.i, a.h, a.c) < std::tie(b.l, b.k, b.i, b.h, b.c);
}

const char* kind_name(const AbstractMove& m) {
  return m.connecting() ? "connecting" : "swapping";
}

void validate_abstract_move(Int L, const AbstractMove& m) {
  if (!(L >= m.l && m.l >= m.k + 1 && m.k + 1 >= m.i && m.i > m.h && m.h >= 0))
    throw std::invalid_argument("illegal move label " + label_str(m) +
                                ": need L >= l >= k+1 >= i > h >= 0");
  if (m.c < 1) throw std::invalid_argument("move magnitude c must be >= 1");
}

MoveEffect predict_move_effects(const AbstractMove& m) {
  // validate everything except l <= L, which needs a shape
  validate_abstract_move(m.l, m);
  MoveEffect e;
  e.connecting = m.connecting();
  e.y_lo = m.k + 1;
  e.y_hi = m.l;
  e.x_lo = m.h;
  e.x_hi = m.i - 1;
  e.delta = m.c;
  e.omega_changes = {{m.l, m.i, -m.c}, {m.k, m.h, -m.c}, {m.l, m.h, m.c}};
  if (m.swapping()) e.omega_changes.push_back({m.k, m.i, m.c});
  return e;
}

RankList apply_abstract_move(const RankList& r, const AbstractMove& m) {
  const Int L = r.shape.L();
  validate_abstract_move(L, m);
  const IntervalMultiset w = omega_of(r);
  if (w.at(m.l, m.i) < m.c || w.at(m.k, m.h) < m.c) {
    std::ostringstream os;
    os << "move " << label_str(m) << " with c=" << m.c << " unavailable: w(" << m.l << ","
       << m.i << ")=" << w.at(m.l, m.i) << ", w(" << m.k << "," << m.h << ")="
       << w.at(m.k, m.h);
    throw std::invalid_argument(os.str());
  }
  RankList s = r;
  for (Int y = m.k + 1; y <= m.l; ++y)
    for (Int x = m.h; x <= m.i - 1; ++x) s.set(y, x, s.at(y, x) + m.c);
  return s;
}

std::vector<AbstractMove> enumerate_abstract_moves(const RankList& r) {
  if (Validation v = validate(r); !v.ok)
    throw std::invalid_argument("cannot enumerate moves of an invalid rank list: " + v.reason);
  const Int L = r.shape.L();
  const IntervalMultiset w = omega_of(r);
  std::vector<AbstractMove> out;
  for (Int l = 1; l <= L; ++l)
    for (Int k = 0; k <= l - 1; ++k)
      for (Int i = 1; i <= k + 1; ++i)
        for (Int h = 0; h <= i - 1; ++h)
          if (w.at(l, i) > 0 && w.at(k, h) > 0) out.push_back({l, k, i, h, 1});
  return out;
}

std::pair<RankList, AbstractMove> find_last_move(const RankList& r, const RankList& s) {
  if (r.shape != s.shape) throw std::invalid_argument("rank lists have different shapes");
  if (Validation v = validate(r); !v.ok)
    throw std::invalid_argument("start rank list invalid: " + v.reason);
  if (Validation v = validate(s); !v.ok)
    throw std::invalid_argument("target rank list invalid: " + v.reason);
  if (!leq(r, s)) throw std::invalid_argument("start rank list is not <= target");
  if (r == s) throw std::invalid_argument("start and target rank lists are equal");

  const Int L = r.shape.L();
  const IntervalMultiset wr = omega_of(r), ws = omega_of(s);
  const auto dr = [&](Int y, Int x) { return s.at(y, x) - r.at(y, x); };
  const auto dw = [&](Int y, Int x) { return ws.at(y, x) - wr.at(y, x); };

  // longest interval [h,l] where the target rank still exceeds the start;
  // among equally long ones the smallest h wins (any choice is sound, this
  // one is deterministic)
  Int l = -1, h = -1;
  for (Int len = L; len >= 1 && l < 0; --len)
    for (Int hh = 0; hh + len <= L; ++hh)
      if (dr(hh + len, hh) >= 1) {
        l = hh + len;
        h = hh;
        break;
      }
  if (l < 0) throw std::logic_error("no rank difference found despite r < s");

  // smallest i' in [h+1, l] at which the deficit pattern changes
  Int ip = -1;
  for (Int cand = h + 1; cand <= l; ++cand)
    if (cand == l || dw(l - 1, cand) > 0 || dr(l, cand) == 0) {
      ip = cand;
      break;
    }

  Int k = -1, i = -1;
  if (ip == l || dw(l - 1, ip) > 0) {
    i = ip;
    k = l - 1;
  } else {
    for (Int kk = l - 2; kk >= ip - 1; --kk) {
      bool hit = kk == ip - 1;
      for (Int ii = h + 1; !hit && ii <= ip; ++ii) hit = dw(kk, ii) > 0;
      if (hit) {
        k = kk;
        break;
      }
    }
    for (Int ii = h + 1; ii <= ip; ++ii)
      if (k == ii - 1 || dw(k, ii) > 0) {
        i = ii;
        break;
      }
  }
  if (k < 0 || i < 0) throw std::logic_error("move scan failed to settle k and i");

  AbstractMove m{l, k, i, h, 1};
  validate_abstract_move(L, m);
  RankList t = s;
  for (Int y = k + 1; y <= l; ++y)
    for (Int x = h; x <= i - 1; ++x) t.set(y, x, t.at(y, x) - 1);

  // guaranteed by the planner's correctness lemma; cheap to re-check
  if (Validation v = validate(t); !v.ok)
    throw std::logic_error("predecessor rank list invalid: " + v.reason);
  if (!leq(r, t)) throw std::logic_error("predecessor dropped below the start rank list");
  return {std::move(t), m};
}

std::vector<std::pair<RankList, AbstractMove>> find_all_moves(const RankList& r,
                                                              const RankList& s) {
  if (!leq(r, s)) throw std::invalid_argument("start rank list is not <= target");
  std::vector<std::pair<RankList, AbstractMove>> chain;
  RankList t = s;
  while (!(t == r)) {
    auto [prev, m] = find_last_move(r, t);
    chain.emplace_back(std::move(t), m);
    t = std::move(prev);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace fiberstrat
