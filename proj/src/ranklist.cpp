#include "fiberstrat/ranklist.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fiberstrat {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void require_shape(const NetworkShape& s) {
  if (s.L() < 1) fail("network shape needs at least one matrix (two layers)");
  for (Int w : s.d)
    if (w < 1) fail("layer widths must be positive");
}

std::string cell(const char* name, Int k, Int i) {
  std::ostringstream os;
  os << name << "(" << k << "," << i << ")";
  return os.str();
}

}  // namespace

Int NetworkShape::width(Int j) const {
  if (j < 0 || j > L()) fail("layer index out of range");
  return d[static_cast<std::size_t>(j)];
}

Int NetworkShape::min_width() const {
  return *std::min_element(d.begin(), d.end());
}

Int NetworkShape::param_dim() const {
  Int n = 0;
  for (Int j = 1; j <= L(); ++j) n += width(j) * width(j - 1);
  return n;
}

NetworkShape make_shape(std::vector<Int> widths) {
  NetworkShape s{std::move(widths)};
  require_shape(s);
  return s;
}

Int RankList::at(Int k, Int i) const {
  const Int L = shape.L();
  // zero-map conventions: W_{L+1..x} = 0 and W_{y..-1} = 0
  if (k == L + 1 && i >= -1 && i <= L + 1) return 0;
  if (i == -1 && k >= -1 && k <= L + 1) return 0;
  if (k < 0 || k > L || i < 0 || i > k) fail("rank index " + cell("r", k, i) + " out of range");
  return r[static_cast<std::size_t>(tri_index(k, i))];
}

void RankList::set(Int k, Int i, Int value) {
  const Int L = shape.L();
  if (k < 0 || k > L || i < 0 || i > k) fail("rank index " + cell("r", k, i) + " out of range");
  r[static_cast<std::size_t>(tri_index(k, i))] = value;
}

std::string RankList::key() const {
  std::ostringstream os;
  os << "d";
  for (Int w : shape.d) os << ":" << w;
  os << "|r";
  for (Int v : r) os << ":" << v;
  return os.str();
}

RankList zero_ranklist(NetworkShape shape) {
  require_shape(shape);
  const Int L = shape.L();
  return RankList{std::move(shape), std::vector<Int>(static_cast<std::size_t>(tri_size(L)), 0)};
}

RankList minimal_ranklist(NetworkShape shape, Int R) {
  RankList r = zero_ranklist(std::move(shape));
  const Int L = r.shape.L();
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= k; ++i) r.set(k, i, k == i ? r.shape.width(k) : R);
  return r;
}

Int IntervalMultiset::at(Int k, Int i) const {
  const Int L = shape.L();
  // out-of-range multiplicities read as 0 so formulas transcribe verbatim
  if (k < 0 || k > L || i < 0 || i > k) return 0;
  return w[static_cast<std::size_t>(tri_index(k, i))];
}

void IntervalMultiset::set(Int k, Int i, Int value) {
  const Int L = shape.L();
  if (k < 0 || k > L || i < 0 || i > k) fail("interval index " + cell("w", k, i) + " out of range");
  w[static_cast<std::size_t>(tri_index(k, i))] = value;
}

void IntervalMultiset::add(Int k, Int i, Int delta) { set(k, i, at(k, i) + delta); }

IntervalMultiset zero_multiset(NetworkShape shape) {
  require_shape(shape);
  const Int L = shape.L();
  return IntervalMultiset{std::move(shape),
                          std::vector<Int>(static_cast<std::size_t>(tri_size(L)), 0)};
}

IntervalMultiset omega_of(const RankList& r) {
  IntervalMultiset w = zero_multiset(r.shape);
  const Int L = r.shape.L();
  if (r.r.size() != static_cast<std::size_t>(tri_size(L))) fail("rank list storage size mismatch");
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= k; ++i)
      w.set(k, i, r.at(k, i) - r.at(k, i - 1) - r.at(k + 1, i) + r.at(k + 1, i - 1));
  return w;
}

RankList ranks_of(const IntervalMultiset& w) {
  RankList r = zero_ranklist(w.shape);
  const Int L = w.shape.L();
  if (w.w.size() != static_cast<std::size_t>(tri_size(L))) fail("multiset storage size mismatch");
  // r(k,i) counts intervals reaching past layer k on the left and into
  // {0..i} on the right; accumulate the rectangle sums directly.
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= k; ++i) {
      Int sum = 0;
      for (Int t = k; t <= L; ++t)
        for (Int s = 0; s <= std::min(i, t); ++s) sum += w.at(t, s);
      r.set(k, i, sum);
    }
  return r;
}

Validation validate(const RankList& r) {
  const Int L = r.shape.L();
  if (L < 1) return {false, "network shape needs at least one matrix", -1, -1};
  if (r.r.size() != static_cast<std::size_t>(tri_size(L)))
    return {false, "rank list storage size mismatch", -1, -1};
  for (Int j = 0; j <= L; ++j)
    if (r.at(j, j) != r.shape.width(j)) {
      std::ostringstream os;
      os << "diagonal entry " << cell("r", j, j) << " = " << r.at(j, j)
         << " must equal layer width " << r.shape.width(j);
      return {false, os.str(), j, j};
    }
  const IntervalMultiset w = omega_of(r);
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= k; ++i)
      if (w.at(k, i) < 0) {
        std::ostringstream os;
        os << "interval multiplicity " << cell("w", k, i) << " = " << w.at(k, i)
           << " is negative";
        return {false, os.str(), k, i};
      }
  return {};
}

Validation validate(const IntervalMultiset& w) {
  const Int L = w.shape.L();
  if (w.w.size() != static_cast<std::size_t>(tri_size(L)))
    return {false, "multiset storage size mismatch", -1, -1};
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= k; ++i)
      if (w.at(k, i) < 0) {
        std::ostringstream os;
        os << "interval multiplicity " << cell("w", k, i) << " = " << w.at(k, i)
           << " is negative";
        return {false, os.str(), k, i};
      }
  for (Int j = 0; j <= L; ++j) {
    Int covered = 0;
    for (Int k = j; k <= L; ++k)
      for (Int i = 0; i <= std::min(j, k); ++i) covered += w.at(k, i);
    if (covered != w.shape.width(j)) {
      std::ostringstream os;
      os << "layer " << j << " covered with multiplicity " << covered << " but width is "
         << w.shape.width(j);
      return {false, os.str(), j, j};
    }
  }
  return {};
}

bool leq(const RankList& a, const RankList& b) {
  if (a.shape != b.shape) fail("rank lists of different shapes are incomparable");
  for (std::size_t t = 0; t < a.r.size(); ++t)
    if (a.r[t] > b.r[t]) return false;
  return true;
}

Int alpha(const RankList& r, Int k, Int j, Int i) {
  const Int L = r.shape.L();
  if (!(L >= k && k >= j && j >= i && i >= -1)) fail("alpha index out of range");
  return r.at(j, i) - r.at(k + 1, i);
}

Int beta(const RankList& r, Int k, Int j, Int i) {
  const Int L = r.shape.L();
  if (!(L >= k && k >= j && j >= i && i >= 0)) fail("beta index out of range");
  return r.at(k, j) - r.at(k, i - 1);
}

DimensionLedger dimension_ledger(const RankList& r) {
  if (Validation v = validate(r); !v.ok) fail("dimension ledger needs a valid rank list: " + v.reason);
  const Int L = r.shape.L();
  const Int R = r.fiber_rank();
  const IntervalMultiset w = omega_of(r);

  DimensionLedger g;
  g.d_theta = r.shape.param_dim();

  for (Int j = 1; j <= L; ++j) g.O_L0 += r.at(L, j) * r.at(j - 1, 0);
  g.O_fiber = g.d_theta - g.O_L0;
  for (Int j = 1; j <= L - 1; ++j) g.T_L0 += r.at(L, j) * r.at(j, 0);
  g.free_dim = g.d_theta - g.O_L0 + g.T_L0;
  g.fiber_dim = g.free_dim;
  g.rank_dmu = g.O_L0 - g.T_L0;

  // Combining directions pair an interval ending at layer k+1 (counted by
  // beta(k+1,i,i)) with one starting at layer k (counted by alpha(k,k,i-1));
  // the (k-i+2) resp. (k-i+1) factor counts the matrix slots j a one- or
  // two-matrix variation can sit at.
  Int stratum_defect = 0;
  for (Int k = 0; k <= L - 1; ++k)
    for (Int i = 1; i <= k + 1; ++i) {
      const Int ba = beta(r, k + 1, i, i) * alpha(r, k, k, i - 1);
      const Int ww = w.at(L, i) * w.at(k, 0);
      stratum_defect += ba;
      g.O_comb += (k - i + 2) * ba;
      g.O_L0_comb += (k - i + 2) * ww;
      g.T_L0_comb += (k - i + 1) * ww;
      if (k < L && k >= i) {
        g.O_swap += (k - i + 2) * ba;
        g.T_comb += (k - i + 1) * ba;
      }
    }
  for (Int j = 1; j <= L; ++j) {
    const Int rj = r.at(j, j - 1);
    g.O_conn += (r.shape.width(j) - rj) * (r.shape.width(j - 1) - rj);
    g.O_L0_conn += w.at(L, j) * w.at(j - 1, 0);
  }
  for (Int j = 1; j <= L; ++j) g.O_L0_noncomb += R * (r.at(L, j) + r.at(j - 1, 0) - R);
  for (Int j = 1; j <= L - 1; ++j) g.T_L0_noncomb += R * (r.at(L, j) + r.at(j, 0) - R);

  g.O_fiber_comb = g.O_comb - g.O_L0_comb;
  g.O_fiber_conn = g.O_conn - g.O_L0_conn;
  g.T_fiber_comb = g.T_comb - g.T_L0_comb;
  g.O_stratum = g.d_theta - g.O_comb - g.O_L0_noncomb;
  g.stratum_dim =
      g.d_theta - R * (r.shape.width(L) + r.shape.width(0) - R) - stratum_defect;

  // Additivity identities; a failure here means the formulas above disagree.
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::logic_error(std::string("dimension ledger inconsistency: ") + what);
  };
  check(g.O_conn + g.O_swap == g.O_comb, "conn + swap != comb");
  check(g.O_L0_comb + g.O_L0_noncomb == g.O_L0, "O_L0 split");
  check(g.T_L0_comb + g.T_L0_noncomb == g.T_L0, "T_L0 split");
  check(g.O_stratum + g.T_L0_noncomb + g.T_comb == g.stratum_dim, "stratum split");
  check(0 <= g.stratum_dim && g.stratum_dim <= g.free_dim && g.free_dim <= g.d_theta,
        "dimension ordering");
  return g;
}

}  // namespace fiberstrat
