#pragma once

// Shared helpers for the test suites: fixture builders for the worked
// examples, brute-force oracles for small shapes, and seeded generators for
// random shapes, rank lists, and on-stratum sample points.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"

namespace testutil {

using fiberstrat::Int;
using fiberstrat::NetworkShape;
using fiberstrat::RankList;
using fiberstrat::WeightVector;

// Rank list from off-diagonal entries {k, i, value}; the diagonal is implied
// by the widths and anything unspecified stays zero.
inline RankList rl(const NetworkShape& shape, const std::vector<std::array<Int, 3>>& offdiag) {
  RankList r = fiberstrat::zero_ranklist(shape);
  for (Int j = 0; j <= shape.L(); ++j) r.set(j, j, shape.width(j));
  for (const auto& e : offdiag) r.set(e[0], e[1], e[2]);
  return r;
}

// The depth-2 worked example: widths (4, 6, 5), end-to-end rank 1.  Vertices
// are written S_xy with x = r(2,1) and y = r(1,0).
inline NetworkShape pentagon_shape() { return fiberstrat::make_shape({4, 6, 5}); }

inline RankList pentagon_vertex(Int r21, Int r10) {
  return rl(pentagon_shape(), {{1, 0, r10}, {2, 0, 1}, {2, 1, r21}});
}

// The depth-3 scalar chain (all widths 1).  Vertices S_abc carry
// a = r(3,2), b = r(2,1), c = r(1,0).
inline NetworkShape chain_shape() { return fiberstrat::make_shape({1, 1, 1, 1}); }

inline RankList chain_vertex(Int r32, Int r21, Int r10, Int r20, Int r31, Int r30) {
  return rl(chain_shape(),
            {{1, 0, r10}, {2, 0, r20}, {2, 1, r21}, {3, 0, r30}, {3, 1, r31}, {3, 2, r32}});
}

// Every filling of the off-diagonal triangle with r(k,i) in [0, min(d_k,d_i)]
// (a superset of the valid values) and the diagonal pinned to the widths.
// Exponential; intended for exhaustive oracles on L <= 3, d_j <= 3.
inline std::vector<RankList> all_candidate_ranklists(const NetworkShape& shape) {
  const Int L = shape.L();
  std::vector<std::pair<Int, Int>> cells;
  for (Int k = 1; k <= L; ++k)
    for (Int i = 0; i < k; ++i) cells.emplace_back(k, i);

  std::vector<RankList> out;
  RankList r = fiberstrat::zero_ranklist(shape);
  for (Int j = 0; j <= L; ++j) r.set(j, j, shape.width(j));
  std::function<void(std::size_t)> rec = [&](std::size_t c) {
    if (c == cells.size()) {
      out.push_back(r);
      return;
    }
    const auto [k, i] = cells[c];
    const Int hi = std::min(shape.width(k), shape.width(i));
    for (Int v = 0; v <= hi; ++v) {
      r.set(k, i, v);
      rec(c + 1);
    }
  };
  rec(0);
  return out;
}

// All shapes with depth <= Lmax and widths in [1, dmax], lexicographic.
inline std::vector<NetworkShape> all_shapes(Int Lmax, Int dmax) {
  std::vector<NetworkShape> out;
  for (Int L = 1; L <= Lmax; ++L) {
    std::vector<Int> d(static_cast<std::size_t>(L) + 1, 1);
    for (;;) {
      out.push_back(fiberstrat::make_shape(d));
      std::size_t j = d.size();
      while (j > 0 && d[j - 1] == dmax) d[--j] = 1;
      if (j == 0) break;
      ++d[j - 1];
    }
  }
  return out;
}

inline NetworkShape random_shape(std::mt19937_64& rng, Int Lmax, Int dmax) {
  std::uniform_int_distribution<Int> Lpick(1, Lmax), dpick(1, dmax);
  std::vector<Int> d(static_cast<std::size_t>(Lpick(rng)) + 1);
  for (auto& w : d) w = dpick(rng);
  return fiberstrat::make_shape(std::move(d));
}

// Random valid rank list with fiber rank R (0 <= R <= min width): walks the
// cells column by column and draws each entry uniformly from the interval
// that keeps every interval multiplicity nonnegative.
inline RankList random_valid_ranklist(const NetworkShape& shape, Int R, std::mt19937_64& rng) {
  const Int L = shape.L();
  RankList r = fiberstrat::minimal_ranklist(shape, R);
  for (Int i = 0; i <= L - 1; ++i) {
    for (Int k = i + 1; k <= (i == 0 ? L - 1 : L); ++k) {
      Int lo, hi;
      if (i == 0) {
        lo = R;
        hi = std::min(r.at(k - 1, 0), shape.width(k));
      } else {
        lo = r.at(k, i - 1);
        hi = std::min(r.at(k - 1, i) + r.at(k, i - 1) - r.at(k - 1, i - 1), shape.width(k));
      }
      std::uniform_int_distribution<Int> pick(lo, hi);
      r.set(k, i, pick(rng));
    }
  }
  return r;
}

inline RankList random_valid_ranklist(const NetworkShape& shape, std::mt19937_64& rng) {
  std::uniform_int_distribution<Int> Rpick(0, shape.min_width());
  return random_valid_ranklist(shape, Rpick(rng), rng);
}

// A deterministic random stratum point: shape, rank list, the target product
// W, and weights sampled on the stratum inside W's fiber.
struct SamplePoint {
  NetworkShape shape;
  RankList ranks;
  Eigen::MatrixXd W;
  WeightVector theta;
};

inline SamplePoint random_point(std::uint64_t seed, Int Lmax = 4, Int dmax = 5) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
  NetworkShape shape = random_shape(rng, Lmax, dmax);
  // target rank >= 1: every subsequence block then has true rank >= 1, so no
  // rank decision sits on a structurally-zero block where O(eps) residue from
  // gauges or moves would register as rank one under a relative cutoff
  std::uniform_int_distribution<Int> Rpick(1, shape.min_width());
  RankList r = random_valid_ranklist(shape, Rpick(rng), rng);
  Eigen::MatrixXd W = fiberstrat::random_matrix_with_rank(
      shape.width(shape.L()), shape.width(0), r.fiber_rank(), seed + 101);
  WeightVector theta = fiberstrat::sample_on_stratum(W, r, seed + 7);
  return {std::move(shape), std::move(r), std::move(W), std::move(theta)};
}

}  // namespace testutil
