// Acceptance gate: re-runs every published acceptance criterion and prints
// one timed PASS/FAIL line per criterion.  Exits nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiberstrat/dag.hpp"
#include "fiberstrat/flow.hpp"
#include "fiberstrat/io.hpp"
#include "fiberstrat/moves.hpp"
#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"
#include "fiberstrat/subspace.hpp"
#include "fiberstrat/tangent.hpp"
#include "testutil.hpp"

namespace {

using namespace fiberstrat;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Tally {
  long checks = 0;
  long failures = 0;
  std::vector<std::string> notes;

  void note(std::string what) {
    ++failures;
    if (notes.size() < 6) notes.push_back(std::move(what));
  }
  // hot path: no message construction unless the check fails
  void expect(bool ok, const char* what) {
    ++checks;
    if (!ok) note(what);
  }
  template <class MakeNote>
  void expect_f(bool ok, MakeNote&& make) {
    ++checks;
    if (!ok) note(make());
  }
};

std::string shape_str(const NetworkShape& shape) {
  std::ostringstream os;
  os << "d=(";
  for (size_t j = 0; j < shape.d.size(); ++j) os << (j ? "," : "") << shape.d[j];
  os << ")";
  return os.str();
}

std::string point_str(const testutil::SamplePoint& pt, std::uint64_t seed) {
  std::ostringstream os;
  os << "seed " << seed << " " << shape_str(pt.shape) << " "
     << io::vertex_label(pt.ranks);
  return os.str();
}

// ---- criterion 1: dag reproduction ----------------------------------------

void criterion_dags(Tally& t) {
  {
    const auto t0 = Clock::now();
    const StratumDag dag = build_dag(make_shape({4, 6, 5}), 1);
    const double dt = seconds_since(t0);
    t.expect(dt < 1.0, "pentagon dag build exceeded 1 s");
    t.expect(dag.vertices.size() == 17, "pentagon dag: expected 17 strata");
    const struct {
      Int r21, r10, dim, dof, rdof;
    } rows[] = {{1, 1, 11, 46, 35}, {2, 1, 19, 43, 24}, {3, 2, 30, 38, 8},
                {4, 1, 29, 37, 8},  {5, 2, 34, 34, 0},  {3, 4, 34, 34, 0}};
    for (const auto& row : rows) {
      const RankList r = testutil::pentagon_vertex(row.r21, row.r10);
      const DagVertex& vx = dag.vertices[static_cast<size_t>(dag.vertex_id(r))];
      t.expect_f(vx.dim == row.dim && vx.dof == row.dof && vx.rdof == row.rdof, [&] {
        std::ostringstream os;
        os << "pentagon " << io::vertex_label(r) << ": got (" << vx.dim << ","
           << vx.dof << "," << vx.rdof << "), expected (" << row.dim << ","
           << row.dof << "," << row.rdof << ")";
        return os.str();
      });
    }
  }
  {
    const auto t0 = Clock::now();
    const StratumDag dag = build_dag(testutil::chain_shape(), 0);
    t.expect(seconds_since(t0) < 1.0, "depth-3 chain dag build exceeded 1 s");
    t.expect(dag.vertices.size() == 7, "chain rank 0: expected 7 strata");
    t.expect(dag.edges.size() == 9, "chain rank 0: expected 9 edges");
    std::vector<Int> dims;
    for (const DagVertex& vx : dag.vertices) dims.push_back(vx.dim);
    std::sort(dims.begin(), dims.end());
    t.expect(dims == std::vector<Int>({0, 1, 1, 1, 2, 2, 2}),
             "chain rank 0: dimension multiset is not {0,1,1,1,2,2,2}");
    const Int bottom = dag.vertex_id(testutil::chain_vertex(0, 0, 0, 0, 0, 0));
    const Int s011 = dag.vertex_id(testutil::chain_vertex(0, 1, 1, 1, 0, 0));
    bool direct = false;
    for (const DagEdge& e : dag.edges)
      direct = direct || (e.origin == bottom && e.dest == s011);
    t.expect(!direct, "chain rank 0: unexpected direct edge S_000 -> S_011");
  }
  {
    const auto t0 = Clock::now();
    const StratumDag dag = build_dag(make_shape({2, 1, 1}), 0);
    t.expect(seconds_since(t0) < 1.0, "vee dag build exceeded 1 s");
    t.expect(dag.vertices.size() == 3, "(2,1,1) rank 0: expected 3 strata");
    std::vector<Int> dims;
    for (const DagVertex& vx : dag.vertices) dims.push_back(vx.dim);
    std::sort(dims.begin(), dims.end());
    t.expect(dims == std::vector<Int>({0, 1, 2}),
             "(2,1,1) rank 0: dimension multiset is not {0,1,2}");
  }
  {
    const auto t0 = Clock::now();
    const StratumDag dag = build_dag(testutil::chain_shape(), 1);
    t.expect(seconds_since(t0) < 1.0, "hyperboloid dag build exceeded 1 s");
    t.expect(dag.vertices.size() == 1 && dag.vertices[0].dim == 2,
             "chain rank 1: expected a single 2-dimensional stratum");
  }
}

// ---- criterion 2: combinatorial equivalence --------------------------------

void criterion_combinatorics(Tally& t) {
  const auto t0 = Clock::now();
  for (const NetworkShape& shape : testutil::all_shapes(3, 3)) {
    std::vector<RankList> valid;
    for (RankList& c : testutil::all_candidate_ranklists(shape))
      if (validate(c).ok) valid.push_back(std::move(c));

    // (c) find_all_moves succeeds exactly on comparable pairs and replays
    for (const RankList& r : valid)
      for (const RankList& s : valid) {
        if (leq(r, s)) {
          try {
            RankList cur = r;
            bool good = true;
            for (const auto& [result, m] : find_all_moves(r, s)) {
              cur = apply_abstract_move(cur, m);
              good = good && validate(cur).ok && cur == result;
            }
            t.expect(good && cur == s, "move chain does not replay to the target");
          } catch (const std::exception& e) {
            t.expect_f(false, [&] {
              return "find_all_moves threw on a comparable pair at " +
                     shape_str(shape) + ": " + e.what();
            });
          }
        } else {
          bool threw = false;
          try {
            find_all_moves(r, s);
          } catch (const std::invalid_argument&) {
            threw = true;
          }
          t.expect(threw, "find_all_moves accepted an incomparable pair");
        }
      }

    for (Int R = 0; R <= shape.min_width(); ++R) {
      // (a) enumeration equals the brute-force validity filtration
      std::vector<RankList> brute;
      for (const RankList& c : valid)
        if (c.fiber_rank() == R) brute.push_back(c);
      std::sort(brute.begin(), brute.end(),
                [](const RankList& a, const RankList& b) { return a.r < b.r; });
      const StratumDag enumerated = enumerate_vertices(shape, R);
      bool same = enumerated.vertices.size() == brute.size();
      for (size_t v = 0; same && v < brute.size(); ++v)
        same = enumerated.vertices[v].ranklist == brute[v];
      t.expect_f(same, [&] {
        std::ostringstream os;
        os << "enumerate_vertices disagrees with brute force at " << shape_str(shape)
           << " rank " << R << " (" << enumerated.vertices.size() << " vs "
           << brute.size() << ")";
        return os.str();
      });

      // (b) reachability in the dag coincides with the partial order
      const StratumDag dag = build_dag(shape, R);
      for (const DagVertex& u : dag.vertices)
        for (const DagVertex& v : dag.vertices)
          t.expect(reachable(dag, u.ranklist, v.ranklist) == leq(u.ranklist, v.ranklist),
                   "reachable(r,s) differs from leq(r,s)");
    }
  }
  const double dt = seconds_since(t0);
  t.expect_f(dt < 30.0, [&] {
    std::ostringstream os;
    os << "combinatorial suite took " << dt << " s (budget 30 s)";
    return os.str();
  });
}

// ---- criterion 3: rank list <-> multiset bijection --------------------------

void criterion_roundtrip(Tally& t) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260815);
  for (int n = 0; n < 100000; ++n) {
    const NetworkShape shape = testutil::random_shape(rng, 5, 8);
    const RankList r = testutil::random_valid_ranklist(shape, rng);
    const IntervalMultiset w = omega_of(r);
    t.expect(ranks_of(w) == r, "ranks_of(omega_of(r)) differs from r");
    t.expect(omega_of(ranks_of(w)) == w, "omega_of(ranks_of(w)) differs from w");
  }
  const double dt = seconds_since(t0);
  t.expect_f(dt < 10.0, [&] {
    std::ostringstream os;
    os << "round-trip suite took " << dt << " s (budget 10 s)";
    return os.str();
  });
}

// ---- criterion 4: canonical realization -------------------------------------

void criterion_canonical(Tally& t) {
  long vertices = 0;
  for (const NetworkShape& shape : testutil::all_shapes(3, 3))
    for (const RankList& c : testutil::all_candidate_ranklists(shape)) {
      if (!validate(c).ok) continue;
      ++vertices;
      try {
        t.expect_f(ranklist_of(canonical_weight_vector(c)) == c, [&] {
          return "canonical weights do not realize " + io::vertex_label(c) + " at " +
                 shape_str(shape);
        });
      } catch (const std::exception& e) {
        t.expect_f(false, [&] {
          return "canonical realization threw at " + shape_str(shape) + ": " + e.what();
        });
      }
    }
  t.expect(vertices > 1000, "canonical sweep covered suspiciously few vertices");
}

// ---- shared sampled points for criteria 5-7 ---------------------------------

const std::vector<testutil::SamplePoint>& sampled_points() {
  static const std::vector<testutil::SamplePoint> points = [] {
    std::vector<testutil::SamplePoint> v;
    v.reserve(100);
    for (std::uint64_t seed = 0; seed < 100; ++seed)
      v.push_back(testutil::random_point(seed));
    return v;
  }();
  return points;
}

// ---- criterion 5: differential nullity and rank ------------------------------

void criterion_nullity(Tally& t) {
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const testutil::SamplePoint& pt = sampled_points()[seed];
    const DimensionLedger led = dimension_ledger(pt.ranks);
    const Eigen::MatrixXd d = dmu_matrix(pt.theta);
    const Int rk = numerical_rank(d);
    const Int nullity = static_cast<Int>(d.cols()) - rk;
    t.expect_f(rk == led.rank_dmu, [&] {
      std::ostringstream os;
      os << "rank dmu = " << rk << ", ledger says " << led.rank_dmu << " at "
         << point_str(pt, seed);
      return os.str();
    });
    t.expect_f(nullity == led.free_dim, [&] {
      std::ostringstream os;
      os << "nullity dmu = " << nullity << ", ledger says " << led.free_dim << " at "
         << point_str(pt, seed);
      return os.str();
    });
  }
  const double dt = seconds_since(t0);
  t.expect_f(dt < 60.0, [&] {
    std::ostringstream os;
    os << "nullity suite took " << dt << " s (budget 60 s)";
    return os.str();
  });
}

// ---- criterion 6: tangent/normal geometry ------------------------------------

void criterion_geometry(Tally& t) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const testutil::SamplePoint& pt = sampled_points()[seed];
    try {
      const DimensionLedger led = dimension_ledger(pt.ranks);
      const FlowSystem flow = build_flow_prebases(pt.theta, pt.ranks);

      const Subspace tangent = tangent_space(flow);
      const Subspace normal = normal_space(flow);
      t.expect_f(tangent.dim() == led.dim(), [&] {
        std::ostringstream os;
        os << "tangent span dim " << tangent.dim() << " != stratum dim " << led.dim()
           << " at " << point_str(pt, seed);
        return os.str();
      });
      t.expect_f(normal.dim() == led.d_theta - led.dim(), [&] {
        std::ostringstream os;
        os << "normal span dim " << normal.dim() << " != codim "
           << led.d_theta - led.dim() << " at " << point_str(pt, seed);
        return os.str();
      });

      const Subspace free_span =
          materialize_span(flow, select_free(build_weight_prebases(flow)));
      const Subspace null_direct = nullspace_dmu(pt.theta);
      t.expect_f(free_span.dim() == null_direct.dim() &&
                     std::max(containment_residual(null_direct, free_span),
                              containment_residual(free_span, null_direct)) <= 1e-8,
                 [&] { return "freedom tangent span != null dmu at " + point_str(pt, seed); });

      const Subspace row_span = rowspace_dmu(flow);
      const Subspace row_direct = rowspace_dmu_direct(pt.theta);
      t.expect_f(row_span.dim() == row_direct.dim() &&
                     std::max(containment_residual(row_direct, row_span),
                              containment_residual(row_span, row_direct)) <= 1e-8,
                 [&] { return "freedom normal span != row dmu at " + point_str(pt, seed); });

      if (tangent.dim() > 0 && normal.dim() > 0) {
        const double worst =
            (tangent.basis().transpose() * normal.basis()).cwiseAbs().maxCoeff();
        t.expect_f(worst <= 1e-8, [&] {
          std::ostringstream os;
          os << "tangent-normal inner product " << worst << " at " << point_str(pt, seed);
          return os.str();
        });
      }

      t.expect_f(verify_fundamental_theorem(pt.theta).all_pass,
                 [&] { return "theorem report not all-pass at " + point_str(pt, seed); });
    } catch (const std::exception& e) {
      t.expect_f(false, [&] {
        return "geometry suite threw at " + point_str(pt, seed) + ": " + e.what();
      });
    }
  }
}

// ---- criterion 7: move semantics ----------------------------------------------

void criterion_moves(Tally& t) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const testutil::SamplePoint& pt = sampled_points()[seed];
    try {
      const FlowSystem flow = build_flow_prebases(pt.theta, pt.ranks);
      const Int L = pt.shape.L();

      // every available rank-1 move, at every legal layer slot
      for (const AbstractMove& m : enumerate_abstract_moves(pt.ranks)) {
        const RankList predicted = apply_abstract_move(pt.ranks, m);
        for (Int j = std::max(m.i, m.h + 1); j <= std::min(m.l, m.k + 1); ++j) {
          const MoveSiteIndex site{m.l, m.k, j, m.i, m.h};
          const Eigen::MatrixXd direction = move_direction(flow, site);
          const OneMatrixMoveResult res = one_matrix_move(flow, site, direction, 1e-3);
          t.expect_f(res.ranks_before == pt.ranks, [&] {
            return "one_matrix_move measured foreign start ranks at " +
                   point_str(pt, seed);
          });
          t.expect_f(res.ranks_after == predicted, [&] {
            std::ostringstream os;
            os << "one_matrix_move (" << m.l << "," << m.k << "," << m.i << "," << m.h
               << ") slot " << j << " landed on " << io::vertex_label(res.ranks_after)
               << ", predicted " << io::vertex_label(predicted) << " at "
               << point_str(pt, seed);
            return os.str();
          });
          bool untouched = true;
          for (Int layer = 1; layer <= L; ++layer)
            if (layer != j)
              untouched = untouched &&
                          (res.theta_prime.Wmat(layer) - pt.theta.Wmat(layer)).norm() == 0.0;
          t.expect(untouched, "one_matrix_move edited layers other than the slot");
        }
      }

      // two-matrix path points: exact fiber motion
      const Eigen::MatrixXd W = mu(pt.theta);
      std::mt19937_64 hrng(seed * 1000003ull + 7);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (Int j = 1; j <= L - 1; ++j) {
        Eigen::MatrixXd H(pt.shape.width(j), pt.shape.width(j));
        for (Int c = 0; c < H.cols(); ++c)
          for (Int r = 0; r < H.rows(); ++r) H(r, c) = gauss(hrng);
        H /= 1.0 + H.norm();
        const WeightVector th2 = two_matrix_path_point(pt.theta, j, H, 1e-3);
        t.expect_f((mu(th2) - W).norm() <= 1e-8 * W.norm(), [&] {
          std::ostringstream os;
          os << "two_matrix_path_point moved the product by rel "
             << (mu(th2) - W).norm() / W.norm() << " at " << point_str(pt, seed);
          return os.str();
        });
        t.expect_f(ranklist_of(th2) == pt.ranks, [&] {
          return "two_matrix_path_point changed the rank list at " + point_str(pt, seed);
        });
      }

      // finite-difference check of the materialized two-matrix directions
      for (const WeightSubspace& fam : build_weight_prebases(flow)) {
        if (fam.idx.kind != FamilyKind::two_matrix) continue;
        const Eigen::MatrixXd& U = flow.Jgen(fam.idx.l, fam.idx.j, fam.idx.i);
        const Eigen::MatrixXd& V = flow.Kgen(fam.idx.k, fam.idx.j, fam.idx.h);
        const Eigen::MatrixXd H = U.col(0) * V.col(0).transpose();
        const Eigen::VectorXd direction = materialize_family(flow, fam.idx).col(0);
        const double eps = 1e-3;
        const Eigen::VectorXd fd =
            (flatten(two_matrix_path_point(pt.theta, fam.idx.j, H, eps)) -
             flatten(two_matrix_path_point(pt.theta, fam.idx.j, H, -eps))) /
            (2.0 * eps);
        t.expect_f((fd - direction).norm() <= 1e-5 * direction.norm(), [&] {
          std::ostringstream os;
          os << "finite difference of " << to_string(fam.idx) << " off by rel "
             << (fd - direction).norm() / direction.norm() << " at " << point_str(pt, seed);
          return os.str();
        });
      }
    } catch (const std::exception& e) {
      t.expect_f(false, [&] {
        return "move suite threw at " + point_str(pt, seed) + ": " + e.what();
      });
    }
  }
}

// ---- criterion 8: stratum sampling accuracy -----------------------------------

void criterion_sampling(Tally& t) {
  std::mt19937_64 rng(4242);
  for (int n = 0; n < 50; ++n) {
    const NetworkShape shape = testutil::random_shape(rng, 4, 5);
    const RankList r = testutil::random_valid_ranklist(shape, rng);
    const Eigen::MatrixXd W = random_matrix_with_rank(
        shape.width(shape.L()), shape.width(0), r.fiber_rank(), 31000 + n);
    try {
      const WeightVector th = sample_on_stratum(W, r, 62000 + n);
      t.expect_f((mu(th) - W).norm() <= 1e-8 * W.norm(), [&] {
        std::ostringstream os;
        os << "sample " << n << ": product off by " << (mu(th) - W).norm()
           << " (|W| = " << W.norm() << ") at " << shape_str(shape);
        return os.str();
      });
      t.expect_f(ranklist_of(th) == r, [&] {
        return "sample " + std::to_string(n) + ": rank list not realized at " +
               shape_str(shape) + " " + io::vertex_label(r);
      });
    } catch (const std::exception& e) {
      t.expect_f(false, [&] {
        return "sampling threw at " + shape_str(shape) + ": " + e.what();
      });
    }
  }
}

struct Criterion {
  const char* title;
  void (*run)(Tally&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"dag reproduction (pentagon, chains, vee, hyperboloid)", criterion_dags},
      {"combinatorial equivalence, all shapes L<=3 d<=3", criterion_combinatorics},
      {"rank list <-> multiset round trip, 1e5 draws", criterion_roundtrip},
      {"canonical realization at every enumerated vertex", criterion_canonical},
      {"differential rank and nullity at 100 sampled points", criterion_nullity},
      {"tangent/normal geometry at the sampled points", criterion_geometry},
      {"move semantics from the sampled points", criterion_moves},
      {"stratum sampling accuracy, 50 (W, rank list) pairs", criterion_sampling},
  };

  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Tally tally;
    const auto t0 = Clock::now();
    try {
      c.run(tally);
    } catch (const std::exception& e) {
      tally.note(std::string("criterion aborted: ") + e.what());
    }
    const double dt = seconds_since(t0);
    const bool ok = tally.failures == 0;
    if (!ok) ++failed;
    std::printf("[%d/8] %s  %-52s (%8.2f s, %ld checks)\n", index, ok ? "PASS" : "FAIL",
                c.title, dt, tally.checks);
    for (const std::string& n : tally.notes) std::printf("        - %s\n", n.c_str());
    if (tally.failures > static_cast<long>(tally.notes.size()))
      std::printf("        - ... and %ld more failures\n",
                  tally.failures - static_cast<long>(tally.notes.size()));
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
