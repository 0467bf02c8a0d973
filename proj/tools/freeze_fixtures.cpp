// Recomputes the hand-frozen oracle tables that the unit tests embed as
// literals and prints them in a stable text form.  When a library change is
// suspected of shifting one of those values, run this and diff the output
// against the literals instead of re-deriving them by hand.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fiberstrat/dag.hpp"
#include "fiberstrat/flow.hpp"
#include "fiberstrat/io.hpp"
#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"
#include "fiberstrat/tangent.hpp"

using namespace fiberstrat;

namespace {

RankList pentagon_vertex(Int r21, Int r10) {
  RankList r = minimal_ranklist(make_shape({4, 6, 5}), 1);
  r.set(2, 1, r21);
  r.set(1, 0, r10);
  return r;
}

void print_move(const AbstractMove& m) {
  std::printf("(l=%lld,k=%lld,i=%lld,h=%lld)x%lld", static_cast<long long>(m.l),
              static_cast<long long>(m.k), static_cast<long long>(m.i),
              static_cast<long long>(m.h), static_cast<long long>(m.c));
}

void print_dag(const char* title, const StratumDag& dag) {
  std::printf("== %s: %zu vertices, %zu edges ==\n", title, dag.vertices.size(),
              dag.edges.size());
  for (const DagVertex& v : dag.vertices)
    std::printf("  %-16s dim=%-3lld dof=%-3lld rdof=%lld\n",
                io::vertex_label(v.ranklist).c_str(), static_cast<long long>(v.dim),
                static_cast<long long>(v.dof), static_cast<long long>(v.rdof));
  for (const DagEdge& e : dag.edges) {
    std::printf("  %s -> %s  via ",
                io::vertex_label(dag.vertices[static_cast<size_t>(e.origin)].ranklist).c_str(),
                io::vertex_label(dag.vertices[static_cast<size_t>(e.dest)].ranklist).c_str());
    print_move(e.label);
    std::printf("\n");
  }
}

void pentagon_tables() {
  const StratumDag dag = build_dag(make_shape({4, 6, 5}), 1);
  std::printf("== depth-2 widths (4,6,5), product rank 1: %zu vertices, %zu edges ==\n",
              dag.vertices.size(), dag.edges.size());
  std::map<Int, int> per_row;
  for (const DagVertex& v : dag.vertices) ++per_row[v.ranklist.at(2, 1)];
  std::printf("  vertices per r(2,1) value:");
  for (auto it = per_row.rbegin(); it != per_row.rend(); ++it)
    std::printf("  %lld->%d", static_cast<long long>(it->first), it->second);
  std::printf("\n  ledger rows, grouped by r(2,1) descending:\n");
  std::printf("  %-4s %-4s %-5s %-5s %-5s\n", "x", "y", "dim", "dof", "rdof");
  for (Int x = 5; x >= 1; --x)
    for (Int y = 1; y <= 6; ++y)
      if (dag.has_vertex(pentagon_vertex(x, y))) {
        const DimensionLedger led = dimension_ledger(pentagon_vertex(x, y));
        std::printf("  %-4lld %-4lld %-5lld %-5lld %-5lld\n", static_cast<long long>(x),
                    static_cast<long long>(y), static_cast<long long>(led.dim()),
                    static_cast<long long>(led.dof()), static_cast<long long>(led.rdof()));
      }
}

void chain_tables() {
  print_dag("scalar chain (1,1,1,1), product rank 0", build_dag(make_shape({1, 1, 1, 1}), 0));
  print_dag("scalar chain (1,1,1,1), product rank 1", build_dag(make_shape({1, 1, 1, 1}), 1));
  print_dag("widths (2,1,1), product rank 0", build_dag(make_shape({2, 1, 1}), 0));
}

void family_catalogs() {
  // sampled point of S_32 where every interval multiplicity is positive
  const RankList r = pentagon_vertex(3, 2);
  const WeightVector th = sample_on_stratum(random_matrix_with_rank(5, 4, 1, 47), r, 11);
  const FlowSystem flow = build_flow_prebases(th);
  const std::vector<WeightSubspace> weight = build_weight_prebases(flow);
  const std::vector<WeightSubspace> normal = build_normal_prebases(flow);

  std::printf("== family catalogs at a generic point of S3,2,1 ==\n");
  Int phi_count = 0, tau_count = 0, phi_total = 0;
  std::set<std::string> conn, swaps, taus, taucomb;
  for (const WeightSubspace& f : weight) {
    if (f.idx.kind == FamilyKind::one_matrix) {
      ++phi_count;
      phi_total += f.dim;
      if (f.tags.conn) conn.insert(to_string(f.idx));
      if (f.tags.swap) swaps.insert(to_string(f.idx));
    } else if (f.idx.kind == FamilyKind::two_matrix) {
      ++tau_count;
      taus.insert(to_string(f.idx));
      if (f.tags.comb) taucomb.insert(to_string(f.idx));
    }
  }
  std::printf("  one-matrix families: %lld (total dim %lld)\n",
              static_cast<long long>(phi_count), static_cast<long long>(phi_total));
  std::printf("  two-matrix families: %lld\n", static_cast<long long>(tau_count));
  const auto print_set = [](const char* name, const std::set<std::string>& s) {
    std::printf("  %s:", name);
    for (const std::string& n : s) std::printf(" %s", n.c_str());
    std::printf("\n");
  };
  print_set("connecting", conn);
  print_set("swapping", swaps);
  print_set("two-matrix", taus);
  print_set("two-matrix combining", taucomb);

  const auto all_names = [](const std::vector<WeightSubspace>& fams) {
    std::set<std::string> out;
    for (const WeightSubspace& f : fams) out.insert(to_string(f.idx));
    return out;
  };
  const std::set<std::string> fre = all_names(select_free(weight));
  const std::set<std::string> str = all_names(select_stratum(weight));
  std::set<std::string> removed;
  std::set_difference(fre.begin(), fre.end(), str.begin(), str.end(),
                      std::inserter(removed, removed.begin()));
  print_set("free minus stratum", removed);

  std::set<std::string> psi_free, psi_all;
  for (const WeightSubspace& f : normal) {
    psi_all.insert(to_string(f.idx));
    if (f.tags.free) psi_free.insert(to_string(f.idx));
  }
  std::set<std::string> extras;
  std::set_difference(psi_all.begin(), psi_all.end(), psi_free.begin(), psi_free.end(),
                      std::inserter(extras, extras.begin()));
  print_set("normal free", psi_free);
  print_set("normal beyond free", extras);
}

void scalar_flow_factors() {
  WeightVector th = zero_weights(make_shape({1, 1, 1}));
  th.Wmat(1)(0, 0) = 3.0;
  th.Wmat(2)(0, 0) = 2.0;
  const FlowSystem flow = build_flow_prebases(th);
  std::printf("== scalar flow factors for W = (3, 2) ==\n");
  for (Int j = 0; j <= 2; ++j)
    std::printf("  Jfull(%lld) = %.12g\n", static_cast<long long>(j), flow.Jfull(j)(0, 0));
  for (Int j = 1; j <= 2; ++j)
    std::printf("  Itilde(%lld) = %.12g\n", static_cast<long long>(j), flow.Itilde(j)(0, 0));
  std::printf("  Kfull(1) = %.12g\n", flow.Kfull(1)(0, 0));
}

}  // namespace

int main() {
  pentagon_tables();
  chain_tables();
  family_catalogs();
  scalar_flow_factors();
  return 0;
}
