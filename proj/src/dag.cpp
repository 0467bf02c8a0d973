#include "fiberstrat/dag.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <utility>

namespace fiberstrat {

namespace {

DagVertex make_vertex(const RankList& r) {
  const DimensionLedger led = dimension_ledger(r);
  return DagVertex{r, led.dim(), led.dof(), led.rdof()};
}

bool edge_less(const DagEdge& a, const DagEdge& b) {
  if (a.origin != b.origin) return a.origin < b.origin;
  if (move_less(a.label, b.label)) return true;
  if (move_less(b.label, a.label)) return false;
  return a.dest < b.dest;
}

// Sort vertices lexicographically by rank vector, remap ids, sort edges:
// afterwards ids no longer depend on the discovery order.
void canonicalize(StratumDag& dag) {
  const Int n = static_cast<Int>(dag.vertices.size());
  std::vector<Int> order(static_cast<size_t>(n));
  for (Int v = 0; v < n; ++v) order[static_cast<size_t>(v)] = v;
  std::sort(order.begin(), order.end(), [&](Int a, Int b) {
    return dag.vertices[static_cast<size_t>(a)].ranklist.r <
           dag.vertices[static_cast<size_t>(b)].ranklist.r;
  });

  std::vector<Int> newid(static_cast<size_t>(n));
  std::vector<DagVertex> sorted;
  sorted.reserve(static_cast<size_t>(n));
  for (Int pos = 0; pos < n; ++pos) {
    newid[static_cast<size_t>(order[static_cast<size_t>(pos)])] = pos;
    sorted.push_back(std::move(dag.vertices[static_cast<size_t>(order[static_cast<size_t>(pos)])]));
  }
  dag.vertices = std::move(sorted);

  for (DagEdge& e : dag.edges) {
    e.origin = newid[static_cast<size_t>(e.origin)];
    e.dest = newid[static_cast<size_t>(e.dest)];
  }
  std::sort(dag.edges.begin(), dag.edges.end(), edge_less);

  dag.index.clear();
  for (Int v = 0; v < n; ++v)
    dag.index.emplace(dag.vertices[static_cast<size_t>(v)].ranklist.key(), v);
}

void check_target_rank(const NetworkShape& shape, Int R) {
  if (R < 0) throw std::invalid_argument("W rank must be nonnegative");
  if (R > shape.min_width())
    throw std::invalid_argument("empty fiber: rk W exceeds min layer size");
}

// Column-major sweep over the off-diagonal cells with (L,0) pinned to
// W_rank.  At each cell the loop bounds are exactly the multiplicity
// constraints decidable there, so every partial assignment extends to at
// least one valid list and no backtracking is needed.  Cells are never
// reset between siblings: each path reassigns everything downstream
// before reading it.
struct VertexEnumerator {
  StratumDag& dag;
  RankList work;
  Int L;

  void emit() { dag.vertices.push_back(make_vertex(work)); }

  void recurse(Int k, Int i) {
    Int low, high;
    if (i == 0) {
      low = dag.W_rank;
      high = std::min(work.at(k - 1, 0), dag.shape.width(k));
    } else {
      low = work.at(k, i - 1);
      high = std::min(work.at(k - 1, i) + work.at(k, i - 1) - work.at(k - 1, i - 1),
                      dag.shape.width(k));
    }
    for (Int v = low; v <= high; ++v) {
      work.set(k, i, v);
      if (k < L && (k < L - 1 || i > 0)) {
        recurse(k + 1, i);  // next cell down this column ((L,0) is pinned)
      } else if (i < L - 1) {
        recurse(i + 2, i + 1);  // top of the next column
      } else {
        emit();
      }
    }
  }
};

}  // namespace

bool StratumDag::has_vertex(const RankList& r) const {
  return index.find(r.key()) != index.end();
}

Int StratumDag::vertex_id(const RankList& r) const {
  auto it = index.find(r.key());
  if (it == index.end())
    throw std::invalid_argument("rank list is not a vertex of this dag");
  return it->second;
}

StratumDag enumerate_vertices(NetworkShape shape, Int R) {
  shape = make_shape(shape.d);
  check_target_rank(shape, R);

  StratumDag dag;
  dag.shape = shape;
  dag.W_rank = R;
  const Int L = shape.L();

  VertexEnumerator en{dag, minimal_ranklist(shape, R), L};
  if (L == 1) {
    en.emit();  // the fiber of a single layer is one stratum
  } else {
    en.recurse(1, 0);
  }
  canonicalize(dag);
  return dag;
}

void enumerate_edges(StratumDag& dag) {
  dag.edges.clear();
  const Int L = dag.shape.L();
  const Int n = static_cast<Int>(dag.vertices.size());
  for (Int u = 0; u < n; ++u) {
    const RankList& from = dag.vertices[static_cast<size_t>(u)].ranklist;
    for (const AbstractMove& m : enumerate_abstract_moves(from)) {
      if (!stays_on_fiber(m, L)) continue;
      const RankList target = apply_abstract_move(from, m);
      auto it = dag.index.find(target.key());
      if (it == dag.index.end())
        throw std::logic_error("move target is not a vertex (enumeration incomplete)");
      dag.edges.push_back(DagEdge{u, it->second, m});
    }
  }
  std::sort(dag.edges.begin(), dag.edges.end(), edge_less);
}

StratumDag build_dag(NetworkShape shape, Int R) {
  StratumDag dag = enumerate_vertices(std::move(shape), R);
  enumerate_edges(dag);
  return dag;
}

StratumDag build_dag_bfs(NetworkShape shape, Int R) {
  shape = make_shape(shape.d);
  check_target_rank(shape, R);

  StratumDag dag;
  dag.shape = shape;
  dag.W_rank = R;
  const Int L = shape.L();

  std::deque<Int> queue;
  auto discover = [&](const RankList& r) -> Int {
    auto [it, fresh] = dag.index.emplace(r.key(), static_cast<Int>(dag.vertices.size()));
    if (fresh) {
      dag.vertices.push_back(make_vertex(r));
      queue.push_back(it->second);
    }
    return it->second;
  };

  discover(minimal_ranklist(shape, R));
  while (!queue.empty()) {
    const Int u = queue.front();
    queue.pop_front();
    // copy: discover() may grow dag.vertices and invalidate references
    const RankList from = dag.vertices[static_cast<size_t>(u)].ranklist;
    for (const AbstractMove& m : enumerate_abstract_moves(from)) {
      if (!stays_on_fiber(m, L)) continue;
      dag.edges.push_back(DagEdge{u, discover(apply_abstract_move(from, m)), m});
    }
  }
  canonicalize(dag);
  return dag;
}

bool reachable(const StratumDag& dag, const RankList& r, const RankList& s) {
  const Int from = dag.vertex_id(r);
  const Int to = dag.vertex_id(s);
  if (from == to) return true;

  std::vector<std::vector<Int>> adj(dag.vertices.size());
  for (const DagEdge& e : dag.edges)
    adj[static_cast<size_t>(e.origin)].push_back(e.dest);

  std::vector<char> seen(dag.vertices.size(), 0);
  std::deque<Int> queue{from};
  seen[static_cast<size_t>(from)] = 1;
  while (!queue.empty()) {
    const Int u = queue.front();
    queue.pop_front();
    for (Int v : adj[static_cast<size_t>(u)]) {
      if (v == to) return true;
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return false;
}

}  // namespace fiberstrat
