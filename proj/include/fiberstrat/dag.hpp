#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fiberstrat/moves.hpp"
#include "fiberstrat/ranklist.hpp"

namespace fiberstrat {

struct DagVertex {
  RankList ranklist;
  Int dim = 0;   // stratum dimension
  Int dof = 0;   // fiber dimension through this stratum; dof = dim + rdof
  Int rdof = 0;  // reduced degrees of freedom

  bool operator==(const DagVertex&) const = default;
};

struct DagEdge {
  Int origin = 0, dest = 0;
  // a rank-1 fiber-preserving move available at origin whose application
  // yields dest; several labels may connect the same vertex pair
  AbstractMove label;

  bool operator==(const DagEdge&) const = default;
};

// All valid rank lists on a shape with r(L,0) = W_rank, plus one labeled
// edge per available rank-1 move.  Not a Hasse diagram: redundant edges
// (those implied by longer paths) are kept.  Vertex ids are canonical —
// vertices sorted lexicographically by rank vector, edges by (origin,
// label) — so dags built through different discovery orders compare equal.
struct StratumDag {
  NetworkShape shape;
  Int W_rank = 0;
  std::vector<DagVertex> vertices;
  std::vector<DagEdge> edges;
  std::unordered_map<std::string, Int> index;  // RankList::key() -> vertex id

  bool has_vertex(const RankList& r) const;
  Int vertex_id(const RankList& r) const;  // invalid_argument when unknown

  bool operator==(const StratumDag& o) const {
    return shape == o.shape && W_rank == o.W_rank && vertices == o.vertices &&
           edges == o.edges;
  }
};

// Vertices only (edges left empty), annotated with dim/dof/rdof.  Throws
// invalid_argument for R < 0 and, when R exceeds the narrowest layer,
// "empty fiber: rk W exceeds min layer size".
StratumDag enumerate_vertices(NetworkShape shape, Int R);

// Fills in the edges of a vertex-complete dag.  Every move target must
// already be a vertex; a miss means the enumeration missed a valid list
// and raises logic_error.
void enumerate_edges(StratumDag& dag);

StratumDag build_dag(NetworkShape shape, Int R);

// The same dag discovered by breadth-first search upward from
// minimal_ranklist(shape, R); compares equal to build_dag's output.
StratumDag build_dag_bfs(NetworkShape shape, Int R);

// True iff a directed path leads from r's vertex to s's (r == s counts).
// Agrees with leq(r, s) on vertex pairs.  Throws invalid_argument when
// either list is not a vertex of this dag.
bool reachable(const StratumDag& dag, const RankList& r, const RankList& s);

}  // namespace fiberstrat
