#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fiberstrat/dag.hpp"
#include "fiberstrat/moves.hpp"
#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"

// File formats used by the CLI.  All exporters are deterministic (fixed key
// order, canonical element order), so identical inputs give byte-identical
// text; all importers reject unknown keys and malformed entries with
// std::invalid_argument.
namespace fiberstrat::io {

// {"L":2,"d":[4,6,5],"ranks":[{"k":1,"i":0,"r":1},...]} — off-diagonal
// cells only, zeros omitted, diagonal implied by d.  Duplicate, diagonal,
// or out-of-range entries are rejected.
std::string ranklist_to_json(const RankList& r);
RankList ranklist_from_json(const std::string& text);

// {"d":[d0,...,dL],"W":[W1,...,WL]}, each W_j row-major d_j x d_{j-1}
std::string weights_to_json(const WeightVector& th);
WeightVector weights_from_json(const std::string& text);

// move plan as emitted by the planner: [{"l","k","i","h","c","kind",
// "result_ranks"}, ...] where result_ranks is the list reached after the
// move, encoded like the "ranks" field above
std::string moves_to_json(const std::vector<std::pair<RankList, AbstractMove>>& chain);

// {"shape":[...],"W_rank":R,"vertices":[{"id","ranks","dim","dof","rdof"}],
//  "edges":[{"from","to","label":[l,k,i,h]}]} in canonical order; the
// importer re-checks ids, annotations, and edge labels
std::string dag_to_json(const StratumDag& dag);
StratumDag dag_from_json(const std::string& text);

std::string dag_to_dot(const StratumDag& dag);
std::string dag_to_table(const StratumDag& dag);

// node name used in DOT/table exports: "S" + off-diagonal ranks, nearest
// subsequences first (r(L,L-1), ..., r(1,0), then longer intervals)
std::string vertex_label(const RankList& r);

// basis columns as a list of d_θ-vectors: {"ambient":n,"vectors":[[...],...]}
std::string basis_to_json(const Eigen::MatrixXd& basis);

// one row per line, comma-separated; rectangular, at least one entry
Eigen::MatrixXd csv_to_matrix(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace fiberstrat::io
