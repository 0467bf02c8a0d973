#include "fiberstrat/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fiberstrat::io {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

ordered_json parse(const std::string& text, const char* what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string(what) + ": " + e.what());
  }
}

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const char* what) {
  if (!obj.is_object()) fail(std::string(what) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) fail(std::string(what) + ": unknown key \"" + item.key() + "\"");
  }
}

const ordered_json& need(const ordered_json& obj, const char* key, const char* what) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string(what) + ": missing key \"" + key + "\"");
  return *it;
}

Int get_int(const ordered_json& j, const char* what) {
  if (!j.is_number_integer()) fail(std::string(what) + ": expected an integer");
  return j.get<Int>();
}

double get_num(const ordered_json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + ": expected a number");
  return j.get<double>();
}

std::vector<Int> get_int_vector(const ordered_json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + ": expected an array of integers");
  std::vector<Int> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(get_int(e, what));
  return out;
}

// off-diagonal cells with nonzero rank, (k ascending, i ascending)
ordered_json ranks_to_triples(const RankList& r) {
  ordered_json arr = ordered_json::array();
  for (Int k = 1; k <= r.shape.L(); ++k)
    for (Int i = 0; i < k; ++i)
      if (r.at(k, i) != 0)
        arr.push_back(ordered_json{{"k", k}, {"i", i}, {"r", r.at(k, i)}});
  return arr;
}

RankList triples_to_ranks(const NetworkShape& shape, const ordered_json& arr,
                          const char* what) {
  if (!arr.is_array()) fail(std::string(what) + ": \"ranks\" must be an array");
  RankList out = zero_ranklist(shape);
  for (Int j = 0; j <= shape.L(); ++j) out.set(j, j, shape.width(j));
  std::set<std::pair<Int, Int>> seen;
  for (const auto& e : arr) {
    check_keys(e, {"k", "i", "r"}, what);
    const Int k = get_int(need(e, "k", what), what);
    const Int i = get_int(need(e, "i", what), what);
    const Int v = get_int(need(e, "r", what), what);
    if (k < 0 || k > shape.L() || i < 0 || i > shape.L())
      fail(std::string(what) + ": rank entry (k,i) out of range");
    if (k == i)
      fail(std::string(what) + ": diagonal entries are implied by d and must be omitted");
    if (k < i) fail(std::string(what) + ": rank entry requires k > i");
    if (v < 0) fail(std::string(what) + ": ranks must be nonnegative");
    if (!seen.insert({k, i}).second)
      fail(std::string(what) + ": duplicate rank entry");
    out.set(k, i, v);
  }
  return out;
}

std::string shape_banner(const NetworkShape& shape, Int R) {
  std::ostringstream os;
  os << "d=(";
  for (size_t j = 0; j < shape.d.size(); ++j) {
    if (j) os << ",";
    os << shape.d[j];
  }
  os << ")  rk W=" << R;
  return os.str();
}

bool edge_order_less(const DagEdge& a, const DagEdge& b) {
  if (a.origin != b.origin) return a.origin < b.origin;
  if (move_less(a.label, b.label)) return true;
  if (move_less(b.label, a.label)) return false;
  return a.dest < b.dest;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string ranklist_to_json(const RankList& r) {
  ordered_json j;
  j["L"] = r.shape.L();
  j["d"] = r.shape.d;
  j["ranks"] = ranks_to_triples(r);
  return dump(j);
}

RankList ranklist_from_json(const std::string& text) {
  static constexpr const char* what = "rank-list JSON";
  const ordered_json j = parse(text, what);
  check_keys(j, {"L", "d", "ranks"}, what);
  const NetworkShape shape = make_shape(get_int_vector(need(j, "d", what), what));
  if (get_int(need(j, "L", what), what) != shape.L())
    fail(std::string(what) + ": L does not match d");
  return triples_to_ranks(shape, need(j, "ranks", what), what);
}

std::string weights_to_json(const WeightVector& th) {
  ordered_json j;
  j["d"] = th.shape.d;
  ordered_json mats = ordered_json::array();
  for (Int jj = 1; jj <= th.shape.L(); ++jj) {
    const Eigen::MatrixXd& M = th.Wmat(jj);
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
      rows.push_back(std::move(row));
    }
    mats.push_back(std::move(rows));
  }
  j["W"] = std::move(mats);
  return dump(j);
}

WeightVector weights_from_json(const std::string& text) {
  static constexpr const char* what = "weights JSON";
  const ordered_json j = parse(text, what);
  check_keys(j, {"d", "W"}, what);
  const NetworkShape shape = make_shape(get_int_vector(need(j, "d", what), what));
  const ordered_json& mats = need(j, "W", what);
  if (!mats.is_array() || static_cast<Int>(mats.size()) != shape.L())
    fail(std::string(what) + ": \"W\" must list exactly L matrices");

  WeightVector th = zero_weights(shape);
  for (Int jj = 1; jj <= shape.L(); ++jj) {
    const ordered_json& m = mats[static_cast<size_t>(jj - 1)];
    const Int rows = shape.width(jj), cols = shape.width(jj - 1);
    if (!m.is_array() || static_cast<Int>(m.size()) != rows)
      fail(std::string(what) + ": W_" + std::to_string(jj) + " must have " +
           std::to_string(rows) + " rows");
    for (Int r = 0; r < rows; ++r) {
      const ordered_json& row = m[static_cast<size_t>(r)];
      if (!row.is_array() || static_cast<Int>(row.size()) != cols)
        fail(std::string(what) + ": W_" + std::to_string(jj) + " must have " +
             std::to_string(cols) + " columns");
      for (Int c = 0; c < cols; ++c)
        th.Wmat(jj)(r, c) = get_num(row[static_cast<size_t>(c)], what);
    }
  }
  validate_weights(th);
  return th;
}

std::string moves_to_json(const std::vector<std::pair<RankList, AbstractMove>>& chain) {
  ordered_json arr = ordered_json::array();
  for (const auto& [result, m] : chain) {
    ordered_json e;
    e["l"] = m.l;
    e["k"] = m.k;
    e["i"] = m.i;
    e["h"] = m.h;
    e["c"] = m.c;
    e["kind"] = kind_name(m);
    e["result_ranks"] = ranks_to_triples(result);
    arr.push_back(std::move(e));
  }
  return dump(arr);
}

std::string dag_to_json(const StratumDag& dag) {
  ordered_json j;
  j["shape"] = dag.shape.d;
  j["W_rank"] = dag.W_rank;
  ordered_json verts = ordered_json::array();
  for (size_t v = 0; v < dag.vertices.size(); ++v) {
    const DagVertex& vx = dag.vertices[v];
    ordered_json e;
    e["id"] = static_cast<Int>(v);
    e["ranks"] = ranks_to_triples(vx.ranklist);
    e["dim"] = vx.dim;
    e["dof"] = vx.dof;
    e["rdof"] = vx.rdof;
    verts.push_back(std::move(e));
  }
  j["vertices"] = std::move(verts);
  ordered_json edges = ordered_json::array();
  for (const DagEdge& e : dag.edges) {
    ordered_json je;
    je["from"] = e.origin;
    je["to"] = e.dest;
    je["label"] = ordered_json{e.label.l, e.label.k, e.label.i, e.label.h};
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  return dump(j);
}

StratumDag dag_from_json(const std::string& text) {
  static constexpr const char* what = "dag JSON";
  const ordered_json j = parse(text, what);
  check_keys(j, {"shape", "W_rank", "vertices", "edges"}, what);

  StratumDag dag;
  dag.shape = make_shape(get_int_vector(need(j, "shape", what), what));
  dag.W_rank = get_int(need(j, "W_rank", what), what);
  if (dag.W_rank < 0 || dag.W_rank > dag.shape.min_width())
    fail(std::string(what) + ": W_rank out of range for this shape");
  const Int L = dag.shape.L();

  const ordered_json& verts = need(j, "vertices", what);
  if (!verts.is_array()) fail(std::string(what) + ": \"vertices\" must be an array");
  for (size_t pos = 0; pos < verts.size(); ++pos) {
    const ordered_json& v = verts[pos];
    check_keys(v, {"id", "ranks", "dim", "dof", "rdof"}, what);
    if (get_int(need(v, "id", what), what) != static_cast<Int>(pos))
      fail(std::string(what) + ": vertex ids must be 0..n-1 in order");
    DagVertex vx;
    vx.ranklist = triples_to_ranks(dag.shape, need(v, "ranks", what), what);
    if (vx.ranklist.fiber_rank() != dag.W_rank)
      fail(std::string(what) + ": vertex rank list does not have rank W_rank");
    const Validation val = validate(vx.ranklist);
    if (!val.ok) fail(std::string(what) + ": invalid vertex rank list (" + val.reason + ")");
    const DimensionLedger led = dimension_ledger(vx.ranklist);
    vx.dim = get_int(need(v, "dim", what), what);
    vx.dof = get_int(need(v, "dof", what), what);
    vx.rdof = get_int(need(v, "rdof", what), what);
    if (vx.dim != led.dim() || vx.dof != led.dof() || vx.rdof != led.rdof())
      fail(std::string(what) + ": dim/dof/rdof annotations do not match the rank list");
    if (!dag.vertices.empty() && !(dag.vertices.back().ranklist.r < vx.ranklist.r))
      fail(std::string(what) + ": vertices must be sorted by rank list");
    dag.index.emplace(vx.ranklist.key(), static_cast<Int>(pos));
    dag.vertices.push_back(std::move(vx));
  }

  const ordered_json& edges = need(j, "edges", what);
  if (!edges.is_array()) fail(std::string(what) + ": \"edges\" must be an array");
  const Int n = static_cast<Int>(dag.vertices.size());
  for (const auto& je : edges) {
    check_keys(je, {"from", "to", "label"}, what);
    DagEdge e;
    e.origin = get_int(need(je, "from", what), what);
    e.dest = get_int(need(je, "to", what), what);
    if (e.origin < 0 || e.origin >= n || e.dest < 0 || e.dest >= n)
      fail(std::string(what) + ": edge endpoint out of range");
    const std::vector<Int> lbl = get_int_vector(need(je, "label", what), what);
    if (lbl.size() != 4) fail(std::string(what) + ": edge label must be [l,k,i,h]");
    e.label = AbstractMove{lbl[0], lbl[1], lbl[2], lbl[3], 1};
    validate_abstract_move(L, e.label);
    if (!stays_on_fiber(e.label, L))
      fail(std::string(what) + ": edge label leaves the fiber");
    const RankList target =
        apply_abstract_move(dag.vertices[static_cast<size_t>(e.origin)].ranklist, e.label);
    if (!(target == dag.vertices[static_cast<size_t>(e.dest)].ranklist))
      fail(std::string(what) + ": edge label does not map origin to destination");
    if (!dag.edges.empty() && !edge_order_less(dag.edges.back(), e))
      fail(std::string(what) + ": edges must be sorted by (from, label)");
    dag.edges.push_back(e);
  }
  return dag;
}

std::string vertex_label(const RankList& r) {
  std::ostringstream os;
  os << "S";
  bool first = true;
  for (Int gap = 1; gap <= r.shape.L(); ++gap)
    for (Int k = r.shape.L(); k >= gap; --k) {
      if (!first) os << ",";
      os << r.at(k, k - gap);
      first = false;
    }
  return os.str();
}

std::string dag_to_dot(const StratumDag& dag) {
  std::ostringstream os;
  os << "digraph fiberstrat {\n";
  os << "  rankdir=BT;\n";
  os << "  labelloc=t;\n";
  os << "  label=\"" << shape_banner(dag.shape, dag.W_rank) << "\";\n";
  os << "  node [shape=box];\n";
  for (size_t v = 0; v < dag.vertices.size(); ++v) {
    const DagVertex& vx = dag.vertices[v];
    os << "  v" << v << " [label=\"" << vertex_label(vx.ranklist) << "\\n"
       << vx.dim << "/" << vx.dof << "/" << vx.rdof << "\"];\n";
  }
  for (const DagEdge& e : dag.edges)
    os << "  v" << e.origin << " -> v" << e.dest << " [label=\"(" << e.label.l << ","
       << e.label.k << "," << e.label.i << "," << e.label.h << ")\"];\n";
  os << "}\n";
  return os.str();
}

std::string dag_to_table(const StratumDag& dag) {
  std::ostringstream os;
  os << "stratum dag  " << shape_banner(dag.shape, dag.W_rank) << "\n";
  os << "vertices: " << dag.vertices.size() << "   edges: " << dag.edges.size() << "\n\n";
  os << "vertex  dim/dof/rdof\n";

  const Int L = dag.shape.L();
  if (L == 2) {
    // group rows by the last-layer rank, top rank first, like the dag figures
    std::vector<Int> groups;
    for (const DagVertex& vx : dag.vertices)
      if (groups.empty() || groups.back() != vx.ranklist.at(2, 1))
        groups.push_back(vx.ranklist.at(2, 1));
    std::sort(groups.begin(), groups.end(), std::greater<Int>());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    for (Int g : groups) {
      os << "r(2~1)=" << g << ":";
      for (const DagVertex& vx : dag.vertices)
        if (vx.ranklist.at(2, 1) == g)
          os << "  " << vertex_label(vx.ranklist) << " [" << vx.dim << "/" << vx.dof
             << "/" << vx.rdof << "]";
      os << "\n";
    }
  } else {
    for (size_t v = 0; v < dag.vertices.size(); ++v) {
      const DagVertex& vx = dag.vertices[v];
      os << vertex_label(vx.ranklist) << "  " << vx.dim << "/" << vx.dof << "/"
         << vx.rdof << "\n";
    }
  }

  os << "\nedges ((l,k,i,h) labels):\n";
  for (const DagEdge& e : dag.edges)
    os << vertex_label(dag.vertices[static_cast<size_t>(e.origin)].ranklist) << " -> "
       << vertex_label(dag.vertices[static_cast<size_t>(e.dest)].ranklist) << "  ("
       << e.label.l << "," << e.label.k << "," << e.label.i << "," << e.label.h << ") "
       << kind_name(e.label) << "\n";
  return os.str();
}

std::string basis_to_json(const Eigen::MatrixXd& basis) {
  ordered_json j;
  j["ambient"] = static_cast<Int>(basis.rows());
  ordered_json vecs = ordered_json::array();
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    ordered_json v = ordered_json::array();
    for (Eigen::Index r = 0; r < basis.rows(); ++r) v.push_back(basis(r, c));
    vecs.push_back(std::move(v));
  }
  j["vectors"] = std::move(vecs);
  return dump(j);
}

Eigen::MatrixXd csv_to_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        fail("CSV matrix: cannot parse \"" + cell + "\" as a number");
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      if (used != cell.size())
        fail("CSV matrix: cannot parse \"" + cell + "\" as a number");
      if (!std::isfinite(v)) fail("CSV matrix: entries must be finite");
      row.push_back(v);
    }
    if (row.empty()) fail("CSV matrix: empty row");
    if (!rows.empty() && row.size() != rows.front().size())
      fail("CSV matrix: rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("CSV matrix: no data");

  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

}  // namespace fiberstrat::io
