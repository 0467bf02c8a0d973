#include "fiberstrat/flow.hpp"

#include <algorithm>

#include "fiberstrat/moves.hpp"
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace fiberstrat {

namespace {

std::string cell(Int k, Int i) {
  return "(" + std::to_string(k) + "," + std::to_string(i) + ")";
}

std::string site(Int k, Int j, Int i) {
  return "(" + std::to_string(k) + "," + std::to_string(j) + "," + std::to_string(i) + ")";
}

Eigen::MatrixXd hcat(Int rows, const std::vector<const Eigen::MatrixXd*>& blocks) {
  Int total = 0;
  for (const auto* b : blocks) total += b->cols();
  Eigen::MatrixXd out(rows, total);
  Int off = 0;
  for (const auto* b : blocks) {
    out.middleCols(off, b->cols()) = *b;
    off += b->cols();
  }
  return out;
}

// scale-free residual for the (un-normalized) generator identities
double rel_resid(const Eigen::MatrixXd& err, double op_norm, double gen_norm) {
  return err.norm() / (std::max(1.0, op_norm) * std::max(1.0, gen_norm));
}

}  // namespace

WeightVector canonical_weight_vector(const RankList& r) {
  Validation v = validate(r);
  if (!v.ok) throw std::invalid_argument("canonical_weight_vector: " + v.reason);
  const NetworkShape& shape = r.shape;
  const Int L = shape.L();
  const IntervalMultiset w = omega_of(r);

  // intervals [i,k] alive at layer j, in block order (k decreasing, i increasing)
  auto alive_at = [&](Int j) {
    std::vector<std::pair<Int, Int>> out;
    for (Int k = L; k >= j; --k)
      for (Int i = 0; i <= j; ++i)
        if (w.at(k, i) > 0) out.emplace_back(k, i);
    return out;
  };

  WeightVector th = zero_weights(shape);
  for (Int j = 1; j <= L; ++j) {
    std::map<std::pair<Int, Int>, Int> row_off;
    Int off = 0;
    for (const auto& b : alive_at(j)) {
      row_off[b] = off;
      off += w.at(b.first, b.second);
    }
    // an interval alive at layers j-1 and j carries an identity block
    off = 0;
    for (const auto& [k, i] : alive_at(j - 1)) {
      const Int m = w.at(k, i);
      if (k >= j) th.Wmat(j).block(row_off.at({k, i}), off, m, m).setIdentity();
      off += m;
    }
  }
  return th;
}

// ---------------------------------------------------------------------------
// FlowSystem accessors

const std::vector<std::pair<Int, Int>>& FlowSystem::layer_intervals(Int j) const {
  if (j < 0 || j > L()) throw std::invalid_argument("layer_intervals: layer out of range");
  return intervals[static_cast<std::size_t>(j)];
}

Int FlowSystem::block_offset(Int j, Int k, Int i) const {
  Int off = 0;
  for (const auto& [bk, bi] : layer_intervals(j)) {
    if (bk == k && bi == i) return off;
    off += omega.at(bk, bi);
  }
  throw std::invalid_argument("block_offset: interval " + cell(k, i) + " not alive at layer " +
                              std::to_string(j));
}

const Eigen::MatrixXd& FlowSystem::Jgen(Int k, Int j, Int i) const {
  auto it = jgen_.find(std::make_tuple(k, j, i));
  if (it == jgen_.end())
    throw std::invalid_argument("Jgen" + site(k, j, i) + ": need 0 <= i <= j <= k <= L");
  return it->second;
}

const Eigen::MatrixXd& FlowSystem::Kgen(Int k, Int j, Int i) const {
  auto it = kgen_.find(std::make_tuple(k, j, i));
  if (it == kgen_.end())
    throw std::invalid_argument("Kgen" + site(k, j, i) + ": need 0 <= i <= j <= k <= L");
  return it->second;
}

const Eigen::MatrixXd& FlowSystem::Jfull(Int j) const {
  if (j < 0 || j > L()) throw std::invalid_argument("Jfull: layer out of range");
  return jfull_[static_cast<std::size_t>(j)];
}

const Eigen::MatrixXd& FlowSystem::Kfull(Int j) const {
  if (j < 0 || j > L()) throw std::invalid_argument("Kfull: layer out of range");
  return kfull_[static_cast<std::size_t>(j)];
}

const Eigen::MatrixXd& FlowSystem::Itilde(Int j) const {
  if (j < 1 || j > L()) throw std::invalid_argument("Itilde: need 1 <= j <= L");
  return itilde_[static_cast<std::size_t>(j - 1)];
}

const FundamentalSubspaces& FlowSystem::fs(Int k, Int i) const {
  auto it = fs_cache_.find(std::make_pair(k, i));
  if (it == fs_cache_.end())
    throw std::invalid_argument("fs" + cell(k, i) + ": need 0 <= i <= k <= L");
  return it->second;
}

Subspace FlowSystem::A(Int k, Int j, Int i) const {
  const Int n = theta.shape.width(j);
  if (k > L() || i < -1 || i > j)
    throw std::invalid_argument("A" + site(k, j, i) + ": need k <= L and -1 <= i <= j");
  if (i == -1 || k < j) return Subspace::trivial(n);
  Subspace null_part = (k == L()) ? Subspace::full(n) : fs(k + 1, j).null_space;
  if (i == j) return null_part;  // col W_{j~j} is everything
  return intersect(null_part, fs(j, i).col, tol);
}

Subspace FlowSystem::B(Int k, Int j, Int i) const {
  if (k < j || k > L() || i < 0 || i > j)
    throw std::invalid_argument("B" + site(k, j, i) + ": need j <= k <= L and 0 <= i <= j");
  Subspace row_part = fs(k, j).row;  // full when k == j
  if (i == 0) return row_part;       // null W_{j~-1}^T is everything
  return intersect(row_part, fs(j, i - 1).left_null, tol);
}

Subspace FlowSystem::a_sub(Int k, Int j, Int i) const {
  return Subspace::from_span(Jgen(k, j, i), tol);
}

Subspace FlowSystem::b_sub(Int k, Int j, Int i) const {
  return Subspace::from_span(Kgen(k, j, i), tol);
}

Subspace FlowSystem::A_from_prebasis(Int k, Int j, Int i) const {
  const Int n = theta.shape.width(j);
  if (k > L() || i < -1 || i > j)
    throw std::invalid_argument("A_from_prebasis" + site(k, j, i) + ": index out of range");
  if (i == -1 || k < j) return Subspace::trivial(n);
  std::vector<const Eigen::MatrixXd*> blocks;
  for (Int kk = j; kk <= k; ++kk)
    for (Int ii = 0; ii <= i; ++ii) blocks.push_back(&Jgen(kk, j, ii));
  return Subspace::from_span(hcat(n, blocks), tol);
}

Subspace FlowSystem::B_from_prebasis(Int k, Int j, Int i) const {
  const Int n = theta.shape.width(j);
  if (k < j || k > L() || i < 0 || i > j)
    throw std::invalid_argument("B_from_prebasis" + site(k, j, i) + ": index out of range");
  std::vector<const Eigen::MatrixXd*> blocks;
  for (Int kk = k; kk <= L(); ++kk)
    for (Int ii = i; ii <= j; ++ii) blocks.push_back(&Kgen(kk, j, ii));
  return Subspace::from_span(hcat(n, blocks), tol);
}

// ---------------------------------------------------------------------------
// construction

FlowSystem build_flow_prebases(WeightVector theta, std::optional<RankList> expected_ranks,
                               const Tolerances& tol) {
  validate(tol);
  validate_weights(theta);

  FlowSystem flow;
  flow.theta = std::move(theta);
  flow.tol = tol;
  const NetworkShape& shape = flow.theta.shape;
  const Int L = shape.L();

  // fundamental subspaces of every subsequence product, computed once
  for (Int i = 0; i <= L; ++i)
    for (Int k = i; k <= L; ++k)
      flow.fs_cache_.emplace(std::make_pair(k, i),
                             fundamental_subspaces(mu_sub(flow.theta, k, i), tol));

  flow.ranks = zero_ranklist(shape);
  for (Int i = 0; i <= L; ++i)
    for (Int k = i; k <= L; ++k) flow.ranks.set(k, i, flow.fs(k, i).rank);

  if (expected_ranks) {
    if (!(expected_ranks->shape == shape))
      throw std::invalid_argument("build_flow_prebases: rank list shape differs from weights");
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k <= L; ++k)
        if (flow.ranks.at(k, i) != expected_ranks->at(k, i))
          throw std::runtime_error(
              "build_flow_prebases: numerical rank of W_" + cell(k, i) + " is " +
              std::to_string(flow.ranks.at(k, i)) + " but the rank list says " +
              std::to_string(expected_ranks->at(k, i)));
  }
  if (Validation v = validate(flow.ranks); !v.ok)
    throw std::runtime_error("build_flow_prebases: " + v.reason);

  flow.omega = omega_of(flow.ranks);

  flow.intervals.resize(static_cast<std::size_t>(L + 1));
  for (Int j = 0; j <= L; ++j)
    for (Int k = L; k >= j; --k)
      for (Int i = 0; i <= j; ++i)
        if (flow.omega.at(k, i) > 0) flow.intervals[static_cast<std::size_t>(j)].emplace_back(k, i);

  // seeds a(k,i,i) orthogonal to what older/longer intervals already cover,
  // then pushed forward through the layers without re-orthonormalization so
  // that W_j·Jgen(k,j-1,i) = Jgen(k,j,i) holds exactly
  for (Int i = 0; i <= L; ++i) {
    for (Int k = i; k <= L; ++k) {
      const Int m = flow.omega.at(k, i);
      Eigen::MatrixXd seed(shape.width(i), 0);
      if (m > 0) {
        const Subspace Z = flow.A(k, i, i);
        const Subspace Y = sum(flow.A(k, i, i - 1), flow.A(k - 1, i, i), tol);
        Subspace x;
        try {
          x = standard_complement_within(Z, Y, tol);
        } catch (const std::exception& e) {
          throw std::runtime_error("build_flow_prebases: seed a" + site(k, i, i) + ": " + e.what());
        }
        if (x.dim() != m)
          throw std::runtime_error("build_flow_prebases: seed a" + site(k, i, i) +
                                   " has dimension " + std::to_string(x.dim()) +
                                   " but the multiplicity is " + std::to_string(m));
        seed = x.basis();
      }
      flow.jgen_[std::make_tuple(k, i, i)] = seed;
      for (Int j = i + 1; j <= k; ++j)
        flow.jgen_[std::make_tuple(k, j, i)] =
            flow.theta.Wmat(j) * flow.jgen_.at(std::make_tuple(k, j - 1, i));
    }
  }

  // per-layer bases and their duals
  flow.jfull_.resize(static_cast<std::size_t>(L + 1));
  flow.kfull_.resize(static_cast<std::size_t>(L + 1));
  for (Int j = 0; j <= L; ++j) {
    const Int n = shape.width(j);
    Eigen::MatrixXd Jf(n, n);
    Int off = 0;
    for (const auto& [k, i] : flow.layer_intervals(j)) {
      const auto& blk = flow.jgen_.at(std::make_tuple(k, j, i));
      Jf.middleCols(off, blk.cols()) = blk;
      off += blk.cols();
    }
    if (off != n)
      throw std::logic_error("build_flow_prebases: block widths at layer " + std::to_string(j) +
                             " sum to " + std::to_string(off) + ", not d_j");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Jf);
    if (!lu.isInvertible())
      throw std::runtime_error("build_flow_prebases: flow basis J_" + std::to_string(j) +
                               " is singular (rank list inconsistent with the weights at the "
                               "working tolerance)");
    flow.jfull_[static_cast<std::size_t>(j)] = std::move(Jf);
    flow.kfull_[static_cast<std::size_t>(j)] = lu.inverse().transpose();
  }

  // dual generators are just column blocks of Kfull
  for (const auto& [key, jblk] : flow.jgen_) {
    const auto& [k, j, i] = key;
    if (jblk.cols() == 0) {
      flow.kgen_[key] = Eigen::MatrixXd(shape.width(j), 0);
    } else {
      flow.kgen_[key] =
          flow.kfull_[static_cast<std::size_t>(j)].middleCols(flow.block_offset(j, k, i),
                                                              jblk.cols());
    }
  }

  flow.itilde_.resize(static_cast<std::size_t>(L));
  for (Int j = 1; j <= L; ++j)
    flow.itilde_[static_cast<std::size_t>(j - 1)] =
        flow.Kfull(j).transpose() * (flow.theta.Wmat(j) * flow.Jfull(j - 1));

  return flow;
}

CanonicalFactorization canonical_factorization(const FlowSystem& flow) {
  const Int L = flow.L();
  CanonicalFactorization out;
  out.Jfull.reserve(static_cast<std::size_t>(L + 1));
  for (Int j = 0; j <= L; ++j) out.Jfull.push_back(flow.Jfull(j));

  const WeightVector pattern = canonical_weight_vector(flow.ranks);
  const double thresh = 1e-7 * (1.0 + flatten(flow.theta).norm());

  out.Itilde.reserve(static_cast<std::size_t>(L));
  for (Int j = 1; j <= L; ++j) {
    const Eigen::MatrixXd& It = flow.Itilde(j);
    const Eigen::MatrixXd target = flow.theta.Wmat(j) * flow.Jfull(j - 1);
    const double resid = (flow.Jfull(j) * It - target).norm();
    if (resid > 1e-9 * std::max(1.0, target.norm()))
      throw std::runtime_error("canonical_factorization: J_j*I_j != W_j*J_{j-1} at layer " +
                               std::to_string(j) + " (residual " + std::to_string(resid) + ")");
    const Eigen::MatrixXd& P = pattern.Wmat(j);
    for (Int a = 0; a < It.rows(); ++a)
      for (Int b = 0; b < It.cols(); ++b) {
        const double got = std::abs(It(a, b)) < thresh ? 0.0 : It(a, b);
        if (std::abs(got - P(a, b)) > thresh)
          throw std::runtime_error(
              "canonical_factorization: factor at layer " + std::to_string(j) +
              " deviates from the almost-identity pattern at entry (" + std::to_string(a) + "," +
              std::to_string(b) + "): " + std::to_string(It(a, b)) + " vs " +
              std::to_string(P(a, b)));
      }
    out.Itilde.push_back(It);
  }
  return out;
}

// ---------------------------------------------------------------------------
// structure-theorem verification

TheoremReport verify_fundamental_theorem(const WeightVector& theta, const Tolerances& tol,
                                         std::optional<RankList> expected_ranks) {
  validate(tol);
  validate_weights(theta);
  const Int L = theta.shape.L();

  TheoremReport rep;
  auto push = [&rep](std::string name, bool pass, double resid, std::string detail = "") {
    rep.checks.push_back(CheckResult{std::move(name), pass, resid, std::move(detail)});
  };
  // residual of a subspace-equality claim; pass is decided by subspace_equal
  auto eq_resid = [](const Subspace& x, const Subspace& y) {
    return std::max(containment_residual(x, y), containment_residual(y, x));
  };

  RankList r = expected_ranks ? std::move(*expected_ranks) : ranklist_of(theta, tol);
  if (!(r.shape == theta.shape))
    throw std::invalid_argument("verify_fundamental_theorem: rank list shape mismatch");

  Validation v = validate(r);
  push("rank list valid", v.ok, v.ok ? 0.0 : 1.0, v.reason);

  {
    Int worst = 0;
    std::string where;
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k <= L; ++k) {
        const Int got = numerical_rank(mu_sub(theta, k, i), tol);
        const Int diff = std::abs(got - r.at(k, i));
        if (diff > worst) {
          worst = diff;
          where = "rk W_" + cell(k, i) + " = " + std::to_string(got) + ", rank list says " +
                  std::to_string(r.at(k, i));
        }
      }
    push("subsequence ranks match", worst == 0, static_cast<double>(worst), where);
  }

  if (!rep.checks[0].pass || !rep.checks[1].pass) {
    push("flow construction", false, 1.0, "skipped: rank list disagrees with the weights");
    rep.all_pass = false;
    return rep;
  }

  FlowSystem flow;
  try {
    flow = build_flow_prebases(theta, r, tol);
    push("flow construction", true, 0.0);
  } catch (const std::exception& e) {
    push("flow construction", false, 1.0, e.what());
    rep.all_pass = false;
    return rep;
  }

  const auto alive = [&](Int k, Int i) { return flow.omega.at(k, i) > 0; };

  {  // every generator block has exactly ω(k,i) independent columns
    Int worst = 0;
    std::string where;
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k <= L; ++k) {
        if (!alive(k, i)) continue;
        for (Int j = i; j <= k; ++j) {
          const Int m = flow.omega.at(k, i);
          const Int da = std::abs(flow.a_sub(k, j, i).dim() - m);
          const Int db = std::abs(flow.b_sub(k, j, i).dim() - m);
          if (std::max(da, db) > worst) {
            worst = std::max(da, db);
            where = "block " + site(k, j, i);
          }
        }
      }
    push("prebasis dimensions match multiplicities", worst == 0, static_cast<double>(worst),
         where);
  }

  {  // W_j maps the span of a(k,j-1,i) onto the span of a(k,j,i)
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k <= L; ++k) {
        if (!alive(k, i)) continue;
        for (Int j = i + 1; j <= k; ++j) {
          const Subspace img = map_subspace(theta.Wmat(j), flow.a_sub(k, j - 1, i), tol);
          const Subspace tgt = flow.a_sub(k, j, i);
          const double res = eq_resid(img, tgt);
          if (!subspace_equal(img, tgt, tol)) ok = false;
          if (res > worst) {
            worst = res;
            where = "W_" + std::to_string(j) + " on a" + site(k, j - 1, i);
          }
        }
      }
    push("forward flow", ok, worst, where);
  }

  {  // the next layer annihilates an interval that ends at k
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k < L; ++k) {
        if (!alive(k, i)) continue;
        const auto& gen = flow.Jgen(k, k, i);
        const double res =
            rel_resid(theta.Wmat(k + 1) * gen, theta.Wmat(k + 1).norm(), gen.norm());
        if (res > 1e-8) ok = false;
        if (res > worst) {
          worst = res;
          where = "W_" + std::to_string(k + 1) + " on a" + site(k, k, i);
        }
      }
    push("interval-end annihilation", ok, worst, where);
  }

  {  // W_j^T pulls the dual generators back one layer
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int i = 0; i <= L; ++i)
      for (Int k = i; k <= L; ++k) {
        if (!alive(k, i)) continue;
        for (Int j = i + 1; j <= k; ++j) {
          const Eigen::MatrixXd err =
              theta.Wmat(j).transpose() * flow.Kgen(k, j, i) - flow.Kgen(k, j - 1, i);
          const double res =
              rel_resid(err, theta.Wmat(j).norm(), flow.Kgen(k, j, i).norm());
          if (res > 1e-8) ok = false;
          if (res > worst) {
            worst = res;
            where = "W_" + std::to_string(j) + "^T on b" + site(k, j, i);
          }
        }
      }
    push("transpose flow", ok, worst, where);
  }

  {  // W_i^T annihilates the dual block of an interval that starts at i
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int i = 1; i <= L; ++i)
      for (Int k = i; k <= L; ++k) {
        if (!alive(k, i)) continue;
        const auto& gen = flow.Kgen(k, i, i);
        const double res =
            rel_resid(theta.Wmat(i).transpose() * gen, theta.Wmat(i).norm(), gen.norm());
        if (res > 1e-8) ok = false;
        if (res > worst) {
          worst = res;
          where = "W_" + std::to_string(i) + "^T on b" + site(k, i, i);
        }
      }
    push("interval-start transpose annihilation", ok, worst, where);
  }

  {  // Kfull is the dual basis of Jfull at every layer
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int j = 0; j <= L; ++j) {
      const Int n = theta.shape.width(j);
      const double res = (flow.Jfull(j).transpose() * flow.Kfull(j) -
                          Eigen::MatrixXd::Identity(n, n))
                             .norm();
      if (res > 1e-9) ok = false;
      if (res > worst) {
        worst = res;
        where = "layer " + std::to_string(j);
      }
    }
    push("basis duality J^T K = I", ok, worst, where);
  }

  {  // nesting: the flow subspaces equal the spans of their prebasis blocks
    bool okA = true, okB = true;
    double worstA = 0.0, worstB = 0.0;
    std::string whereA, whereB;
    for (Int j = 0; j <= L; ++j)
      for (Int k = j; k <= L; ++k)
        for (Int i = 0; i <= j; ++i) {
          const Subspace Adef = flow.A(k, j, i);
          const Subspace Apre = flow.A_from_prebasis(k, j, i);
          const double ra = eq_resid(Adef, Apre);
          if (!subspace_equal(Adef, Apre, tol)) okA = false;
          if (ra > worstA) {
            worstA = ra;
            whereA = "A" + site(k, j, i);
          }
          const Subspace Bdef = flow.B(k, j, i);
          const Subspace Bpre = flow.B_from_prebasis(k, j, i);
          const double rb = eq_resid(Bdef, Bpre);
          if (!subspace_equal(Bdef, Bpre, tol)) okB = false;
          if (rb > worstB) {
            worstB = rb;
            whereB = "B" + site(k, j, i);
          }
        }
    push("nesting of null-column subspaces", okA, worstA, whereA);
    push("nesting of row-null subspaces", okB, worstB, whereB);
  }

  {  // dim A = alpha and dim B = beta, straight from the rank list
    Int worst = 0;
    std::string where;
    for (Int j = 0; j <= L; ++j)
      for (Int k = j; k <= L; ++k)
        for (Int i = 0; i <= j; ++i) {
          const Int da = std::abs(flow.A(k, j, i).dim() - alpha(r, k, j, i));
          const Int db = std::abs(flow.B(k, j, i).dim() - beta(r, k, j, i));
          if (std::max(da, db) > worst) {
            worst = std::max(da, db);
            where = "site " + site(k, j, i);
          }
        }
    push("dimension formulas", worst == 0, static_cast<double>(worst), where);
  }

  {  // each dual block is the orthogonal complement of all the other blocks
    bool ok = true;
    double worst = 0.0;
    std::string where;
    for (Int j = 0; j <= L; ++j) {
      const auto& blocks = flow.layer_intervals(j);
      for (const auto& [k, i] : blocks) {
        std::vector<const Eigen::MatrixXd*> others;
        for (const auto& [k2, i2] : blocks)
          if (!(k2 == k && i2 == i)) others.push_back(&flow.Jgen(k2, j, i2));
        const Subspace rest = Subspace::from_span(hcat(theta.shape.width(j), others), tol);
        const Subspace comp = complement(rest, tol);
        const Subspace b = flow.b_sub(k, j, i);
        const double res = eq_resid(comp, b);
        if (!subspace_equal(comp, b, tol)) ok = false;
        if (res > worst) {
          worst = res;
          where = "b" + site(k, j, i);
        }
      }
    }
    push("complementarity of dual blocks", ok, worst, where);
  }

  {  // the canonical factorization exists and is structurally almost-identity
    try {
      canonical_factorization(flow);
      push("canonical factorization", true, 0.0);
    } catch (const std::exception& e) {
      push("canonical factorization", false, 1.0, e.what());
    }
  }

  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const CheckResult& c) { return c.pass; });
  return rep;
}

std::string format(const TheoremReport& report) {
  std::ostringstream out;
  for (const auto& c : report.checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name;
    out << "  (residual " << c.residual << ")";
    if (!c.detail.empty()) out << "  [" << c.detail << "]";
    out << "\n";
  }
  out << (report.all_pass ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// concrete moves

namespace {

void check_site(const FlowSystem& flow, const MoveSiteIndex& idx, Int c) {
  validate_abstract_move(flow.L(), AbstractMove{idx.l, idx.k, idx.i, idx.h, c});
  if (idx.j < std::max(idx.i, idx.h + 1) || idx.j > std::min(idx.l, idx.k + 1))
    throw std::invalid_argument("move site: slot j = " + std::to_string(idx.j) +
                                " outside [max(i,h+1), min(l,k+1)]");
}

}  // namespace

Eigen::MatrixXd move_direction(const FlowSystem& flow, const MoveSiteIndex& idx, Int c) {
  check_site(flow, idx, c);
  const Eigen::MatrixXd& U = flow.Jgen(idx.l, idx.j, idx.i);
  const Eigen::MatrixXd& V = flow.Kgen(idx.k, idx.j - 1, idx.h);
  if (U.cols() < c || V.cols() < c)
    throw std::invalid_argument("move_direction: move (" + std::to_string(idx.l) + "," +
                                std::to_string(idx.k) + "," + std::to_string(idx.i) + "," +
                                std::to_string(idx.h) + ") needs w(l,i) >= " + std::to_string(c) +
                                " and w(k,h) >= " + std::to_string(c) +
                                ", not available at this rank list");
  Eigen::MatrixXd D = U.leftCols(c) * V.leftCols(c).transpose();
  const double n = D.norm();
  if (n == 0.0) throw std::logic_error("move_direction: generators produced a zero direction");
  return D / n;
}

OneMatrixMoveResult one_matrix_move(const FlowSystem& flow, const MoveSiteIndex& idx,
                                    const Eigen::MatrixXd& direction, double eps) {
  check_site(flow, idx, 1);
  const NetworkShape& shape = flow.theta.shape;
  const Int j = idx.j;
  if (direction.rows() != shape.width(j) || direction.cols() != shape.width(j - 1))
    throw std::invalid_argument("one_matrix_move: direction must be d_j x d_{j-1}");
  const double dn = direction.norm();
  if (dn == 0.0) throw std::invalid_argument("one_matrix_move: zero direction");

  // D must factor through the move's blocks: D = P_a D P_b
  const Subspace a = flow.a_sub(idx.l, j, idx.i);
  const Subspace b = flow.b_sub(idx.k, j - 1, idx.h);
  Eigen::MatrixXd pdp = a.project(direction);
  pdp = b.project(pdp.transpose()).transpose();
  if ((direction - pdp).norm() > 1e-8 * dn)
    throw std::invalid_argument("one_matrix_move: direction is not in the admissible cone of "
                                "this move site");

  const double step0 = eps > 0.0 ? eps : 1e-3 * (flow.theta.Wmat(j).norm() + 1.0);
  double step = step0;
  const Int L = shape.L();
  for (int attempt = 0;; ++attempt) {
    WeightVector th = flow.theta;
    th.Wmat(j) += step * direction;
    RankList after = ranklist_of(th, flow.tol);
    bool dropped = false;
    for (Int i = 0; i <= L && !dropped; ++i)
      for (Int k = i; k <= L && !dropped; ++k)
        if (after.at(k, i) < flow.ranks.at(k, i)) dropped = true;
    if (!dropped) {
      OneMatrixMoveResult out;
      out.theta_prime = std::move(th);
      out.ranks_before = flow.ranks;
      out.ranks_after = std::move(after);
      out.eps_used = step;
      return out;
    }
    if (attempt >= 20)
      throw std::runtime_error("one_matrix_move: every step size dropped a rank (20 halvings "
                               "from " + std::to_string(step0) + ")");
    step /= 2.0;
  }
}

WeightVector two_matrix_path_point(const WeightVector& theta, Int j, const Eigen::MatrixXd& H,
                                   double eps) {
  validate_weights(theta);
  const Int L = theta.shape.L();
  if (j < 1 || j >= L)
    throw std::invalid_argument("two_matrix_path_point: need 1 <= j <= L-1");
  const Int n = theta.shape.width(j);
  if (H.rows() != n || H.cols() != n)
    throw std::invalid_argument("two_matrix_path_point: H must be d_j x d_j");

  const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n, n) + eps * H;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  if (smin <= 0.0 || smax / smin > 1e8)
    throw std::invalid_argument("two_matrix_path_point: I + eps*H is singular or too badly "
                                "conditioned to invert");

  WeightVector out = theta;
  out.Wmat(j + 1) = theta.Wmat(j + 1) * G;
  out.Wmat(j) = Eigen::FullPivLU<Eigen::MatrixXd>(G).solve(theta.Wmat(j));
  return out;
}

}  // namespace fiberstrat
