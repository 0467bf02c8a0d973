#include "fiberstrat/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fiberstrat {

namespace {

const char* kind_prefix(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::one_matrix: return "phi";
    case FamilyKind::two_matrix: return "tau";
    case FamilyKind::normal: return "psi";
  }
  return "?";
}

// 1 - smallest principal cosine; 0 when the claim holds exactly
double equality_deficit(const Subspace& a, const Subspace& b) {
  if (a.dim() != b.dim()) return 1.0;
  if (a.dim() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.basis().transpose() * b.basis());
  return 1.0 - svd.singularValues().minCoeff();
}

double containment_deficit(const Subspace& outer, const Subspace& inner) {
  if (inner.dim() == 0) return 0.0;
  if (inner.dim() > outer.dim()) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(outer.basis().transpose() * inner.basis());
  return 1.0 - svd.singularValues().minCoeff();
}

}  // namespace

std::string to_string(const FamilyIndex& idx) {
  std::ostringstream out;
  out << kind_prefix(idx.kind) << "(" << idx.l << "," << idx.k << ",";
  if (idx.kind != FamilyKind::normal) out << idx.j << ",";
  out << idx.i << "," << idx.h << ")";
  return out.str();
}

ClassTags classify_index(Int L, const FamilyIndex& idx) {
  if (L < 1) throw std::invalid_argument("classify_index: L must be >= 1");
  const Int l = idx.l, k = idx.k, j = idx.j, i = idx.i, h = idx.h;
  ClassTags tags;
  switch (idx.kind) {
    case FamilyKind::one_matrix: {
      if (j < 1 || j > L || l < j || l > L || k < j - 1 || k > L || i < 0 || i > j || h < 0 ||
          h > j - 1)
        throw std::invalid_argument("classify_index: " + to_string(idx) +
                                    " out of range (need j in [1,L], l in [j,L], k in [j-1,L], "
                                    "i in [0,j], h in [0,j-1])");
      tags.L0 = (l == L && h == 0);
      tags.fiber = !tags.L0;
      tags.comb = (l > k && i > h);
      tags.conn = tags.comb && (k + 1 == i);
      tags.swap = tags.comb && (k >= i);
      tags.free = tags.fiber;
      tags.stratum = tags.fiber && !tags.comb;
      return tags;
    }
    case FamilyKind::two_matrix: {
      if (j < 1 || j > L - 1 || l < j || l > L || k < j || k > L || i < 0 || i > j || h < 0 ||
          h > j)
        throw std::invalid_argument("classify_index: " + to_string(idx) +
                                    " out of range (need j in [1,L-1], l in [j,L], k in [j,L], "
                                    "i in [0,j], h in [0,j])");
      if (l == j && h == j)
        throw std::invalid_argument("classify_index: " + to_string(idx) +
                                    " is identically zero (annihilated on both sides)");
      if (l == j)
        throw std::invalid_argument(
            "classify_index: " + to_string(idx) + " is not canonical; it equals the one-matrix "
            "family phi(" + std::to_string(j) + "," + std::to_string(k) + "," +
            std::to_string(j) + "," + std::to_string(i) + "," + std::to_string(h) + ")");
      if (h == j)
        throw std::invalid_argument(
            "classify_index: " + to_string(idx) + " is not canonical; it equals the one-matrix "
            "family phi(" + std::to_string(l) + "," + std::to_string(k) + "," +
            std::to_string(j + 1) + "," + std::to_string(i) + "," + std::to_string(j) + ")");
      tags.L0 = (l == L && h == 0);
      tags.fiber = !tags.L0;
      tags.comb = (l > k && i > h);
      tags.conn = tags.comb && (k + 1 == i);
      tags.swap = tags.comb && (k >= i);
      tags.free = tags.L0;
      tags.stratum = tags.L0 || tags.comb;
      return tags;
    }
    case FamilyKind::normal: {
      if (i < 0 || i > l || l > L || h < 0 || h > k || k > L)
        throw std::invalid_argument("classify_index: " + to_string(idx) +
                                    " out of range (need 0 <= i <= l <= L, 0 <= h <= k <= L)");
      tags.L0 = (l == L && h == 0);
      tags.fiber = !tags.L0;
      tags.comb = (l > k && i > h);
      tags.conn = tags.comb && (k + 1 == i);
      tags.swap = tags.comb && (k >= i);
      tags.free = tags.L0;
      tags.stratum = tags.L0 || tags.comb;
      return tags;
    }
  }
  throw std::logic_error("classify_index: unknown family kind");
}

std::vector<WeightSubspace> build_weight_prebases(const FlowSystem& flow) {
  const Int L = flow.L();
  std::vector<WeightSubspace> out;
  // one-matrix families: (l,i) alive at layer j against (k,h) alive at j-1
  for (Int j = 1; j <= L; ++j)
    for (const auto& [l, i] : flow.layer_intervals(j))
      for (const auto& [k, h] : flow.layer_intervals(j - 1)) {
        WeightSubspace ws;
        ws.idx = FamilyIndex{FamilyKind::one_matrix, l, k, j, i, h};
        ws.tags = classify_index(L, ws.idx);
        ws.dim = flow.omega.at(l, i) * flow.omega.at(k, h);
        out.push_back(std::move(ws));
      }
  // two-matrix families: both intervals alive at the gauge layer j, with the
  // degenerate (one-matrix-equivalent) indices l = j and h = j skipped
  for (Int j = 1; j <= L - 1; ++j)
    for (const auto& [l, i] : flow.layer_intervals(j)) {
      if (l == j) continue;
      for (const auto& [k, h] : flow.layer_intervals(j)) {
        if (h == j) continue;
        WeightSubspace ws;
        ws.idx = FamilyIndex{FamilyKind::two_matrix, l, k, j, i, h};
        ws.tags = classify_index(L, ws.idx);
        ws.dim = flow.omega.at(l, i) * flow.omega.at(k, h);
        out.push_back(std::move(ws));
      }
    }
  return out;
}

std::vector<WeightSubspace> build_normal_prebases(const FlowSystem& flow) {
  const Int L = flow.L();
  std::vector<WeightSubspace> out;
  auto push = [&](Int l, Int k, Int i, Int h) {
    if (flow.omega.at(l, i) <= 0 || flow.omega.at(k, h) <= 0) return;
    WeightSubspace ws;
    ws.idx = FamilyIndex{FamilyKind::normal, l, k, 0, i, h};
    ws.tags = classify_index(L, ws.idx);
    ws.dim = flow.omega.at(l, i) * flow.omega.at(k, h);
    out.push_back(std::move(ws));
  };
  // freedom selection: l = L, h = 0, every nontrivial (k, i)
  for (Int k = 0; k <= L; ++k)
    for (Int i = 0; i <= std::min(k + 1, L); ++i) push(L, k, i, 0);
  // stratum selection adds the move-shaped indices not already present
  for (Int l = 1; l <= L; ++l)
    for (Int k = 0; k <= l - 1; ++k)
      for (Int i = 1; i <= k + 1; ++i)
        for (Int h = 0; h <= i - 1; ++h) {
          if (l == L && h == 0) continue;
          push(l, k, i, h);
        }
  return out;
}

std::vector<WeightSubspace> select_free(const std::vector<WeightSubspace>& families) {
  std::vector<WeightSubspace> out;
  std::copy_if(families.begin(), families.end(), std::back_inserter(out),
               [](const WeightSubspace& ws) { return ws.tags.free; });
  return out;
}

std::vector<WeightSubspace> select_stratum(const std::vector<WeightSubspace>& families) {
  std::vector<WeightSubspace> out;
  std::copy_if(families.begin(), families.end(), std::back_inserter(out),
               [](const WeightSubspace& ws) { return ws.tags.stratum; });
  return out;
}

std::vector<WeightSubspace> select_fiber(const std::vector<WeightSubspace>& families) {
  std::vector<WeightSubspace> out;
  std::copy_if(families.begin(), families.end(), std::back_inserter(out),
               [](const WeightSubspace& ws) {
                 if (ws.tags.stratum) return true;
                 return ws.idx.kind == FamilyKind::one_matrix && ws.tags.fiber && ws.tags.comb &&
                        ws.idx.j == ws.idx.k + 1;
               });
  return out;
}

Eigen::MatrixXd materialize_family(const FlowSystem& flow, const FamilyIndex& idx) {
  const Int L = flow.L();
  classify_index(L, idx);  // range validation
  const NetworkShape& shape = flow.theta.shape;
  const Int d_theta = shape.param_dim();

  switch (idx.kind) {
    case FamilyKind::one_matrix: {
      const Eigen::MatrixXd& U = flow.Jgen(idx.l, idx.j, idx.i);
      const Eigen::MatrixXd& V = flow.Kgen(idx.k, idx.j - 1, idx.h);
      Eigen::MatrixXd out(d_theta, U.cols() * V.cols());
      Int c = 0;
      for (Int t = 0; t < V.cols(); ++t)
        for (Int s = 0; s < U.cols(); ++s)
          out.col(c++) = embed_block(shape, idx.j, U.col(s) * V.col(t).transpose());
      return out;
    }
    case FamilyKind::two_matrix: {
      const Eigen::MatrixXd& U = flow.Jgen(idx.l, idx.j, idx.i);
      const Eigen::MatrixXd& V = flow.Kgen(idx.k, idx.j, idx.h);
      const Eigen::MatrixXd& Wlo = flow.theta.Wmat(idx.j);
      const Eigen::MatrixXd& Whi = flow.theta.Wmat(idx.j + 1);
      Eigen::MatrixXd out(d_theta, U.cols() * V.cols());
      Int c = 0;
      for (Int t = 0; t < V.cols(); ++t)
        for (Int s = 0; s < U.cols(); ++s) {
          const Eigen::MatrixXd H = U.col(s) * V.col(t).transpose();
          out.col(c++) = embed_block(shape, idx.j + 1, Whi * H) +
                         embed_block(shape, idx.j, -H * Wlo);
        }
      return out;
    }
    case FamilyKind::normal: {
      const Eigen::MatrixXd& U = flow.Kgen(idx.l, idx.l, idx.i);
      const Eigen::MatrixXd& V = flow.Jgen(idx.k, idx.h, idx.h);
      const Int jlo = std::max(idx.i, idx.h + 1);
      const Int jhi = std::min(idx.k + 1, idx.l);
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d_theta, U.cols() * V.cols());
      if (jlo > jhi) return Eigen::MatrixXd(d_theta, 0);  // k+1 < i or l <= h
      Int c = 0;
      for (Int t = 0; t < V.cols(); ++t)
        for (Int s = 0; s < U.cols(); ++s) {
          const Eigen::MatrixXd M = U.col(s) * V.col(t).transpose();
          Eigen::VectorXd col = Eigen::VectorXd::Zero(d_theta);
          for (Int j = jlo; j <= jhi; ++j)
            col += embed_block(shape, j,
                               mu_sub(flow.theta, idx.l, j).transpose() * M *
                                   mu_sub(flow.theta, j - 1, idx.h).transpose());
          out.col(c++) = col;
        }
      return out;
    }
  }
  throw std::logic_error("materialize_family: unknown family kind");
}

Subspace materialize_span(const FlowSystem& flow, const std::vector<WeightSubspace>& families,
                          std::optional<Tolerances> tol) {
  const Tolerances t = tol.value_or(flow.tol);
  const Int d_theta = flow.theta.shape.param_dim();
  std::vector<Eigen::MatrixXd> mats;
  Int total = 0;
  for (const auto& f : families) {
    mats.push_back(materialize_family(flow, f.idx));
    total += mats.back().cols();
  }
  Eigen::MatrixXd all(d_theta, total);
  Int off = 0;
  for (const auto& m : mats) {
    all.middleCols(off, m.cols()) = m;
    off += m.cols();
  }
  // unit columns keep the span SVD scale-balanced; the span itself is unchanged
  for (Int c = 0; c < all.cols(); ++c) {
    const double n = all.col(c).norm();
    if (n > 0.0) all.col(c) /= n;
  }
  return Subspace::from_span(all, t);
}

Subspace tangent_space(const FlowSystem& flow) {
  return materialize_span(flow, select_stratum(build_weight_prebases(flow)));
}

Subspace normal_space(const FlowSystem& flow) {
  return materialize_span(flow, build_normal_prebases(flow));
}

Subspace rowspace_dmu(const FlowSystem& flow) {
  return materialize_span(flow, select_free(build_normal_prebases(flow)));
}

Subspace nullspace_dmu(const WeightVector& theta, const Tolerances& tol) {
  return fundamental_subspaces(dmu_matrix(theta), tol).null_space;
}

Subspace rowspace_dmu_direct(const WeightVector& theta, const Tolerances& tol) {
  return fundamental_subspaces(dmu_matrix(theta), tol).row;
}

Subspace normal_space_direct(const WeightVector& theta, const Tolerances& tol) {
  validate_weights(theta);
  const Int L = theta.shape.L();
  const Int d_theta = theta.shape.param_dim();
  std::vector<Eigen::VectorXd> cols;

  // Columns are normalized so that genuinely independent gradients of very
  // different magnitudes all survive the span's relative cutoff.  A gradient
  // that is zero up to roundoff must be dropped BEFORE normalizing: behind a
  // narrow bottleneck the dyad functional of a block can vanish identically,
  // and normalizing its O(eps) residue would promote noise to a basis vector.
  const auto keep = [&cols](const Eigen::VectorXd& g, double scale) {
    if (g.norm() > scale) cols.push_back(g / g.norm());
  };

  const Eigen::MatrixXd dmu_t = dmu_matrix(theta).transpose();
  for (Int c = 0; c < dmu_t.cols(); ++c) keep(dmu_t.col(c), tol.rank_rel * dmu_t.norm());

  for (Int x = 0; x <= L; ++x)
    for (Int y = x + 1; y <= L; ++y) {
      const FundamentalSubspaces f = fundamental_subspaces(mu_sub(theta, y, x), tol);
      if (f.left_null.dim() == 0 || f.null_space.dim() == 0) continue;
      const Eigen::MatrixXd dsub_t = dmu_sub_matrix(theta, y, x).transpose();
      const double scale = tol.rank_rel * dsub_t.norm();  // |vec(u v^T)| = 1
      for (Int s = 0; s < f.left_null.dim(); ++s)
        for (Int t = 0; t < f.null_space.dim(); ++t) {
          const Eigen::MatrixXd uv =
              f.left_null.basis().col(s) * f.null_space.basis().col(t).transpose();
          keep(dsub_t * Eigen::Map<const Eigen::VectorXd>(uv.data(), uv.size()), scale);
        }
    }

  Eigen::MatrixXd all(d_theta, static_cast<Int>(cols.size()));
  for (Int c = 0; c < all.cols(); ++c) all.col(c) = cols[static_cast<std::size_t>(c)];
  return Subspace::from_span(all, tol);
}

Int edge_subset_dim(const FlowSystem& flow, const AbstractMove& m) {
  validate_abstract_move(flow.L(), m);
  std::vector<WeightSubspace> set = select_stratum(build_weight_prebases(flow));
  WeightSubspace extra;
  extra.idx = FamilyIndex{FamilyKind::one_matrix, m.l, m.k, m.k + 1, m.i, m.h};
  extra.tags = classify_index(flow.L(), extra.idx);
  extra.dim = flow.omega.at(m.l, m.i) * flow.omega.at(m.k, m.h);
  if (extra.dim == 0)
    throw std::invalid_argument("edge_subset_dim: move is not available at this rank list");
  set.push_back(std::move(extra));
  return materialize_span(flow, set).dim();
}

GeometryReport verify_geometry(const FlowSystem& flow, std::optional<Tolerances> measure_tol) {
  const Tolerances mt = measure_tol.value_or(flow.tol);
  validate(mt);
  const DimensionLedger ledger = dimension_ledger(flow.ranks);
  const Int d_theta = flow.theta.shape.param_dim();

  GeometryReport rep;
  auto push_dim = [&rep](std::string name, Int expected, Int measured) {
    GeometryCheck c;
    c.name = std::move(name);
    c.expected = static_cast<double>(expected);
    c.measured = static_cast<double>(measured);
    c.residual = static_cast<double>(std::abs(expected - measured));
    c.pass = (expected == measured);
    rep.checks.push_back(std::move(c));
  };
  auto push_resid = [&rep, &mt](std::string name, double residual) {
    GeometryCheck c;
    c.name = std::move(name);
    c.expected = mt.angle;
    c.measured = residual;
    c.residual = residual;
    c.pass = (residual <= mt.angle);
    rep.checks.push_back(std::move(c));
  };

  const auto weight_families = build_weight_prebases(flow);
  const auto normal_families = build_normal_prebases(flow);
  const auto free_t = select_free(weight_families);
  const auto strat_t = select_stratum(weight_families);
  const auto fiber_t = select_fiber(weight_families);
  const auto free_n = select_free(normal_families);

  auto dim_sum = [](const std::vector<WeightSubspace>& fams) {
    Int s = 0;
    for (const auto& f : fams) s += f.dim;
    return s;
  };

  const Subspace span_free_t = materialize_span(flow, free_t, mt);
  const Subspace span_strat_t = materialize_span(flow, strat_t, mt);
  const Subspace span_fiber_t = materialize_span(flow, fiber_t, mt);
  const Subspace span_free_n = materialize_span(flow, free_n, mt);
  const Subspace span_strat_n = materialize_span(flow, normal_families, mt);

  const Subspace null_dmu = nullspace_dmu(flow.theta, mt);
  const Subspace row_dmu = rowspace_dmu_direct(flow.theta, mt);
  const Subspace normal_direct = normal_space_direct(flow.theta, mt);

  // family dims are claims; their sums must already hit the ledger counts
  push_dim("sum of freedom tangent family dims", ledger.free_dim, dim_sum(free_t));
  push_dim("sum of stratum tangent family dims", ledger.stratum_dim, dim_sum(strat_t));
  push_dim("sum of fiber tangent family dims", ledger.fiber_dim, dim_sum(fiber_t));
  push_dim("sum of freedom normal family dims", ledger.rank_dmu, dim_sum(free_n));
  push_dim("sum of stratum normal family dims", d_theta - ledger.stratum_dim,
           dim_sum(normal_families));

  // measured span dims: the families are linearly independent
  push_dim("dim span freedom tangent prebasis", ledger.free_dim, span_free_t.dim());
  push_dim("dim span stratum tangent prebasis", ledger.stratum_dim, span_strat_t.dim());
  push_dim("dim span fiber tangent prebasis", ledger.fiber_dim, span_fiber_t.dim());
  push_dim("dim span freedom normal prebasis", ledger.rank_dmu, span_free_n.dim());
  push_dim("dim span stratum normal prebasis", d_theta - ledger.stratum_dim,
           span_strat_n.dim());

  // the differential agrees
  push_dim("nullity of dmu", ledger.free_dim, null_dmu.dim());
  push_dim("rank of dmu", ledger.rank_dmu, row_dmu.dim());

  // span identities
  push_resid("freedom tangent prebasis spans null dmu", equality_deficit(span_free_t, null_dmu));
  push_resid("fiber tangent prebasis spans null dmu", equality_deficit(span_fiber_t, null_dmu));
  push_resid("freedom normal prebasis spans row dmu", equality_deficit(span_free_n, row_dmu));
  push_resid("stratum tangent inside null dmu", containment_deficit(null_dmu, span_strat_t));
  push_resid("row dmu inside stratum normal", containment_deficit(span_strat_n, row_dmu));
  push_resid("stratum normal matches direct formula",
             equality_deficit(span_strat_n, normal_direct));

  {  // tangent and normal are orthogonal complements
    double worst = 0.0;
    if (span_strat_t.dim() > 0 && span_strat_n.dim() > 0)
      worst = (span_strat_t.basis().transpose() * span_strat_n.basis()).cwiseAbs().maxCoeff();
    push_resid("max tangent-normal inner product", worst);
    push_dim("tangent plus normal fills the weight space", d_theta,
             sum(span_strat_t, span_strat_n, mt).dim());
  }

  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const GeometryCheck& c) { return c.pass; });
  return rep;
}

std::string format(const GeometryReport& report) {
  std::ostringstream out;
  for (const auto& c : report.checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  (expected " << c.expected
        << ", measured " << c.measured << ", residual " << c.residual << ")\n";
  }
  out << (report.all_pass ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
  return out.str();
}

}  // namespace fiberstrat
