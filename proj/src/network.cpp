#include "fiberstrat/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

#include "fiberstrat/flow.hpp"

namespace fiberstrat {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

Eigen::MatrixXd solve_right(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  // A * B^{-1} without forming the inverse
  Eigen::FullPivLU<Eigen::MatrixXd> lu(B.transpose());
  if (!lu.isInvertible()) fail("gauge matrix is singular");
  return lu.solve(A.transpose()).transpose();
}

Eigen::MatrixXd solve_left(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A) {
  // B^{-1} * A
  Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  if (!lu.isInvertible()) fail("gauge matrix is singular");
  return lu.solve(A);
}

double condition_number(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

Eigen::MatrixXd gaussian_matrix(Int rows, Int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (Int c = 0; c < cols; ++c)
    for (Int r = 0; r < rows; ++r) M(r, c) = gauss(rng);
  return M;
}

Eigen::MatrixXd random_well_conditioned(Int n, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXd G = gaussian_matrix(n, n, rng);
    if (condition_number(G) < 1e4) return G;
  }
  throw std::runtime_error("failed to draw a well-conditioned gauge matrix");
}

// Signed permutation times a power-of-two diagonal.  Both the gauge and its
// inverse apply without rounding, so products that are structurally zero
// stay bitwise zero; a dense gauge would leave O(eps) residue there, which a
// relative rank cutoff then counts as rank one.
Eigen::MatrixXd monomial_gauge(Int n, std::mt19937_64& rng, Eigen::MatrixXd& inverse) {
  std::vector<Int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Int{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_int_distribution<int> expo(-1, 1);
  std::uniform_int_distribution<int> coin(0, 1);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  inverse = Eigen::MatrixXd::Zero(n, n);
  for (Int t = 0; t < n; ++t) {
    const double s = (coin(rng) ? 1.0 : -1.0) * std::ldexp(1.0, expo(rng));
    G(perm[static_cast<size_t>(t)], t) = s;
    inverse(t, perm[static_cast<size_t>(t)]) = 1.0 / s;
  }
  return G;
}

}  // namespace

const Eigen::MatrixXd& WeightVector::Wmat(Int j) const {
  if (j < 1 || j > shape.L()) fail("layer index out of range");
  return W[static_cast<std::size_t>(j - 1)];
}

Eigen::MatrixXd& WeightVector::Wmat(Int j) {
  if (j < 1 || j > shape.L()) fail("layer index out of range");
  return W[static_cast<std::size_t>(j - 1)];
}

WeightVector zero_weights(NetworkShape shape) {
  WeightVector th{make_shape(shape.d), {}};
  for (Int j = 1; j <= th.shape.L(); ++j)
    th.W.emplace_back(Eigen::MatrixXd::Zero(th.shape.width(j), th.shape.width(j - 1)));
  return th;
}

void validate_weights(const WeightVector& th) {
  const Int L = th.shape.L();
  if (L < 1) fail("network shape needs at least one matrix");
  if (th.W.size() != static_cast<std::size_t>(L)) fail("weight count does not match shape");
  for (Int j = 1; j <= L; ++j) {
    const auto& M = th.Wmat(j);
    if (M.rows() != th.shape.width(j) || M.cols() != th.shape.width(j - 1)) {
      std::ostringstream os;
      os << "W_" << j << " is " << M.rows() << "x" << M.cols() << ", expected "
         << th.shape.width(j) << "x" << th.shape.width(j - 1);
      fail(os.str());
    }
    if (!M.allFinite()) fail("weights contain non-finite entries");
  }
}

Eigen::MatrixXd mu_sub(const WeightVector& th, Int k, Int i) {
  const Int L = th.shape.L();
  if (!(L >= k && k >= i && i >= 0)) fail("subsequence indices need L >= k >= i >= 0");
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(th.shape.width(i), th.shape.width(i));
  for (Int j = i + 1; j <= k; ++j) P = th.Wmat(j) * P;
  return P;
}

Eigen::MatrixXd mu(const WeightVector& th) { return mu_sub(th, th.shape.L(), 0); }

RankList ranklist_of(const WeightVector& th, const Tolerances& tol) {
  validate_weights(th);
  const Int L = th.shape.L();
  RankList r = zero_ranklist(th.shape);
  for (Int k = 0; k <= L; ++k) {
    r.set(k, k, th.shape.width(k));
    for (Int i = 0; i < k; ++i) r.set(k, i, numerical_rank(mu_sub(th, k, i), tol));
  }
  return r;
}

Int param_offset(const NetworkShape& shape, Int j) {
  if (j < 1 || j > shape.L()) fail("layer index out of range");
  Int off = 0;
  for (Int t = 1; t < j; ++t) off += shape.width(t) * shape.width(t - 1);
  return off;
}

Eigen::VectorXd embed_block(const NetworkShape& shape, Int j, const Eigen::MatrixXd& M) {
  if (M.rows() != shape.width(j) || M.cols() != shape.width(j - 1))
    fail("block shape mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(shape.param_dim());
  v.segment(param_offset(shape, j), M.size()) =
      Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
  return v;
}

Eigen::VectorXd flatten(const WeightVector& th) {
  validate_weights(th);
  Eigen::VectorXd v(th.shape.param_dim());
  Int off = 0;
  for (Int j = 1; j <= th.shape.L(); ++j) {
    const auto& M = th.Wmat(j);
    v.segment(off, M.size()) = Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
    off += M.size();
  }
  return v;
}

WeightVector unflatten(const NetworkShape& shape, const Eigen::VectorXd& v) {
  if (v.size() != shape.param_dim()) fail("parameter vector length mismatch");
  WeightVector th = zero_weights(shape);
  Int off = 0;
  for (Int j = 1; j <= shape.L(); ++j) {
    auto& M = th.Wmat(j);
    M = Eigen::Map<const Eigen::MatrixXd>(v.data() + off, M.rows(), M.cols());
    off += M.size();
  }
  return th;
}

Eigen::MatrixXd dmu_matrix(const WeightVector& th) {
  validate_weights(th);
  const Int L = th.shape.L();
  Eigen::MatrixXd D(th.shape.width(L) * th.shape.width(0), th.shape.param_dim());
  for (Int j = 1; j <= L; ++j) {
    const Eigen::MatrixXd left = mu_sub(th, L, j);
    const Eigen::MatrixXd right = mu_sub(th, j - 1, 0);
    D.middleCols(param_offset(th.shape, j), th.shape.width(j) * th.shape.width(j - 1)) =
        Eigen::kroneckerProduct(right.transpose(), left);
  }
  return D;
}

Eigen::MatrixXd dmu_sub_matrix(const WeightVector& th, Int y, Int x) {
  validate_weights(th);
  if (!(th.shape.L() >= y && y >= x && x >= 0)) fail("subsequence indices out of range");
  Eigen::MatrixXd D =
      Eigen::MatrixXd::Zero(th.shape.width(y) * th.shape.width(x), th.shape.param_dim());
  for (Int j = x + 1; j <= y; ++j) {
    const Eigen::MatrixXd left = mu_sub(th, y, j);
    const Eigen::MatrixXd right = mu_sub(th, j - 1, x);
    D.middleCols(param_offset(th.shape, j), th.shape.width(j) * th.shape.width(j - 1)) =
        Eigen::kroneckerProduct(right.transpose(), left);
  }
  return D;
}

WeightVector dmu_transpose_apply(const WeightVector& th, const Eigen::MatrixXd& M) {
  validate_weights(th);
  const Int L = th.shape.L();
  if (M.rows() != th.shape.width(L) || M.cols() != th.shape.width(0))
    fail("matrix must be d_L x d_0");
  WeightVector out = zero_weights(th.shape);
  for (Int j = 1; j <= L; ++j)
    out.Wmat(j) = mu_sub(th, L, j).transpose() * M * mu_sub(th, j - 1, 0).transpose();
  return out;
}

WeightVector eta_apply(const WeightVector& th, const std::vector<Eigen::MatrixXd>& J,
                       bool inverse) {
  validate_weights(th);
  const Int L = th.shape.L();
  if (J.size() != static_cast<std::size_t>(L + 1)) fail("eta needs L+1 gauge matrices");
  for (Int j = 0; j <= L; ++j) {
    const auto& G = J[static_cast<std::size_t>(j)];
    if (G.rows() != th.shape.width(j) || G.cols() != th.shape.width(j))
      fail("gauge matrix size mismatch");
  }
  WeightVector out = zero_weights(th.shape);
  for (Int j = 1; j <= L; ++j) {
    const auto& Jj = J[static_cast<std::size_t>(j)];
    const auto& Jp = J[static_cast<std::size_t>(j - 1)];
    out.Wmat(j) = inverse ? solve_left(Jj, th.Wmat(j) * Jp)
                          : solve_right(Jj * th.Wmat(j), Jp);
  }
  return out;
}

WeightVector fiber_point(const Eigen::MatrixXd& Wmat, const RankList& r,
                         const Tolerances& tol) {
  if (Validation v = validate(r); !v.ok) fail("invalid rank list: " + v.reason);
  const Int L = r.shape.L();
  const Int dL = r.shape.width(L), d0 = r.shape.width(0);
  if (Wmat.rows() != dL || Wmat.cols() != d0) fail("product matrix must be d_L x d_0");
  const Int R = r.fiber_rank();
  if (numerical_rank(Wmat, tol) != R) {
    std::ostringstream os;
    os << "numerical rank of W is " << numerical_rank(Wmat, tol)
       << " but the rank list requires " << R;
    fail(os.str());
  }

  // W = U Σ V^T; the canonical factors put the identity channel first, so
  // scaling the first R coordinates of layer 0 by the singular values turns
  // the canonical product into Σ.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Wmat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd Dprime = Eigen::MatrixXd::Identity(d0, d0);
  for (Int t = 0; t < R; ++t) Dprime(t, t) = svd.singularValues()(t);

  WeightVector th = canonical_weight_vector(r);
  th.Wmat(1) = th.Wmat(1) * Dprime * svd.matrixV().transpose();
  th.Wmat(L) = svd.matrixU() * th.Wmat(L);
  return th;
}

WeightVector sample_on_stratum(const Eigen::MatrixXd& Wmat, const RankList& r,
                               std::uint64_t seed, const Tolerances& tol) {
  WeightVector th = fiber_point(Wmat, r, tol);
  const Int L = r.shape.L();
  std::mt19937_64 rng(seed);
  // On the rank-zero fiber some product blocks are exactly zero (by interval
  // monotonicity that happens only there), and they must stay exactly zero
  // for the rank list to survive measurement; monomial gauges keep them so.
  const bool exact = r.fiber_rank() == 0;
  Eigen::MatrixXd prev;      // G_{j-1}; G_0 = G_L = identity
  Eigen::MatrixXd prev_inv;  // exact path only
  for (Int j = 1; j <= L - 1; ++j) {
    Eigen::MatrixXd Ginv;
    const Eigen::MatrixXd G = exact ? monomial_gauge(r.shape.width(j), rng, Ginv)
                                    : random_well_conditioned(r.shape.width(j), rng);
    const Eigen::MatrixXd GW = G * th.Wmat(j);
    if (j == 1)
      th.Wmat(1) = GW;
    else
      th.Wmat(j) = exact ? (GW * prev_inv).eval() : solve_right(GW, prev);
    prev = std::move(G);
    prev_inv = std::move(Ginv);
  }
  if (L >= 2)
    th.Wmat(L) = exact ? (th.Wmat(L) * prev_inv).eval() : solve_right(th.Wmat(L), prev);
  return th;
}

Eigen::MatrixXd random_matrix_with_rank(Int rows, Int cols, Int R, std::uint64_t seed,
                                        const Tolerances& tol) {
  if (R < 0 || R > std::min(rows, cols)) fail("rank out of range for the given size");
  if (R == 0) return Eigen::MatrixXd::Zero(rows, cols);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXd M = gaussian_matrix(rows, R, rng) * gaussian_matrix(R, cols, rng);
    if (numerical_rank(M, tol) == R) return M;
  }
  throw std::runtime_error("failed to draw a matrix of the requested rank");
}

}  // namespace fiberstrat
