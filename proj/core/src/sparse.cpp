#include "mgpbd/sparse.hpp"

#include "mgpbd/random.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mgpbd {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

double SparseMatrix::at(Index i, Index j) const {
  const auto cols = row_cols(i);
  const auto vals = row_vals(i);
  for (std::size_t k = 0; k < cols.size(); ++k)
    if (cols[k] == j) return vals[k];
  return 0.0;
}

SparseMatrix SparseMatrix::identity(Index n) {
  SparseMatrix a(n, n);
  a.col_indices.resize(n);
  a.values.assign(n, 1.0);
  for (Index i = 0; i < n; ++i) {
    a.row_offsets[i + 1] = i + 1;
    a.col_indices[i] = i;
  }
  return a;
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::span<const Index> ri,
                                         std::span<const Index> ci, std::span<const double> v) {
  require(ri.size() == ci.size() && ci.size() == v.size(), "from_triplets: length mismatch");
  std::vector<std::size_t> order(ri.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ri[a] != ri[b] ? ri[a] < ri[b] : ci[a] < ci[b];
  });
  SparseMatrix a(rows, cols);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t t = order[k];
    require(ri[t] >= 0 && ri[t] < rows && ci[t] >= 0 && ci[t] < cols,
            "from_triplets: index out of range");
    if (k > 0 && ri[order[k - 1]] == ri[t] && ci[order[k - 1]] == ci[t]) {
      a.values.back() += v[t];
      continue;
    }
    a.col_indices.push_back(ci[t]);
    a.values.push_back(v[t]);
    ++a.row_offsets[ri[t] + 1];
  }
  for (Index i = 0; i < rows; ++i) a.row_offsets[i + 1] += a.row_offsets[i];
  return a;
}

void validate(const SparseMatrix& a) {
  require(a.n_rows >= 0 && a.n_cols >= 0, "sparse: negative dimension");
  require(a.row_offsets.size() == static_cast<std::size_t>(a.n_rows) + 1,
          "sparse: row_offsets length");
  require(a.row_offsets.front() == 0, "sparse: row_offsets[0] != 0");
  require(a.row_offsets.back() == a.nnz() && a.values.size() == a.col_indices.size(),
          "sparse: nnz mismatch");
  for (Index i = 0; i < a.n_rows; ++i) {
    require(a.row_offsets[i] <= a.row_offsets[i + 1], "sparse: row_offsets decreasing");
    const auto cols = a.row_cols(i);
    std::size_t sorted_end = cols.size();
    if (a.diag_last && !cols.empty() && cols.back() == i) sorted_end = cols.size() - 1;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      require(cols[k] >= 0 && cols[k] < a.n_cols, "sparse: column out of range");
      if (k > 0 && k < sorted_end) require(cols[k - 1] < cols[k], "sparse: unsorted or duplicate column");
      if (a.diag_last && k < sorted_end) require(cols[k] != i, "sparse: diagonal not last");
    }
  }
}

DenseBlock DenseBlock::identity(Index n) {
  DenseBlock d(n, n);
  for (Index i = 0; i < n; ++i) d(i, i) = 1.0;
  return d;
}

DenseBlock to_dense(const SparseMatrix& a) {
  DenseBlock d(a.n_rows, a.n_cols);
  for (Index i = 0; i < a.n_rows; ++i)
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      d(i, a.col_indices[k]) += a.values[k];
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  require(x.size() == static_cast<std::size_t>(a.n_cols), "spmv: x length != n_cols");
  require(y.size() == static_cast<std::size_t>(a.n_rows), "spmv: y length != n_rows");
  const Index* cols = a.col_indices.data();
  const double* vals = a.values.data();
  for (Index i = 0; i < a.n_rows; ++i) {
    double s = 0.0;
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) s += vals[k] * x[cols[k]];
    y[i] = s;
  }
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.n_rows);
  spmv(a, x, y);
  return y;
}

void residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b,
              std::span<double> r) {
  require(x.size() == static_cast<std::size_t>(a.n_cols) &&
              b.size() == static_cast<std::size_t>(a.n_rows) && r.size() == b.size(),
          "residual: dimension mismatch");
  const Index* cols = a.col_indices.data();
  const double* vals = a.values.data();
  for (Index i = 0; i < a.n_rows; ++i) {
    double s = 0.0;
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) s += vals[k] * x[cols[k]];
    r[i] = b[i] - s;
  }
}

std::vector<double> diagonal(const SparseMatrix& a) {
  const Index n = std::min(a.n_rows, a.n_cols);
  std::vector<double> d(n, 0.0);
  for (Index i = 0; i < n; ++i) {
    const Index begin = a.row_offsets[i], end = a.row_offsets[i + 1];
    if (a.diag_last) {
      if (end > begin && a.col_indices[end - 1] == i) d[i] = a.values[end - 1];
      continue;
    }
    const auto* first = a.col_indices.data() + begin;
    const auto* last = a.col_indices.data() + end;
    const auto* it = std::lower_bound(first, last, i);
    if (it != last && *it == i) d[i] = a.values[begin + (it - first)];
  }
  return d;
}

SparseMatrix transpose(const SparseMatrix& a) {
  SparseMatrix t(a.n_cols, a.n_rows);
  for (Index c : a.col_indices) ++t.row_offsets[c + 1];
  for (Index j = 0; j < a.n_cols; ++j) t.row_offsets[j + 1] += t.row_offsets[j];
  t.col_indices.resize(a.col_indices.size());
  t.values.resize(a.values.size());
  std::vector<Index> fill(t.row_offsets.begin(), t.row_offsets.end() - 1);
  // Rows visited ascending, so each output row comes out sorted.
  for (Index i = 0; i < a.n_rows; ++i) {
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const Index slot = fill[a.col_indices[k]]++;
      t.col_indices[slot] = i;
      t.values[slot] = a.values[k];
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sparse-sparse products

SpGemmPlan::SpGemmPlan(const SparseMatrix& a, const SparseMatrix& b)
    : rows_(a.n_rows), inner_(a.n_cols), cols_(b.n_cols), a_nnz_(a.col_indices.size()),
      b_nnz_(b.col_indices.size()) {
  require(a.n_cols == b.n_rows, "spgemm: inner dimension mismatch");
  row_offsets_.assign(rows_ + 1, 0);
  std::vector<Index> marker(cols_, -1);
  std::vector<Index> row;
  for (Index i = 0; i < rows_; ++i) {
    row.clear();
    for (Index ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const Index k = a.col_indices[ka];
      for (Index kb = b.row_offsets[k]; kb < b.row_offsets[k + 1]; ++kb) {
        const Index j = b.col_indices[kb];
        if (marker[j] != i) {
          marker[j] = i;
          row.push_back(j);
        }
      }
    }
    std::sort(row.begin(), row.end());
    col_indices_.insert(col_indices_.end(), row.begin(), row.end());
    row_offsets_[i + 1] = static_cast<Index>(col_indices_.size());
  }
}

bool SpGemmPlan::matches(const SparseMatrix& a, const SparseMatrix& b) const {
  return a.n_rows == rows_ && a.n_cols == inner_ && b.n_cols == cols_ &&
         a.col_indices.size() == a_nnz_ && b.col_indices.size() == b_nnz_;
}

void SpGemmPlan::multiply(const SparseMatrix& a, const SparseMatrix& b, SparseMatrix& c) const {
  require(matches(a, b), "spgemm: operands do not match the cached plan");
  if (c.n_rows != rows_ || c.n_cols != cols_ || c.col_indices.size() != col_indices_.size()) {
    c = SparseMatrix(rows_, cols_);
    c.row_offsets = row_offsets_;
    c.col_indices = col_indices_;
    c.values.assign(col_indices_.size(), 0.0);
  }
  std::vector<Index> slot(cols_, -1);
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      slot[col_indices_[k]] = k;
      c.values[k] = 0.0;
    }
    for (Index ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const Index k = a.col_indices[ka];
      const double av = a.values[ka];
      for (Index kb = b.row_offsets[k]; kb < b.row_offsets[k + 1]; ++kb)
        c.values[slot[b.col_indices[kb]]] += av * b.values[kb];
    }
  }
}

SparseMatrix SpGemmPlan::multiply(const SparseMatrix& a, const SparseMatrix& b) const {
  SparseMatrix c;
  multiply(a, b, c);
  return c;
}

GalerkinPlan::GalerkinPlan(const SparseMatrix& p, const SparseMatrix& a) : p_(p), pt_(transpose(p)) {
  require(a.square(), "galerkin: A must be square");
  require(p.n_rows == a.n_rows, "galerkin: P rows != A size");
  ap_plan_ = SpGemmPlan(a, p_);
  ap_ = ap_plan_.multiply(a, p_);
  ptap_plan_ = SpGemmPlan(pt_, ap_);
}

void GalerkinPlan::apply(const SparseMatrix& a, SparseMatrix& coarse) {
  require(a.n_rows == p_.n_rows && a.square(), "galerkin: dimension mismatch");
  ap_plan_.multiply(a, p_, ap_);
  ptap_plan_.multiply(pt_, ap_, coarse);
  // Average mirrored entries so the coarse operator is exactly symmetric. The
  // coarse pattern is symmetric whenever A's is.
  const Index m = coarse.n_rows;
  for (Index i = 0; i < m; ++i) {
    for (Index k = coarse.row_offsets[i]; k < coarse.row_offsets[i + 1]; ++k) {
      const Index j = coarse.col_indices[k];
      if (j <= i) continue;
      const auto cols = coarse.row_cols(j);
      const auto it = std::lower_bound(cols.begin(), cols.end(), i);
      if (it == cols.end() || *it != i) continue;
      const Index kt = coarse.row_offsets[j] + static_cast<Index>(it - cols.begin());
      const double avg = 0.5 * (coarse.values[k] + coarse.values[kt]);
      coarse.values[k] = avg;
      coarse.values[kt] = avg;
    }
  }
}

SparseMatrix GalerkinPlan::apply(const SparseMatrix& a) {
  SparseMatrix c;
  apply(a, c);
  return c;
}

SparseMatrix galerkin_product(const SparseMatrix& p, const SparseMatrix& a) {
  require(a.square(), "galerkin_product: A must be square");
  require(p.n_rows == a.n_rows, "galerkin_product: P rows != A size");
  GalerkinPlan plan(p, a);
  return plan.apply(a);
}

// ---------------------------------------------------------------------------
// Dense

void DenseSymmetricSolver::factor(const DenseBlock& a) {
  require(a.rows == a.cols, "dense_solve: matrix not square");
  n_ = a.rows;
  lu_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  pivots_.assign(n_, 0);
  if (n_ == 0) {
    rcond_ = 1.0;
    return;
  }
  double anorm = 0.0;
  for (Index j = 0; j < n_; ++j) {
    double col = 0.0;
    for (Index i = 0; i < n_; ++i) {
      lu_[static_cast<std::size_t>(j) * n_ + i] = a(i, j);
      col += std::abs(a(i, j));
    }
    anorm = std::max(anorm, col);
  }
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n_, lu_.data(), n_, pivots_.data());
  if (info > 0) throw SingularMatrixError("dense_solve: zero pivot, matrix is rank deficient");
  if (info < 0) throw std::invalid_argument("dense_solve: invalid argument to dsytrf");
  info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n_, lu_.data(), n_, pivots_.data(), anorm, &rcond_);
  if (info != 0) throw std::runtime_error("dense_solve: dsycon failed");
  if (!(rcond_ > std::numeric_limits<double>::epsilon()))
    throw SingularMatrixError("dense_solve: matrix singular to working precision (rcond " +
                              std::to_string(rcond_) + ")");
}

void DenseSymmetricSolver::solve(std::span<const double> b, std::span<double> x) const {
  require(b.size() == static_cast<std::size_t>(n_) && x.size() == b.size(),
          "dense_solve: rhs length mismatch");
  if (n_ == 0) return;
  std::copy(b.begin(), b.end(), x.begin());
  const lapack_int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n_, 1, lu_.data(), n_,
                                         pivots_.data(), x.data(), n_);
  if (info != 0) throw std::runtime_error("dense_solve: dsytrs failed");
}

std::vector<double> DenseSymmetricSolver::solve(std::span<const double> b) const {
  std::vector<double> x(b.size());
  solve(b, x);
  return x;
}

std::vector<double> dense_solve(const DenseBlock& a, std::span<const double> b) {
  require(b.size() == static_cast<std::size_t>(a.rows), "dense_solve: rhs length mismatch");
  DenseSymmetricSolver solver(a);
  return solver.solve(b);
}

namespace {

// Removes the components of v along the first `count` columns of q, twice.
void orthogonalize(const DenseBlock& q, std::span<const Index> cols, std::vector<double>& v,
                   std::vector<double>* coeffs) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Index c : cols) {
      double s = 0.0;
      for (Index i = 0; i < q.rows; ++i) s += q(i, c) * v[i];
      for (Index i = 0; i < q.rows; ++i) v[i] -= s * q(i, c);
      if (coeffs) (*coeffs)[c] += s;
    }
  }
}

}  // namespace

QrResult thin_qr(const DenseBlock& b, double drop_tol) {
  const Index m = b.rows, n = b.cols;
  require(m >= n, "thin_qr: requires rows >= cols");
  QrResult out{DenseBlock(m, n), DenseBlock(n, n), std::vector<bool>(n, false)};
  std::vector<Index> kept;
  std::vector<double> v(m), coeffs(n);
  for (Index c = 0; c < n; ++c) {
    double orig = 0.0;
    for (Index i = 0; i < m; ++i) {
      v[i] = b(i, c);
      orig += v[i] * v[i];
    }
    orig = std::sqrt(orig);
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    orthogonalize(out.q, kept, v, &coeffs);
    const double rem = norm2(v);
    for (Index j : kept) out.r(j, c) = coeffs[j];
    if (orig == 0.0 || rem <= drop_tol * orig) {
      out.dependent[c] = true;
      continue;
    }
    out.r(c, c) = rem;
    for (Index i = 0; i < m; ++i) out.q(i, c) = v[i] / rem;
    kept.push_back(c);
  }
  // Complete the basis for dependent columns.
  for (Index c = 0; c < n; ++c) {
    if (!out.dependent[c]) continue;
    double best = -1.0;
    std::vector<double> best_v;
    for (Index e = 0; e < m; ++e) {
      std::fill(v.begin(), v.end(), 0.0);
      v[e] = 1.0;
      orthogonalize(out.q, kept, v, nullptr);
      const double nv = norm2(v);
      if (nv > best) {
        best = nv;
        best_v = v;
      }
    }
    for (Index i = 0; i < m; ++i) out.q(i, c) = best_v[i] / best;
    kept.push_back(c);
  }
  return out;
}

double power_method_lmax(const SparseMatrix& a, int iters, std::uint64_t seed) {
  require(a.square(), "power_method_lmax: matrix not square");
  const Index n = a.n_rows;
  if (n == 0) return 0.0;
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
  double nx = norm2(x);
  if (nx == 0.0) return 0.0;
  for (auto& xi : x) xi /= nx;
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    spmv(a, x, y);
    lambda = dot(x, y);
    const double ny = norm2(y);
    if (ny == 0.0) return 0.0;
    for (Index i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  spmv(a, x, y);
  lambda = dot(x, y);
  return lambda;
}

double power_method_lmax_jacobi(const SparseMatrix& a, std::span<const double> diag, int iters,
                                std::uint64_t seed) {
  require(a.square() && diag.size() == static_cast<std::size_t>(a.n_rows),
          "power_method_lmax_jacobi: dimension mismatch");
  const Index n = a.n_rows;
  if (n == 0) return 0.0;
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
  auto rayleigh = [&] {
    spmv(a, x, y);
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < n; ++i) {
      num += x[i] * y[i];
      den += x[i] * diag[i] * x[i];
    }
    return den > 0.0 ? num / den : 0.0;
  };
  for (int it = 0; it < iters; ++it) {
    spmv(a, x, y);
    double ny = 0.0;
    for (Index i = 0; i < n; ++i) {
      y[i] /= diag[i];
      ny += y[i] * y[i];
    }
    ny = std::sqrt(ny);
    if (ny == 0.0) return 0.0;
    for (Index i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  return rayleigh();
}

// ---------------------------------------------------------------------------
// Matrix Market

void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.n_rows << ' ' << a.n_cols << ' ' << a.nnz() << '\n';
  const auto old = os.precision(17);
  for (Index i = 0; i < a.n_rows; ++i)
    for (Index k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      os << i + 1 << ' ' << a.col_indices[k] + 1 << ' ' << a.values[k] << '\n';
  os.precision(old);
}

SparseMatrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("matrix market: empty input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(), ::tolower);
  if (banner != "%%MatrixMarket" || format != "coordinate")
    throw std::invalid_argument("matrix market: only coordinate format is supported");
  if (symmetry != "general" && symmetry != "symmetric")
    throw std::invalid_argument("matrix market: unsupported symmetry '" + symmetry + "'");
  const bool sym = symmetry == "symmetric";
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream sizes(line);
  long rows = 0, cols = 0, entries = 0;
  if (!(sizes >> rows >> cols >> entries)) throw std::invalid_argument("matrix market: bad size line");
  std::vector<Index> ri, ci;
  std::vector<double> v;
  for (long e = 0; e < entries; ++e) {
    long i = 0, j = 0;
    double x = 0.0;
    if (!(is >> i >> j >> x)) throw std::invalid_argument("matrix market: truncated entries");
    ri.push_back(static_cast<Index>(i - 1));
    ci.push_back(static_cast<Index>(j - 1));
    v.push_back(x);
    if (sym && i != j) {
      ri.push_back(static_cast<Index>(j - 1));
      ci.push_back(static_cast<Index>(i - 1));
      v.push_back(x);
    }
  }
  return SparseMatrix::from_triplets(static_cast<Index>(rows), static_cast<Index>(cols), ri, ci, v);
}

}  // namespace mgpbd
