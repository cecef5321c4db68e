#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgpbd {

using Index = std::int32_t;

/// Raised when a dense factorization hits a pivot that is zero to working precision.
class SingularMatrixError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Compressed-row sparse matrix.
///
/// Two row layouts are supported. With `diag_last` unset, the columns of each
/// row are sorted ascending. With `diag_last` set, each row stores its
/// off-diagonal entries first (ascending) and the diagonal in the final slot;
/// this is the layout produced by constraint assembly so that the structure can
/// be allocated once and refilled in place.
struct SparseMatrix {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> col_indices;
  std::vector<double> values;
  bool diag_last = false;

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols) : n_rows(rows), n_cols(cols), row_offsets(rows + 1, 0) {}

  [[nodiscard]] Index nnz() const { return static_cast<Index>(col_indices.size()); }
  [[nodiscard]] bool square() const { return n_rows == n_cols; }

  [[nodiscard]] std::span<const Index> row_cols(Index i) const {
    return {col_indices.data() + row_offsets[i],
            static_cast<std::size_t>(row_offsets[i + 1] - row_offsets[i])};
  }
  [[nodiscard]] std::span<const double> row_vals(Index i) const {
    return {values.data() + row_offsets[i],
            static_cast<std::size_t>(row_offsets[i + 1] - row_offsets[i])};
  }

  /// Entry lookup, 0 when not stored. Linear in the row length.
  [[nodiscard]] double at(Index i, Index j) const;

  static SparseMatrix identity(Index n);
  /// Builds a sorted-column matrix from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(Index rows, Index cols, std::span<const Index> ri,
                                    std::span<const Index> ci, std::span<const double> v);
};

/// Throws std::invalid_argument when the structural invariants do not hold.
void validate(const SparseMatrix& a);

/// Row-major dense matrix.
struct DenseBlock {
  Index rows = 0;
  Index cols = 0;
  std::vector<double> values;

  DenseBlock() = default;
  DenseBlock(Index r, Index c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(Index i, Index j) { return values[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(Index i, Index j) const {
    return values[static_cast<std::size_t>(i) * cols + j];
  }

  static DenseBlock identity(Index n);
};

DenseBlock to_dense(const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Vector helpers. All reductions run in index order.

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// ---------------------------------------------------------------------------
// Kernels

/// y = A x, accumulating each row in storage order.
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);
void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
/// r = b - A x
void residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b,
              std::span<double> r);

/// Diagonal entries; honors both row layouts. Missing diagonals read as 0.
std::vector<double> diagonal(const SparseMatrix& a);

SparseMatrix transpose(const SparseMatrix& a);

/// Cached structure of C = A * B. The structure depends only on the patterns of
/// A and B, so the plan is reusable while both patterns stay fixed.
class SpGemmPlan {
public:
  SpGemmPlan() = default;
  SpGemmPlan(const SparseMatrix& a, const SparseMatrix& b);

  /// Recomputes the values of `c` (shaped by this plan) from current A and B values.
  void multiply(const SparseMatrix& a, const SparseMatrix& b, SparseMatrix& c) const;
  /// Returns a freshly shaped and filled product.
  [[nodiscard]] SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) const;

  [[nodiscard]] bool matches(const SparseMatrix& a, const SparseMatrix& b) const;

private:
  Index rows_ = 0, inner_ = 0, cols_ = 0;
  std::size_t a_nnz_ = 0, b_nnz_ = 0;
  std::vector<Index> row_offsets_;
  std::vector<Index> col_indices_;
};

/// Coarse operator P^T A P, computed as (P^T)(A P) with both symbolic products cached.
class GalerkinPlan {
public:
  GalerkinPlan() = default;
  GalerkinPlan(const SparseMatrix& p, const SparseMatrix& a);

  /// Updates `coarse` in place. P must be the prolongator the plan was built from.
  void apply(const SparseMatrix& a, SparseMatrix& coarse);
  [[nodiscard]] SparseMatrix apply(const SparseMatrix& a);

  [[nodiscard]] const SparseMatrix& prolongator() const { return p_; }
  [[nodiscard]] const SparseMatrix& restrictor() const { return pt_; }

private:
  SparseMatrix p_;
  SparseMatrix pt_;
  SpGemmPlan ap_plan_;
  SpGemmPlan ptap_plan_;
  SparseMatrix ap_;
};

/// P^T A P for a one-off product.
SparseMatrix galerkin_product(const SparseMatrix& p, const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Dense

/// Symmetric-indefinite (Bunch-Kaufman) factorization, kept for repeated solves.
class DenseSymmetricSolver {
public:
  DenseSymmetricSolver() = default;
  explicit DenseSymmetricSolver(const DenseBlock& a) { factor(a); }

  /// Throws SingularMatrixError on an exactly zero pivot or when the reciprocal
  /// condition estimate falls below machine epsilon.
  void factor(const DenseBlock& a);
  void solve(std::span<const double> b, std::span<double> x) const;
  [[nodiscard]] std::vector<double> solve(std::span<const double> b) const;
  [[nodiscard]] Index size() const { return n_; }
  [[nodiscard]] double rcond() const { return rcond_; }

private:
  Index n_ = 0;
  std::vector<double> lu_;   // column-major factor
  std::vector<int> pivots_;
  double rcond_ = 0.0;
};

std::vector<double> dense_solve(const DenseBlock& a, std::span<const double> b);

struct QrResult {
  DenseBlock q;  // rows x cols, orthonormal columns
  DenseBlock r;  // cols x cols, upper triangular, non-negative diagonal
  /// Column c is rank-deficient when its R diagonal is zero.
  std::vector<bool> dependent;
};

/// Thin QR by modified Gram-Schmidt with one reorthogonalization pass.
///
/// A column whose remainder after projection is at most `drop_tol` times its
/// original norm is treated as dependent: its R row is zero and its Q column is
/// filled, after all columns are processed, with the standard basis vector of
/// largest remainder against the current Q (lowest index on ties), orthogonalized
/// and normalized.
QrResult thin_qr(const DenseBlock& b, double drop_tol = 1e-10);

/// Largest-magnitude eigenvalue estimate from `iters` normalized power steps
/// starting at a seeded random vector. Returns the Rayleigh quotient.
double power_method_lmax(const SparseMatrix& a, int iters, std::uint64_t seed);

/// Largest eigenvalue of D^{-1} A for symmetric A with positive diagonal D,
/// using the generalized Rayleigh quotient x^T A x / x^T D x.
double power_method_lmax_jacobi(const SparseMatrix& a, std::span<const double> diag, int iters,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Matrix Market coordinate text

void write_matrix_market(std::ostream& os, const SparseMatrix& a);
/// Reads `coordinate real general|symmetric`; symmetric files are expanded.
SparseMatrix read_matrix_market(std::istream& is);

}  // namespace mgpbd
