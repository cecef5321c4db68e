#pragma once

#include "mgpbd/smoother.hpp"
#include "mgpbd/sparse.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mgpbd {

enum class KernelSource : std::uint8_t {
  bootstrap,  // Gauss-Seidel sweeps on A x = 0 from random starts
  ones,       // the constant vector
};

struct AmgConfig {
  Index min_coarse_size = 400;
  double theta_s = 0.1;
  int n_kernel_vecs = 6;
  int bootstrap_sweeps = 20;
  KernelSource kernel = KernelSource::bootstrap;
  int max_levels = 16;
  double stall_ratio = 0.9;
  /// Coarsest levels above this size (reachable only through the stall guard
  /// or the level cap) are smoothed instead of factored.
  Index max_direct_size = 1000;
  std::uint64_t seed = 0;
  SmootherConfig smoother{};
  /// Recompute smoother weights and polynomials on every operator refresh
  /// instead of only at setup.
  bool refresh_smoother = false;
};

struct AmgLevel {
  SparseMatrix a;
  /// Absent on the coarsest level.
  std::optional<SparseMatrix> p;
  DenseBlock b;                 // near-kernel block for this level
  std::vector<Index> agg;       // aggregate of each node (empty on the coarsest level)
  Index n_agg = 0;
  SmootherParams smoother;
  std::vector<double> inv_diag;
  GalerkinPlan galerkin;        // valid when p is set

  [[nodiscard]] Index size() const { return a.n_rows; }
};

struct AmgHierarchy {
  std::vector<AmgLevel> levels;  // finest first
  AmgConfig config;
  double operator_complexity = 1.0;
  bool stalled = false;
  std::int64_t frame_built = -1;
  DenseSymmetricSolver coarse_solver;
  /// False when the coarsest level exceeds max_direct_size.
  bool coarse_direct = true;

  [[nodiscard]] bool empty() const { return levels.empty(); }
  [[nodiscard]] Index fine_size() const { return levels.empty() ? 0 : levels.front().size(); }
};

/// Strong-connection graph: keeps off-diagonal (i, j) when
/// |A_ij| >= theta_s * sqrt(|A_ii| |A_jj|). Kept entries carry A_ij.
SparseMatrix strength_filter(const SparseMatrix& a, double theta_s);

struct Aggregation {
  std::vector<Index> agg;
  Index n_agg = 0;
};

/// Greedy aggregation over the strong graph; see docs/formats.md for the exact rules.
Aggregation aggregate(const SparseMatrix& strength);

/// `sweeps` Gauss-Seidel sweeps on A x = 0 for each of k seeded random starts.
/// A column that collapses to (numerically) zero is replaced by the constant vector.
DenseBlock bootstrap_near_kernel(const SparseMatrix& a, int k, int sweeps, std::uint64_t seed);

/// Constant-ones block with k identical columns.
DenseBlock ones_kernel(Index n, int k);

struct Prolongation {
  SparseMatrix p;
  DenseBlock b_next;
  /// First coarse column of each aggregate; aggregate a owns columns [offset[a], offset[a+1]).
  std::vector<Index> offsets;
};

/// Injects B into per-aggregate blocks orthonormalized by thin QR. Rank-deficient
/// columns of an aggregate's block are dropped, so an aggregate contributes
/// between 1 and k coarse unknowns.
Prolongation build_prolongator(std::span<const Index> agg, Index n_agg, const DenseBlock& b);

/// Full setup: filter, aggregate, inject and Galerkin-coarsen until the level is
/// smaller than min_coarse_size (or coarsening stalls or hits max_levels), then
/// compute smoother parameters and factor the coarsest operator.
/// Throws std::invalid_argument if A0 is not square.
AmgHierarchy build_hierarchy(const SparseMatrix& a0, const AmgConfig& cfg);

/// Per-level size/nnz table plus operator complexity.
void write_hierarchy_report(std::ostream& os, const AmgHierarchy& h);

}  // namespace mgpbd
