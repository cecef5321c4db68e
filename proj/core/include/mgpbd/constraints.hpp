#pragma once

#include "mgpbd/sparse.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace mgpbd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Simulated vertices. Pinned vertices carry inv_mass == 0 exactly.
struct ParticleState {
  std::vector<Vec3> x;       // current positions (m)
  std::vector<Vec3> x_pred;  // predicted positions after the explicit step (m)
  std::vector<Vec3> x_old;   // positions at the start of the step (m)
  std::vector<Vec3> v;       // velocities (m/s)
  std::vector<double> inv_mass;

  ParticleState() = default;
  explicit ParticleState(std::size_t n)
      : x(n, Vec3::Zero()), x_pred(n, Vec3::Zero()), x_old(n, Vec3::Zero()), v(n, Vec3::Zero()),
        inv_mass(n, 1.0) {}

  [[nodiscard]] std::size_t size() const { return x.size(); }
  /// Throws std::invalid_argument on mismatched lengths or negative inverse masses.
  void validate() const;
};

enum class ConstraintKind : std::uint8_t { distance, arap };

/// Per-constraint arity: 2 vertices for distance, 4 for ARAP tetrahedra.
constexpr int arity(ConstraintKind k) { return k == ConstraintKind::distance ? 2 : 4; }

/// Edges shorter than this have no defined direction.
inline constexpr double kDegenerateLength = 1e-12;

struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::distance;
  std::vector<Index> topology;      // arity(kind) vertex ids per constraint
  std::vector<double> rest_length;  // distance only
  std::vector<Mat3> rest_inv;       // ARAP only: inverse of the rest edge matrix
  std::vector<double> rest_volume;  // ARAP only
  std::vector<double> alpha_tilde;  // compliance / dt^2
  std::vector<double> lambda;
  std::vector<double> c;            // evaluated values
  std::vector<Vec3> grads;          // arity(kind) gradients per constraint
  std::vector<std::uint8_t> degenerate;

  [[nodiscard]] int arity() const { return mgpbd::arity(kind); }
  [[nodiscard]] Index size() const {
    return static_cast<Index>(topology.size() / static_cast<std::size_t>(arity()));
  }
  [[nodiscard]] std::span<const Index> vertices(Index j) const {
    return {topology.data() + static_cast<std::size_t>(j) * arity(), static_cast<std::size_t>(arity())};
  }

  /// Allocates lambda/c/grads/degenerate to match the topology and zeroes lambda.
  void resize_state();
  /// Throws std::invalid_argument when per-constraint arrays disagree or rest data is invalid.
  void validate(std::size_t n_vertices) const;

  static ConstraintSet distance(std::vector<Index> edges, const std::vector<Vec3>& rest_positions);
  /// Tetrahedra must be positively oriented in `rest_positions`.
  static ConstraintSet arap(std::vector<Index> tets, const std::vector<Vec3>& rest_positions);
};

/// Fixed structure of the dual system matrix: entry (i, j) exists iff
/// constraints i and j share a vertex. Each row lists off-diagonals ascending,
/// then the diagonal.
struct SparsityPattern {
  Index n = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> col_indices;
  /// For stored entry k, shared_offsets[k]..shared_offsets[k+1] index `shared`.
  std::vector<Index> shared_offsets{0};
  /// Shared vertex plus its local slot in constraint i and in constraint j.
  struct Shared {
    Index vertex;
    std::uint8_t slot_i;
    std::uint8_t slot_j;
  };
  std::vector<Shared> shared;

  [[nodiscard]] Index nnz() const { return static_cast<Index>(col_indices.size()); }
};

// ---------------------------------------------------------------------------

void eval_distance(const ParticleState& state, ConstraintSet& cs);
void eval_arap(const ParticleState& state, ConstraintSet& cs);
/// Dispatches on cs.kind.
void eval_constraints(const ParticleState& state, ConstraintSet& cs);

/// Rotation factor of the polar decomposition, det(R) = +1. Returns identity for F = 0.
Mat3 polar_rotation(const Mat3& f);

SparsityPattern build_pattern(const ConstraintSet& cs, std::size_t n_vertices);

/// Fresh matrix with the pattern's structure and zero values.
SparseMatrix allocate_system(const SparsityPattern& pattern);

/// A = grad C M^{-1} grad C^T + alpha_tilde, written into a matrix allocated by
/// allocate_system(pattern). Only values change.
void assemble_system(const ConstraintSet& cs, std::span<const double> inv_mass,
                     const SparsityPattern& pattern, SparseMatrix& a);
SparseMatrix assemble_system(const ConstraintSet& cs, std::span<const double> inv_mass,
                             const SparsityPattern& pattern);

/// b = -C - alpha_tilde * lambda
std::vector<double> rhs(const ConstraintSet& cs);
void rhs(const ConstraintSet& cs, std::span<double> b);

/// dx = M^{-1} grad C^T dlambda, one 3-vector per vertex.
std::vector<Vec3> apply_dx(const ConstraintSet& cs, std::span<const double> inv_mass,
                           std::span<const double> dlambda);
void apply_dx(const ConstraintSet& cs, std::span<const double> inv_mass,
              std::span<const double> dlambda, std::span<Vec3> dx);

/// alpha_tilde = 1 / (mu * V * dt^2). Throws std::invalid_argument on non-positive input.
double make_compliance(double mu, double volume, double dt);

}  // namespace mgpbd
