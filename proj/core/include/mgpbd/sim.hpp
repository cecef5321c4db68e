#pragma once

#include "mgpbd/amg_solve.hpp"
#include "mgpbd/constraints.hpp"
#include "mgpbd/sdf.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mgpbd {

enum class SolverKind : std::uint8_t {
  mgpbd,        // global dual solve with AMG-preconditioned CG
  xpbd_jacobi,  // diagonal-only XPBD update, Jacobi style
  pcg_jacobi,   // global dual solve with diagonally preconditioned CG
};

std::string_view to_string(SolverKind k);
SolverKind solver_kind_from_string(std::string_view s);

struct SimConfig {
  double dt = 0.01;
  long frames = 1;
  int maxiter = 50;
  /// Wall-clock budget per frame in seconds; ignored in deterministic mode.
  std::optional<double> time_budget;
  bool deterministic = true;
  /// Stop once ||b|| <= tol * ||b_0||.
  double tol = 1e-4;
  double omega_relax = 0.1;
  bool backtracking = true;
  double omega_min = 1e-3;
  int setup_interval = 20;
  SolverKind solver = SolverKind::mgpbd;
  Vec3 gravity{0.0, -9.8, 0.0};
  std::uint64_t seed = 0;
  /// Uniform velocity scale after each frame; 1 disables damping.
  double damping = 1.0;
  /// Under-relaxation of the Jacobi-style XPBD update.
  double xpbd_relax = 0.5;
  /// Inner linear solve of the global solvers.
  double pcg_tol = 1e-3;
  int pcg_maxiter = 100;
  AmgConfig amg{};
  /// Keep every inner SolveReport in FrameStats.
  bool record_pcg = false;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct FrameStats {
  long frame = 0;
  int iterations_used = 0;
  double final_rel_dual_residual = 0.0;
  bool setup_performed = false;
  double wall_time = 0.0;
  /// Relative dual residual of each accepted iterate, starting with 1.
  std::vector<double> residual_history;
  double omega_final = 0.0;
  long pcg_iterations = 0;
  double flops = 0.0;
  std::vector<SolveReport> pcg_reports;
};

/// Raised when the inner solver aborts; the message names the frame and iteration.
class SolverAbort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Explicit prediction: v += dt g for free vertices, x_old <- x, x <- x_pred <- x + dt v.
void semi_euler(ParticleState& state, double dt, const Vec3& gravity);

/// Halves omega when the residual grew, never going below omega_min.
double backtrack_relax(double residual_prev, double residual_new, double omega, double omega_min = 1e-3);

struct Contact {
  Index vertex;
  Vec3 normal;
};

/// Moves free vertices with negative distance onto the collider surface.
std::vector<Contact> project_collisions(ParticleState& state, std::span<const SdfCollider> colliders);
/// Reflects the inward normal velocity of the contacted vertices.
void reflect_normal_velocity(ParticleState& state, std::span<const Contact> contacts);
/// Projection followed by velocity reflection.
void collide_sdf(ParticleState& state, std::span<const SdfCollider> colliders);

/// Owns one simulated body and steps it frame by frame.
class Simulation {
public:
  Simulation(ParticleState state, ConstraintSet constraints, SimConfig cfg,
             std::vector<SdfCollider> colliders = {});

  /// Advances one frame with cfg.solver. Throws SolverAbort on inner solver failure.
  FrameStats step();
  /// Runs a frame with an explicit iteration cap, leaving the configured cap untouched.
  FrameStats step(int maxiter);

  [[nodiscard]] const ParticleState& state() const { return state_; }
  ParticleState& state() { return state_; }
  [[nodiscard]] const ConstraintSet& constraints() const { return cs_; }
  [[nodiscard]] const SparsityPattern& pattern() const { return pattern_; }
  [[nodiscard]] const SparseMatrix& system() const { return a_; }
  [[nodiscard]] const std::optional<AmgHierarchy>& hierarchy() const { return hierarchy_; }
  [[nodiscard]] const SimConfig& config() const { return cfg_; }
  SimConfig& config() { return cfg_; }
  [[nodiscard]] long frame() const { return frame_; }
  /// Dual residual b = -C - alpha_tilde lambda at the end of the last frame's loop.
  [[nodiscard]] const std::vector<double>& last_rhs() const { return b_; }
  [[nodiscard]] const std::vector<SdfCollider>& colliders() const { return colliders_; }

  /// Forces a hierarchy rebuild on the next global solve.
  void invalidate_hierarchy() { stale_ = true; }

private:
  void solve_global(std::vector<double>& dlambda, FrameStats& stats, int it);
  void xpbd_update(std::vector<double>& dlambda);

  ParticleState state_;
  ConstraintSet cs_;
  SimConfig cfg_;
  std::vector<SdfCollider> colliders_;
  SparsityPattern pattern_;
  SparseMatrix a_;
  std::optional<AmgHierarchy> hierarchy_;
  bool stale_ = true;
  long frame_ = 0;
  std::vector<double> b_;
};

}  // namespace mgpbd
