#include "mgpbd/sim.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace mgpbd {

std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::mgpbd: return "mgpbd";
    case SolverKind::xpbd_jacobi: return "xpbd_jacobi";
    case SolverKind::pcg_jacobi: return "pcg_jacobi";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(std::string_view s) {
  if (s == "mgpbd") return SolverKind::mgpbd;
  if (s == "xpbd_jacobi" || s == "xpbd") return SolverKind::xpbd_jacobi;
  if (s == "pcg_jacobi") return SolverKind::pcg_jacobi;
  throw std::invalid_argument("unknown solver '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  auto require = [](bool c, const char* what) {
    if (!c) throw std::invalid_argument(what);
  };
  require(dt > 0.0, "dt must be positive");
  require(frames >= 0, "frames must be >= 0");
  require(maxiter >= 0, "maxiter must be >= 0");
  require(tol >= 0.0, "tol must be >= 0");
  require(omega_relax > 0.0 && omega_relax <= 1.0, "omega must lie in (0, 1]");
  require(omega_min > 0.0 && omega_min <= omega_relax, "omega_min must lie in (0, omega]");
  require(setup_interval >= 1, "setup_interval must be >= 1");
  require(xpbd_relax > 0.0 && xpbd_relax <= 1.0, "xpbd_relax must lie in (0, 1]");
  require(pcg_tol > 0.0 && pcg_maxiter >= 1, "pcg_tol must be positive and pcg_maxiter >= 1");
  require(damping >= 0.0 && damping <= 1.0, "damping must lie in [0, 1]");
  require(!time_budget || *time_budget > 0.0, "time_budget must be positive");
}

void semi_euler(ParticleState& state, double dt, const Vec3& gravity) {
  for (std::size_t i = 0; i < state.size(); ++i) {
    state.x_old[i] = state.x[i];
    if (state.inv_mass[i] == 0.0) {
      state.v[i].setZero();
    } else {
      state.v[i] += dt * gravity;
      state.x[i] += dt * state.v[i];
    }
    state.x_pred[i] = state.x[i];
  }
}

double backtrack_relax(double residual_prev, double residual_new, double omega, double omega_min) {
  if (residual_new > residual_prev) return std::max(0.5 * omega, omega_min);
  return omega;
}

std::vector<Contact> project_collisions(ParticleState& state, std::span<const SdfCollider> colliders) {
  std::vector<Contact> contacts;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.inv_mass[i] == 0.0) continue;
    for (const SdfCollider& c : colliders) {
      const SdfSample s = sdf_eval(c, state.x[i]);
      if (s.distance < 0.0) {
        state.x[i] -= s.distance * s.gradient;
        contacts.push_back({static_cast<Index>(i), s.gradient});
      }
    }
  }
  return contacts;
}

void reflect_normal_velocity(ParticleState& state, std::span<const Contact> contacts) {
  for (const Contact& c : contacts) {
    Vec3& v = state.v[c.vertex];
    const double vn = v.dot(c.normal);
    if (vn < 0.0) v -= 2.0 * vn * c.normal;
  }
}

void collide_sdf(ParticleState& state, std::span<const SdfCollider> colliders) {
  const auto contacts = project_collisions(state, colliders);
  reflect_normal_velocity(state, contacts);
}

// ---------------------------------------------------------------------------

Simulation::Simulation(ParticleState state, ConstraintSet constraints, SimConfig cfg,
                       std::vector<SdfCollider> colliders)
    : state_(std::move(state)), cs_(std::move(constraints)), cfg_(std::move(cfg)),
      colliders_(std::move(colliders)) {
  state_.validate();
  cfg_.validate();
  if (cs_.lambda.size() != static_cast<std::size_t>(cs_.size())) cs_.resize_state();
  cs_.validate(state_.size());
  pattern_ = build_pattern(cs_, state_.size());
  a_ = allocate_system(pattern_);
  b_.assign(cs_.size(), 0.0);
}

FrameStats Simulation::step() { return step(cfg_.maxiter); }

void Simulation::xpbd_update(std::vector<double>& dlambda) {
  const Index m = cs_.size();
  const int ar = cs_.arity();
  for (Index j = 0; j < m; ++j) {
    const auto verts = cs_.vertices(j);
    const Vec3* g = &cs_.grads[static_cast<std::size_t>(j) * ar];
    double d = cs_.alpha_tilde[j];
    for (int s = 0; s < ar; ++s) d += state_.inv_mass[verts[s]] * g[s].squaredNorm();
    dlambda[j] = d > 0.0 ? b_[j] / d : 0.0;
  }
}

void Simulation::solve_global(std::vector<double>& dlambda, FrameStats& stats, int it) {
  assemble_system(cs_, state_.inv_mass, pattern_, a_);
  SolveReport report;
  try {
    if (cfg_.solver == SolverKind::mgpbd) {
      const bool due = it == 0 && frame_ % cfg_.setup_interval == 0;
      if (!hierarchy_ || stale_ || due) {
        AmgConfig amg = cfg_.amg;
        amg.seed = cfg_.seed;
        amg.smoother.seed = cfg_.seed;
        hierarchy_ = build_hierarchy(a_, amg);
        hierarchy_->frame_built = frame_;
        stale_ = false;
        stats.setup_performed = true;
      } else {
        refresh_operators(*hierarchy_, a_);
      }
      dlambda = mgpcg(*hierarchy_, a_, b_, cfg_.pcg_tol, cfg_.pcg_maxiter, report);
    } else {
      dlambda = jacobi_pcg(a_, b_, cfg_.pcg_tol, cfg_.pcg_maxiter, report);
    }
  } catch (const std::exception& e) {
    throw SolverAbort("frame " + std::to_string(frame_) + ", iteration " + std::to_string(it) + ": " +
                      e.what());
  }
  stats.pcg_iterations += report.iterations;
  stats.flops += report.flops;
  if (cfg_.record_pcg) stats.pcg_reports.push_back(std::move(report));
}

FrameStats Simulation::step(int maxiter) {
  const auto t0 = std::chrono::steady_clock::now();
  FrameStats stats;
  stats.frame = frame_;

  semi_euler(state_, cfg_.dt, cfg_.gravity);
  std::fill(cs_.lambda.begin(), cs_.lambda.end(), 0.0);

  const std::size_t nv = state_.size();
  const Index m = cs_.size();
  const bool global = cfg_.solver != SolverKind::xpbd_jacobi;
  double omega = cfg_.omega_relax;
  std::vector<double> dlambda(m, 0.0), lambda_prev;
  std::vector<Vec3> dx(nv), x_prev;
  bool have_step = false;
  double r0 = 0.0;

  for (int it = 0;; ++it) {
    eval_constraints(state_, cs_);
    rhs(cs_, b_);
    const double r = norm2(b_);
    if (it == 0) r0 = r;
    const double rel = r0 > 0.0 ? r / r0 : 0.0;

    if (global && cfg_.backtracking && have_step && rel > stats.residual_history.back()) {
      if (omega > cfg_.omega_min && it < maxiter) {
        // Reject the step and retry it with half the relaxation.
        omega = backtrack_relax(stats.residual_history.back(), rel, omega, cfg_.omega_min);
        for (std::size_t i = 0; i < nv; ++i) state_.x[i] = x_prev[i] + omega * dx[i];
        ++stats.iterations_used;
        continue;
      }
      // Out of retries: fall back to the last accepted iterate.
      state_.x = x_prev;
      cs_.lambda = lambda_prev;
      eval_constraints(state_, cs_);
      rhs(cs_, b_);
      break;
    }
    stats.residual_history.push_back(rel);

    const bool budget_out =
        !cfg_.deterministic && cfg_.time_budget &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > *cfg_.time_budget;
    if (rel <= cfg_.tol || r == 0.0 || it >= maxiter || budget_out) break;

    if (global) {
      solve_global(dlambda, stats, it);
      apply_dx(cs_, state_.inv_mass, dlambda, dx);
      x_prev = state_.x;
      lambda_prev = cs_.lambda;
      for (Index j = 0; j < m; ++j) cs_.lambda[j] += dlambda[j];
      for (std::size_t i = 0; i < nv; ++i) state_.x[i] += omega * dx[i];
      have_step = true;
    } else {
      xpbd_update(dlambda);
      apply_dx(cs_, state_.inv_mass, dlambda, dx);
      const double w = cfg_.xpbd_relax;
      for (Index j = 0; j < m; ++j) cs_.lambda[j] += w * dlambda[j];
      for (std::size_t i = 0; i < nv; ++i) state_.x[i] += w * dx[i];
      stats.flops += 30.0 * m * cs_.arity();
    }
    ++stats.iterations_used;
  }
  stats.final_rel_dual_residual = stats.residual_history.back();
  stats.omega_final = global ? omega : cfg_.xpbd_relax;

  const auto contacts = project_collisions(state_, colliders_);
  for (std::size_t i = 0; i < nv; ++i) state_.v[i] = (state_.x[i] - state_.x_old[i]) / cfg_.dt;
  reflect_normal_velocity(state_, contacts);
  if (cfg_.damping != 1.0)
    for (auto& v : state_.v) v *= cfg_.damping;

  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ++frame_;
  return stats;
}

}  // namespace mgpbd
