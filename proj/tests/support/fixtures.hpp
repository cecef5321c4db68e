#pragma once

#include "mgpbd/constraints.hpp"
#include "mgpbd/scenes.hpp"
#include "mgpbd/sparse.hpp"

namespace fixture {

/// Dual system of a scene at its initial state with lambda = 0.
inline mgpbd::SparseMatrix scene_system(const mgpbd::SceneDef& scene) {
  mgpbd::ParticleState state = mgpbd::make_state(scene);
  mgpbd::ConstraintSet cs = mgpbd::make_constraints(scene);
  mgpbd::eval_constraints(state, cs);
  return mgpbd::assemble_system(cs, state.inv_mass, mgpbd::build_pattern(cs, state.size()));
}

/// Cloth dual system after `frames` MGPBD frames of the hanging scene.
inline mgpbd::SparseMatrix cloth_system(mgpbd::Index n, mgpbd::ClothEdges edges, int frames = 0) {
  mgpbd::SceneDef s = mgpbd::build_cloth(n, 1.0 / static_cast<double>(n), 0.1, edges);
  if (frames == 0) return scene_system(s);
  s.sim.maxiter = 20;
  mgpbd::Simulation sim = mgpbd::make_simulation(s);
  for (int f = 0; f < frames; ++f) sim.step();
  return sim.system();
}

}  // namespace fixture
