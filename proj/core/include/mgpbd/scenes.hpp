#pragma once

#include "mgpbd/constraints.hpp"
#include "mgpbd/sdf.hpp"
#include "mgpbd/sim.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgpbd {

/// Parse failure in a scene or mesh file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

private:
  int line_;
};

struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 4>> tets;
};

enum class TetSplit : std::uint8_t { five, six };

/// Edge sets of a cloth grid: grid lines only, or grid lines plus both diagonals of every quad.
enum class ClothEdges : std::uint8_t { structural, shear };

/// Layout of the distance constraints of a regular cloth grid:
/// [horizontal | vertical | diagonal] edges, each family row-major.
struct ClothGrid {
  Index n = 0;  // quads per side
  ClothEdges edges = ClothEdges::shear;
  [[nodiscard]] Index horizontal_begin() const { return 0; }
  [[nodiscard]] Index vertical_begin() const { return n * (n + 1); }
  [[nodiscard]] Index diagonal_begin() const { return 2 * n * (n + 1); }
  [[nodiscard]] Index edge_count() const {
    return 2 * n * (n + 1) + (edges == ClothEdges::shear ? 2 * n * n : 0);
  }
  [[nodiscard]] Index vertex(Index row, Index col) const { return row * (n + 1) + col; }
};

struct SceneDef {
  std::string name;
  /// Rest positions; the simulation starts here unless `initial` is set.
  std::vector<Vec3> positions;
  std::optional<std::vector<Vec3>> initial;
  std::vector<double> masses;
  ConstraintKind kind = ConstraintKind::distance;
  std::vector<Index> elements;  // edges (2 per) or tetrahedra (4 per)
  std::vector<Index> pins;
  /// Pa for ARAP (compliance 1/(mu V)); N/m for distance constraints (compliance 1/k).
  double stiffness = 1e9;
  /// kg/m^3 for solids, kg/m^2 for cloth.
  double density = 1000.0;
  std::vector<SdfCollider> colliders;
  SimConfig sim;
  std::optional<ClothGrid> grid;
  /// Triangles for mesh export.
  std::vector<std::array<Index, 3>> surface;

  /// Throws std::invalid_argument on invalid pins, duplicate constraints or non-positive volumes.
  void validate() const;
};

/// (N+1)^2 particles in the x-z plane, row 0 at z = 0, with the two corners of
/// row 0 pinned and uniform masses. `shear` adds both diagonals of every quad.
SceneDef build_cloth(Index n, double spacing, double areal_density = 0.1, ClothEdges edges = ClothEdges::shear);

/// nx*ny*nz cubic cells split into tetrahedra.
TetMesh build_lattice(Index nx, Index ny, Index nz, double spacing, TetSplit split = TetSplit::six,
                      const Vec3& origin = Vec3::Zero());

/// Cantilever beam along +x with the x = 0 face pinned.
SceneDef build_beam(Index nx, Index ny, Index nz, double spacing, TetSplit split = TetSplit::six,
                    double density = 1000.0);

/// Solid scene from a tetrahedral mesh with lumped masses (density * V / 4 per vertex).
SceneDef scene_from_mesh(const TetMesh& mesh, double density, std::string name = "mesh");

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
std::vector<double> lumped_masses(const TetMesh& mesh, double density);
/// Boundary triangles (faces used by exactly one tetrahedron), outward oriented.
std::vector<std::array<Index, 3>> boundary_faces(const TetMesh& mesh);

/// Node/element text format:
///   nodes <N>           then N lines `<id> x y z` with ids 0..N-1 in order
///   tets <M>            then M lines `<id> a b c d`
/// `#` starts a comment. Inverted tetrahedra are repaired by swapping two
/// vertices; degenerate ones are dropped with a warning on `warn`.
TetMesh read_tet_mesh(std::istream& is, std::ostream* warn = nullptr);
TetMesh load_tet_mesh(const std::filesystem::path& path, std::ostream* warn = nullptr);
void write_tet_mesh(std::ostream& os, const TetMesh& mesh);

/// Particle state and constraints with compliance from stiffness and sim.dt.
ParticleState make_state(const SceneDef& scene);
ConstraintSet make_constraints(const SceneDef& scene);
Simulation make_simulation(const SceneDef& scene);

/// Names accepted by preset().
std::vector<std::string> preset_names();
/// Throws std::invalid_argument for unknown names.
SceneDef preset(const std::string& name);

/// Key-value scene file; see docs/formats.md. Relative mesh paths resolve
/// against `base_dir`.
SceneDef parse_scene(std::istream& is, const std::filesystem::path& base_dir = {});
SceneDef load_scene(const std::filesystem::path& path);

}  // namespace mgpbd
