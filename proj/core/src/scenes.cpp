#include "mgpbd/scenes.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace mgpbd {

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

void SceneDef::validate() const {
  auto require = [this](bool c, const std::string& what) {
    if (!c) throw std::invalid_argument("scene '" + name + "': " + what);
  };
  const auto n = static_cast<Index>(positions.size());
  require(masses.size() == positions.size(), "mass count differs from vertex count");
  for (double m : masses) require(m > 0.0, "non-positive vertex mass");
  for (Index p : pins) require(p >= 0 && p < n, "pin index " + std::to_string(p) + " out of range");
  const int ar = arity(kind);
  require(elements.size() % static_cast<std::size_t>(ar) == 0, "element list length not a multiple of arity");
  std::set<std::vector<Index>> seen;
  for (std::size_t e = 0; e < elements.size(); e += ar) {
    std::vector<Index> key(elements.begin() + e, elements.begin() + e + ar);
    for (Index v : key) require(v >= 0 && v < n, "element vertex out of range");
    if (kind == ConstraintKind::arap)
      require(tet_volume(positions[key[0]], positions[key[1]], positions[key[2]], positions[key[3]]) > 0.0,
              "non-positive tetrahedron volume");
    std::sort(key.begin(), key.end());
    require(std::adjacent_find(key.begin(), key.end()) == key.end(), "element repeats a vertex");
    require(seen.insert(key).second, "duplicate constraint");
  }
  require(stiffness > 0.0, "stiffness must be positive");
  require(!initial || initial->size() == positions.size(), "initial position count differs from vertex count");
}

// ---------------------------------------------------------------------------
// Procedural geometry

SceneDef build_cloth(Index n, double spacing, double areal_density, ClothEdges edges) {
  if (n < 1) throw std::invalid_argument("build_cloth: N must be >= 1");
  if (!(spacing > 0.0) || !(areal_density > 0.0))
    throw std::invalid_argument("build_cloth: spacing and density must be positive");
  SceneDef s;
  s.name = "cloth" + std::to_string(n);
  s.kind = ConstraintKind::distance;
  s.density = areal_density;
  ClothGrid g{n, edges};
  s.grid = g;
  const Index side = n + 1;
  s.positions.reserve(static_cast<std::size_t>(side) * side);
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) s.positions.emplace_back(c * spacing, 0.0, r * spacing);
  const double total = areal_density * (n * spacing) * (n * spacing);
  s.masses.assign(s.positions.size(), total / static_cast<double>(s.positions.size()));

  auto& e = s.elements;
  e.reserve(2 * static_cast<std::size_t>(g.edge_count()));
  for (Index r = 0; r <= n; ++r)
    for (Index c = 0; c < n; ++c) e.insert(e.end(), {g.vertex(r, c), g.vertex(r, c + 1)});
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c <= n; ++c) e.insert(e.end(), {g.vertex(r, c), g.vertex(r + 1, c)});
  for (Index r = 0; r < n && edges == ClothEdges::shear; ++r)
    for (Index c = 0; c < n; ++c) {
      e.insert(e.end(), {g.vertex(r, c), g.vertex(r + 1, c + 1)});
      e.insert(e.end(), {g.vertex(r, c + 1), g.vertex(r + 1, c)});
    }
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      s.surface.push_back({g.vertex(r, c), g.vertex(r + 1, c), g.vertex(r + 1, c + 1)});
      s.surface.push_back({g.vertex(r, c), g.vertex(r + 1, c + 1), g.vertex(r, c + 1)});
    }
  s.pins = {g.vertex(0, 0), g.vertex(0, n)};

  s.stiffness = 1e9;
  s.sim.dt = 0.003;
  s.sim.omega_relax = 0.25;
  s.sim.maxiter = 200;
  s.sim.tol = 1e-4;
  s.sim.amg.n_kernel_vecs = 1;
  s.sim.amg.smoother.kind = SmootherKind::chebyshev;
  return s;
}

namespace {

// Corner c of a cell has offsets (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr std::array<std::array<int, 4>, 6> kSixSplit{{
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
}};
// Even cells cut off corners 1, 2, 4, 7 around the central tet {0, 3, 5, 6};
// odd cells use the mirrored split so shared faces agree.
constexpr std::array<std::array<int, 4>, 5> kFiveEven{{
    {0, 3, 5, 6}, {1, 0, 3, 5}, {2, 0, 3, 6}, {4, 0, 5, 6}, {7, 3, 5, 6},
}};
constexpr std::array<std::array<int, 4>, 5> kFiveOdd{{
    {1, 2, 4, 7}, {0, 1, 2, 4}, {3, 1, 2, 7}, {5, 1, 4, 7}, {6, 2, 4, 7},
}};

}  // namespace

TetMesh build_lattice(Index nx, Index ny, Index nz, double spacing, TetSplit split, const Vec3& origin) {
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("build_lattice: counts must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("build_lattice: spacing must be positive");
  TetMesh m;
  auto vid = [&](Index i, Index j, Index k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (Index k = 0; k <= nz; ++k)
    for (Index j = 0; j <= ny; ++j)
      for (Index i = 0; i <= nx; ++i) m.vertices.push_back(origin + spacing * Vec3(i, j, k));
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        std::array<Index, 8> c{};
        for (int b = 0; b < 8; ++b) c[b] = vid(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        auto emit = [&](const std::array<int, 4>& t) {
          std::array<Index, 4> tet{c[t[0]], c[t[1]], c[t[2]], c[t[3]]};
          if (tet_volume(m.vertices[tet[0]], m.vertices[tet[1]], m.vertices[tet[2]], m.vertices[tet[3]]) < 0.0)
            std::swap(tet[2], tet[3]);
          m.tets.push_back(tet);
        };
        if (split == TetSplit::six) {
          for (const auto& t : kSixSplit) emit(t);
        } else {
          const auto& table = (i + j + k) % 2 == 0 ? kFiveEven : kFiveOdd;
          for (const auto& t : table) emit(t);
        }
      }
  return m;
}

std::vector<double> lumped_masses(const TetMesh& mesh, double density) {
  std::vector<double> m(mesh.vertices.size(), 0.0);
  for (const auto& t : mesh.tets) {
    const double v = tet_volume(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], mesh.vertices[t[3]]);
    for (Index i : t) m[i] += 0.25 * density * v;
  }
  return m;
}

std::vector<std::array<Index, 3>> boundary_faces(const TetMesh& mesh) {
  std::map<std::array<Index, 3>, std::pair<int, std::array<Index, 3>>> faces;
  for (const auto& t : mesh.tets) {
    const std::array<std::array<Index, 3>, 4> f{{
        {t[1], t[2], t[3]}, {t[0], t[3], t[2]}, {t[0], t[1], t[3]}, {t[0], t[2], t[1]},
    }};
    for (const auto& face : f) {
      auto key = face;
      std::sort(key.begin(), key.end());
      auto& slot = faces[key];
      ++slot.first;
      slot.second = face;
    }
  }
  std::vector<std::array<Index, 3>> out;
  for (const auto& [key, val] : faces)
    if (val.first == 1) out.push_back(val.second);
  return out;
}

SceneDef scene_from_mesh(const TetMesh& mesh, double density, std::string name) {
  if (!(density > 0.0)) throw std::invalid_argument("scene_from_mesh: density must be positive");
  SceneDef s;
  s.name = std::move(name);
  s.kind = ConstraintKind::arap;
  s.density = density;
  s.positions = mesh.vertices;
  // Vertices not referenced by any tetrahedron would be massless.
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.tets) {
    s.elements.insert(s.elements.end(), t.begin(), t.end());
    for (Index i : t) used[i] = 1;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw std::invalid_argument("scene_from_mesh: mesh has vertices without tetrahedra");
  s.masses = lumped_masses(mesh, density);
  s.surface = boundary_faces(mesh);
  s.stiffness = 1e9;
  s.sim.dt = 0.01;
  s.sim.omega_relax = 0.1;
  s.sim.amg.n_kernel_vecs = 6;
  // ARAP gradients vanish at rest, so the dual matrix changes by orders of
  // magnitude within a frame and setup-time smoother weights go stale.
  s.sim.amg.refresh_smoother = true;
  // Jacobi XPBD diverges on tet meshes at 0.3 and above.
  s.sim.xpbd_relax = 0.2;
  return s;
}

SceneDef build_beam(Index nx, Index ny, Index nz, double spacing, TetSplit split, double density) {
  TetMesh mesh = build_lattice(nx, ny, nz, spacing, split);
  SceneDef s = scene_from_mesh(mesh, density, "beam");
  for (Index v = 0; v < static_cast<Index>(mesh.vertices.size()); ++v)
    if (mesh.vertices[v].x() == 0.0) s.pins.push_back(v);
  s.stiffness = 1e12;
  return s;
}

namespace {

// Keeps tetrahedra whose centroid passes `keep` and compacts the vertex list.
template <class Pred>
TetMesh carve(const TetMesh& in, Pred keep) {
  TetMesh out;
  std::vector<Index> remap(in.vertices.size(), -1);
  for (const auto& t : in.tets) {
    const Vec3 c = 0.25 * (in.vertices[t[0]] + in.vertices[t[1]] + in.vertices[t[2]] + in.vertices[t[3]]);
    if (!keep(c)) continue;
    std::array<Index, 4> nt{};
    for (int k = 0; k < 4; ++k) {
      Index& r = remap[t[k]];
      if (r < 0) {
        r = static_cast<Index>(out.vertices.size());
        out.vertices.push_back(in.vertices[t[k]]);
      }
      nt[k] = r;
    }
    out.tets.push_back(nt);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh files

TetMesh read_tet_mesh(std::istream& is, std::ostream* warn) {
  TetMesh mesh;
  std::string line;
  int lineno = 0;
  auto next = [&](std::istringstream& ls) {
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ls.clear();
      ls.str(line);
      return true;
    }
    return false;
  };
  auto header = [&](const char* word) {
    std::istringstream ls;
    if (!next(ls)) throw ParseError(std::string("expected '") + word + " <count>'", lineno + 1);
    std::string w;
    long count = -1;
    std::string extra;
    if (!(ls >> w >> count) || w != word || count < 0 || (ls >> extra))
      throw ParseError(std::string("expected '") + word + " <count>'", lineno);
    return count;
  };

  const long nn = header("nodes");
  for (long i = 0; i < nn; ++i) {
    std::istringstream ls;
    if (!next(ls)) throw ParseError("unexpected end of file in node list", lineno + 1);
    long id = -1;
    double x, y, z;
    std::string extra;
    if (!(ls >> id >> x >> y >> z) || (ls >> extra)) throw ParseError("expected '<id> x y z'", lineno);
    if (id != i) throw ParseError("node ids must be consecutive from 0", lineno);
    mesh.vertices.emplace_back(x, y, z);
  }
  const long nt = header("tets");
  for (long i = 0; i < nt; ++i) {
    std::istringstream ls;
    if (!next(ls)) throw ParseError("unexpected end of file in tet list", lineno + 1);
    long id = -1;
    std::array<long, 4> v{};
    std::string extra;
    if (!(ls >> id >> v[0] >> v[1] >> v[2] >> v[3]) || (ls >> extra))
      throw ParseError("expected '<id> a b c d'", lineno);
    if (id != i) throw ParseError("tet ids must be consecutive from 0", lineno);
    std::array<Index, 4> t{};
    for (int k = 0; k < 4; ++k) {
      if (v[k] < 0 || v[k] >= nn) throw ParseError("tet vertex out of range", lineno);
      t[k] = static_cast<Index>(v[k]);
    }
    const auto& p = mesh.vertices;
    double vol = tet_volume(p[t[0]], p[t[1]], p[t[2]], p[t[3]]);
    if (vol < 0.0) {
      std::swap(t[2], t[3]);
      vol = -vol;
    }
    Mat3 dm;
    dm << p[t[1]] - p[t[0]], p[t[2]] - p[t[0]], p[t[3]] - p[t[0]];
    const double scale = std::max({dm.col(0).norm(), dm.col(1).norm(), dm.col(2).norm()});
    if (!(vol > 1e-12 * scale * scale * scale)) {
      if (warn) *warn << "warning: line " << lineno << ": degenerate tetrahedron " << i << " dropped\n";
      continue;
    }
    mesh.tets.push_back(t);
  }
  std::istringstream ls;
  if (next(ls)) throw ParseError("trailing content after tet list", lineno);
  return mesh;
}

TetMesh load_tet_mesh(const std::filesystem::path& path, std::ostream* warn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file '" + path.string() + "'");
  return read_tet_mesh(in, warn);
}

void write_tet_mesh(std::ostream& os, const TetMesh& mesh) {
  const auto old = os.precision(17);
  os << "nodes " << mesh.vertices.size() << '\n';
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    os << i << ' ' << mesh.vertices[i].x() << ' ' << mesh.vertices[i].y() << ' ' << mesh.vertices[i].z() << '\n';
  os << "tets " << mesh.tets.size() << '\n';
  for (std::size_t i = 0; i < mesh.tets.size(); ++i) {
    const auto& t = mesh.tets[i];
    os << i << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Instantiation

ParticleState make_state(const SceneDef& scene) {
  ParticleState st(scene.positions.size());
  const auto& x0 = scene.initial ? *scene.initial : scene.positions;
  st.x = x0;
  st.x_pred = x0;
  st.x_old = x0;
  for (std::size_t i = 0; i < scene.masses.size(); ++i) st.inv_mass[i] = 1.0 / scene.masses[i];
  for (Index p : scene.pins) st.inv_mass[p] = 0.0;
  return st;
}

ConstraintSet make_constraints(const SceneDef& scene) {
  const double dt = scene.sim.dt;
  if (scene.kind == ConstraintKind::distance) {
    ConstraintSet cs = ConstraintSet::distance(scene.elements, scene.positions);
    if (!(scene.stiffness > 0.0) || !(dt > 0.0))
      throw std::invalid_argument("make_constraints: stiffness and dt must be positive");
    std::fill(cs.alpha_tilde.begin(), cs.alpha_tilde.end(), 1.0 / (scene.stiffness * dt * dt));
    return cs;
  }
  ConstraintSet cs = ConstraintSet::arap(scene.elements, scene.positions);
  for (Index j = 0; j < cs.size(); ++j)
    cs.alpha_tilde[j] = make_compliance(scene.stiffness, cs.rest_volume[j], dt);
  return cs;
}

Simulation make_simulation(const SceneDef& scene) {
  scene.validate();
  return Simulation(make_state(scene), make_constraints(scene), scene.sim, scene.colliders);
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
  return {"cloth16", "cloth32", "cloth64", "cloth128", "beam", "ball", "squash"};
}

SceneDef preset(const std::string& name) {
  if (name.rfind("cloth", 0) == 0) {
    const std::string digits = name.substr(5);
    if (digits == "16" || digits == "32" || digits == "64" || digits == "128") {
      const Index n = std::stoi(digits);
      return build_cloth(n, 1.0 / n, 0.1, ClothEdges::structural);
    }
  }
  if (name == "beam") {
    SceneDef s = build_beam(30, 4, 4, 0.1);
    s.sim.maxiter = 20;
    return s;
  }
  if (name == "ball") {
    const TetMesh block = build_lattice(10, 10, 10, 0.1, TetSplit::six, Vec3(-0.5, 0.5, -0.5));
    const Vec3 center(0.0, 1.0, 0.0);
    TetMesh ball = carve(block, [&](const Vec3& c) { return (c - center).norm() <= 0.5; });
    SceneDef s = scene_from_mesh(ball, 1000.0, "ball");
    s.colliders.push_back(SdfCollider::make_plane(Vec3::UnitY(), 0.0));
    s.sim.maxiter = 30;
    return s;
  }
  if (name == "squash") {
    const TetMesh cube = build_lattice(8, 8, 8, 0.1, TetSplit::six);
    SceneDef s = scene_from_mesh(cube, 1000.0, "squash");
    // Rest shape is the cube; the simulation starts flattened to 30% height.
    s.initial = s.positions;
    for (auto& p : *s.initial) p.y() *= 0.3;
    s.colliders.push_back(SdfCollider::make_plane(Vec3::UnitY(), 0.0));
    s.sim.maxiter = 30;
    s.sim.gravity = Vec3::Zero();
    return s;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace mgpbd

// ---------------------------------------------------------------------------
// Scene files

namespace mgpbd {

namespace {

struct Entry {
  std::string key;
  std::vector<std::string> args;
  int line;
};

double to_double(const Entry& e, std::size_t i) {
  if (i >= e.args.size()) throw ParseError("'" + e.key + "' expects more arguments", e.line);
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.args[i], &pos);
    if (pos != e.args[i].size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + e.key + "': '" + e.args[i] + "' is not a number", e.line);
  }
}

long to_long(const Entry& e, std::size_t i) {
  if (i >= e.args.size()) throw ParseError("'" + e.key + "' expects more arguments", e.line);
  try {
    std::size_t pos = 0;
    const long v = std::stol(e.args[i], &pos);
    if (pos != e.args[i].size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + e.key + "': '" + e.args[i] + "' is not an integer", e.line);
  }
}

void arity_check(const Entry& e, std::size_t n) {
  if (e.args.size() != n)
    throw ParseError("'" + e.key + "' expects " + std::to_string(n) + " argument(s), got " +
                         std::to_string(e.args.size()),
                     e.line);
}

bool to_bool(const Entry& e) {
  arity_check(e, 1);
  const auto& a = e.args[0];
  if (a == "on" || a == "true" || a == "1") return true;
  if (a == "off" || a == "false" || a == "0") return false;
  throw ParseError("'" + e.key + "' expects on/off", e.line);
}

Vec3 to_vec3(const Entry& e, std::size_t i) { return {to_double(e, i), to_double(e, i + 1), to_double(e, i + 2)}; }

SdfCollider to_collider(const Entry& e) {
  if (e.args.empty()) throw ParseError("'collider' expects a kind", e.line);
  const auto& kind = e.args[0];
  try {
    if (kind == "plane") {
      arity_check(e, 5);
      return SdfCollider::make_plane(to_vec3(e, 1), to_double(e, 4));
    }
    if (kind == "sphere") {
      arity_check(e, 5);
      return SdfCollider::make_sphere(to_vec3(e, 1), to_double(e, 4));
    }
    if (kind == "cylinder") {
      arity_check(e, 8);
      return SdfCollider::make_cylinder(to_vec3(e, 1), to_vec3(e, 4), to_double(e, 7));
    }
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("collider: ") + ex.what(), e.line);
  }
  throw ParseError("unknown collider kind '" + kind + "'", e.line);
}

const std::set<std::string> kGeometryKeys{"type", "preset", "grid", "spacing", "lattice", "split",
                                          "origin", "mesh", "density", "edges"};

}  // namespace

SceneDef parse_scene(std::istream& is, const std::filesystem::path& base_dir) {
  std::vector<Entry> entries;
  std::map<std::string, const Entry*> geometry;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Entry e;
    e.line = lineno;
    if (!(ls >> e.key)) continue;
    for (std::string tok; ls >> tok;) e.args.push_back(tok);
    entries.push_back(std::move(e));
  }
  for (const Entry& e : entries)
    if (kGeometryKeys.count(e.key)) {
      if (geometry.count(e.key)) throw ParseError("duplicate key '" + e.key + "'", e.line);
      geometry[e.key] = &e;
    }

  auto get = [&](const std::string& k) -> const Entry* {
    auto it = geometry.find(k);
    return it == geometry.end() ? nullptr : it->second;
  };
  const Entry* type = get("type");
  if (!type) throw ParseError("missing 'type' (cloth, beam, lattice, mesh or preset)", 1);
  arity_check(*type, 1);
  const std::string& t = type->args[0];
  auto only = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, e] : geometry) {
      if (k == "type") continue;
      if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
        throw ParseError("key '" + k + "' does not apply to type '" + t + "'", e->line);
    }
  };
  auto split_of = [&]() {
    const Entry* e = get("split");
    if (!e) return TetSplit::six;
    arity_check(*e, 1);
    if (e->args[0] == "five") return TetSplit::five;
    if (e->args[0] == "six") return TetSplit::six;
    throw ParseError("split must be 'five' or 'six'", e->line);
  };
  auto edges_of = [&]() {
    const Entry* e = get("edges");
    if (!e) return ClothEdges::structural;
    arity_check(*e, 1);
    if (e->args[0] == "structural") return ClothEdges::structural;
    if (e->args[0] == "shear") return ClothEdges::shear;
    throw ParseError("edges must be 'structural' or 'shear'", e->line);
  };
  auto positive = [&](const char* k, double fallback) {
    const Entry* e = get(k);
    if (!e) return fallback;
    arity_check(*e, 1);
    const double v = to_double(*e, 0);
    if (!(v > 0.0)) throw ParseError(std::string("'") + k + "' must be positive", e->line);
    return v;
  };
  auto lattice_dims = [&]() {
    const Entry* e = get("lattice");
    if (!e) throw ParseError("type '" + t + "' requires 'lattice <nx> <ny> <nz>'", type->line);
    arity_check(*e, 3);
    std::array<Index, 3> d{};
    for (int i = 0; i < 3; ++i) {
      const long v = to_long(*e, i);
      if (v < 1) throw ParseError("lattice counts must be >= 1", e->line);
      d[i] = static_cast<Index>(v);
    }
    return d;
  };

  SceneDef s;
  try {
    if (t == "cloth") {
      only({"grid", "spacing", "density", "edges"});
      const Entry* g = get("grid");
      if (!g) throw ParseError("type 'cloth' requires 'grid <N>'", type->line);
      arity_check(*g, 1);
      const long n = to_long(*g, 0);
      if (n < 1) throw ParseError("grid must be >= 1", g->line);
      s = build_cloth(static_cast<Index>(n), positive("spacing", 1.0 / static_cast<double>(n)),
                      positive("density", 0.1), edges_of());
    } else if (t == "beam") {
      only({"lattice", "spacing", "split", "density"});
      const auto d = lattice_dims();
      s = build_beam(d[0], d[1], d[2], positive("spacing", 0.1), split_of(), positive("density", 1000.0));
    } else if (t == "lattice") {
      only({"lattice", "spacing", "split", "origin", "density"});
      const auto d = lattice_dims();
      Vec3 origin = Vec3::Zero();
      if (const Entry* o = get("origin")) {
        arity_check(*o, 3);
        origin = to_vec3(*o, 0);
      }
      s = scene_from_mesh(build_lattice(d[0], d[1], d[2], positive("spacing", 0.1), split_of(), origin),
                          positive("density", 1000.0), "lattice");
    } else if (t == "mesh") {
      only({"mesh", "density"});
      const Entry* m = get("mesh");
      if (!m) throw ParseError("type 'mesh' requires 'mesh <path>'", type->line);
      arity_check(*m, 1);
      std::filesystem::path path(m->args[0]);
      if (path.is_relative()) path = base_dir / path;
      std::ifstream in(path);
      if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'", m->line);
      TetMesh mesh;
      try {
        mesh = read_tet_mesh(in, &std::cerr);
      } catch (const ParseError& pe) {
        throw ParseError(path.string() + ": " + pe.what(), m->line);
      }
      s = scene_from_mesh(mesh, positive("density", 1000.0), path.stem().string());
    } else if (t == "preset") {
      only({"preset"});
      const Entry* p = get("preset");
      if (!p) throw ParseError("type 'preset' requires 'preset <name>'", type->line);
      arity_check(*p, 1);
      s = preset(p->args[0]);
    } else {
      throw ParseError("unknown type '" + t + "'", type->line);
    }
  } catch (const std::invalid_argument& ex) {
    throw ParseError(ex.what(), type->line);
  }

  auto& c = s.sim;
  for (const Entry& e : entries) {
    const auto& k = e.key;
    if (kGeometryKeys.count(k)) continue;
    if (k == "name") {
      arity_check(e, 1);
      s.name = e.args[0];
    } else if (k == "solver") {
      arity_check(e, 1);
      try {
        c.solver = solver_kind_from_string(e.args[0]);
      } catch (const std::invalid_argument& ex) {
        throw ParseError(ex.what(), e.line);
      }
    } else if (k == "smoother") {
      arity_check(e, 1);
      try {
        c.amg.smoother.kind = smoother_kind_from_string(e.args[0]);
      } catch (const std::invalid_argument& ex) {
        throw ParseError(ex.what(), e.line);
      }
    } else if (k == "kernel") {
      arity_check(e, 1);
      if (e.args[0] == "bootstrap") c.amg.kernel = KernelSource::bootstrap;
      else if (e.args[0] == "ones") c.amg.kernel = KernelSource::ones;
      else throw ParseError("kernel must be 'bootstrap' or 'ones'", e.line);
    } else if (k == "dt") {
      arity_check(e, 1);
      c.dt = to_double(e, 0);
    } else if (k == "stiffness") {
      arity_check(e, 1);
      s.stiffness = to_double(e, 0);
    } else if (k == "frames") {
      arity_check(e, 1);
      c.frames = to_long(e, 0);
    } else if (k == "maxiter") {
      arity_check(e, 1);
      c.maxiter = static_cast<int>(to_long(e, 0));
    } else if (k == "tol") {
      arity_check(e, 1);
      c.tol = to_double(e, 0);
    } else if (k == "omega") {
      arity_check(e, 1);
      c.omega_relax = to_double(e, 0);
    } else if (k == "setup_interval") {
      arity_check(e, 1);
      c.setup_interval = static_cast<int>(to_long(e, 0));
    } else if (k == "seed") {
      arity_check(e, 1);
      c.seed = static_cast<std::uint64_t>(to_long(e, 0));
    } else if (k == "damping") {
      arity_check(e, 1);
      c.damping = to_double(e, 0);
    } else if (k == "backtracking") {
      c.backtracking = to_bool(e);
    } else if (k == "pcg_tol") {
      arity_check(e, 1);
      c.pcg_tol = to_double(e, 0);
    } else if (k == "pcg_maxiter") {
      arity_check(e, 1);
      c.pcg_maxiter = static_cast<int>(to_long(e, 0));
    } else if (k == "kernel_vectors") {
      arity_check(e, 1);
      c.amg.n_kernel_vecs = static_cast<int>(to_long(e, 0));
    } else if (k == "theta") {
      arity_check(e, 1);
      c.amg.theta_s = to_double(e, 0);
    } else if (k == "min_coarse") {
      arity_check(e, 1);
      c.amg.min_coarse_size = static_cast<Index>(to_long(e, 0));
    } else if (k == "gravity") {
      arity_check(e, 3);
      c.gravity = to_vec3(e, 0);
    } else if (k == "pins") {
      if (e.args.size() == 1 && e.args[0] == "none") {
        s.pins.clear();
        continue;
      }
      if (e.args.empty()) throw ParseError("'pins' expects vertex indices or 'none'", e.line);
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        const long p = to_long(e, i);
        if (p < 0 || p >= static_cast<long>(s.positions.size()))
          throw ParseError("pin index " + std::to_string(p) + " out of range", e.line);
        s.pins.push_back(static_cast<Index>(p));
      }
    } else if (k == "collider") {
      s.colliders.push_back(to_collider(e));
    } else {
      throw ParseError("unknown key '" + k + "'", e.line);
    }
  }
  std::sort(s.pins.begin(), s.pins.end());
  s.pins.erase(std::unique(s.pins.begin(), s.pins.end()), s.pins.end());
  try {
    s.validate();
    c.validate();
  } catch (const std::invalid_argument& ex) {
    throw ParseError(ex.what(), entries.empty() ? 1 : entries.back().line);
  }
  return s;
}

SceneDef load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file '" + path.string() + "'");
  return parse_scene(in, path.parent_path());
}

}  // namespace mgpbd
