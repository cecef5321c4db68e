#include "mgpbd/sdf.hpp"

#include <cmath>
#include <stdexcept>

namespace mgpbd {

namespace {

constexpr double kMedial = 1e-12;

Eigen::Vector3d unit(const Eigen::Vector3d& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::invalid_argument(what);
  return v / n;
}

}  // namespace

SdfCollider SdfCollider::make_plane(const Eigen::Vector3d& normal, double offset) {
  SdfCollider c;
  c.kind = SdfKind::plane;
  c.dir = unit(normal, "plane normal must be nonzero");
  c.point = offset * normal / normal.norm();
  return c;
}

SdfCollider SdfCollider::make_sphere(const Eigen::Vector3d& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  SdfCollider c;
  c.kind = SdfKind::sphere;
  c.point = center;
  c.radius = radius;
  return c;
}

SdfCollider SdfCollider::make_cylinder(const Eigen::Vector3d& point, const Eigen::Vector3d& axis,
                                       double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("cylinder radius must be positive");
  SdfCollider c;
  c.kind = SdfKind::cylinder;
  c.point = point;
  c.dir = unit(axis, "cylinder axis must be nonzero");
  c.radius = radius;
  return c;
}

SdfSample sdf_eval(const SdfCollider& c, const Eigen::Vector3d& x) {
  switch (c.kind) {
    case SdfKind::plane:
      return {c.dir.dot(x - c.point), c.dir};
    case SdfKind::sphere: {
      const Eigen::Vector3d d = x - c.point;
      const double r = d.norm();
      if (r < kMedial) return {-c.radius, Eigen::Vector3d::UnitY()};
      return {r - c.radius, d / r};
    }
    case SdfKind::cylinder: {
      Eigen::Vector3d d = x - c.point;
      d -= d.dot(c.dir) * c.dir;
      const double r = d.norm();
      if (r < kMedial) {
        const Eigen::Vector3d e = std::abs(c.dir.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        return {-c.radius, (e - e.dot(c.dir) * c.dir).normalized()};
      }
      return {r - c.radius, d / r};
    }
  }
  return {0.0, Eigen::Vector3d::UnitY()};
}

}  // namespace mgpbd
