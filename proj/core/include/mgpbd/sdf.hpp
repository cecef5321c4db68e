#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace mgpbd {

enum class SdfKind : std::uint8_t { plane, sphere, cylinder };

/// Static analytic collider. Negative distance means inside.
struct SdfCollider {
  SdfKind kind = SdfKind::plane;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();   // plane: any point on it; sphere: centre; cylinder: point on axis
  Eigen::Vector3d dir = Eigen::Vector3d::UnitY();    // plane: unit normal; cylinder: unit axis
  double radius = 0.0;

  /// Plane {x : n.x = offset}; the normal is normalized.
  static SdfCollider make_plane(const Eigen::Vector3d& normal, double offset);
  static SdfCollider make_sphere(const Eigen::Vector3d& center, double radius);
  /// Infinite cylinder; the axis is normalized.
  static SdfCollider make_cylinder(const Eigen::Vector3d& point, const Eigen::Vector3d& axis, double radius);
};

struct SdfSample {
  double distance;
  Eigen::Vector3d gradient;  // unit outward normal
};

/// On the medial axis (sphere centre, cylinder axis) the gradient falls back to
/// +Y for spheres and to the first unit vector perpendicular to the axis for cylinders.
SdfSample sdf_eval(const SdfCollider& c, const Eigen::Vector3d& x);

}  // namespace mgpbd
