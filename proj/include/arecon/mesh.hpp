#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace arecon {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<std::uint32_t, 3>;

// All recoverable failures in the library surface as this type; the CLI maps
// it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rotation matrix for a rotation of `angle` radians about the unit `axis`.
Mat3 axis_angle_matrix(const Vec3& axis, double angle);

/// Rotation matrix for an axis-angle vector (direction = axis, norm = angle).
Mat3 rotation_from_vector(const Vec3& rotvec);

/// Rotates `p` about the line through `center` by the axis-angle vector.
inline Vec3 rotate_about(const Vec3& p, const Vec3& center, const Mat3& rot) {
  return center + rot * (p - center);
}

/// Wraps an axis-angle vector so its norm is at most pi.
Vec3 wrap_rotation(const Vec3& rotvec);

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  Aabb bounds() const;
  double area() const;
  Vec3 face_normal(std::size_t f) const;  // unit, zero for degenerate faces
  double face_area(std::size_t f) const;

  // Throws Error when an invariant is violated: index out of range, repeated
  // index in a face, or a non-finite coordinate.
  void validate() const;

  void append(const TriangleMesh& other);
};

// Edge statistics used for topology checks.
struct MeshTopology {
  std::size_t vertices = 0;  // vertices referenced by at least one face
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::size_t boundary_edges = 0;      // used by exactly one face
  std::size_t nonmanifold_edges = 0;   // used by more than two faces
  std::size_t misoriented_edges = 0;   // two faces traverse the edge the same way

  long euler_characteristic() const {
    return static_cast<long>(vertices) - static_cast<long>(edges) + static_cast<long>(faces);
  }
  bool closed_manifold() const {
    return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0;
  }
};

MeshTopology analyze_topology(const TriangleMesh& mesh);

/// Signed volume enclosed by a closed mesh (positive for outward winding).
double signed_volume(const TriangleMesh& mesh);

/// Axis-aligned box centered at the origin, outward-facing triangles.
TriangleMesh make_box(const Vec3& size);

/// Closed cylinder along +z centered at the origin.
TriangleMesh make_cylinder(double radius, double height, int segments);

/// Draws `n` points area-uniformly from the surface. Deterministic per seed.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace arecon
