#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arecon/mesh.hpp"

namespace arecon {

// Revolute joint attaching `moving_part` directly to the base part. Angles are
// measured from the rest articulation, which is angle 0 by convention.
struct Joint {
  int id = 0;
  std::string name;
  int base_part = 0;
  int moving_part = 1;
  Vec3 pivot = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const Joint&) const = default;
};

// A rigid part. Geometry is a list of closed shells; a point is inside the
// part when it is inside any shell.
struct Part {
  int id = 0;
  std::string name;
  std::vector<TriangleMesh> shells;
  int joint = -1;  // owning joint, -1 for the base part

  TriangleMesh mesh() const;
};

struct Pose {
  std::vector<double> angles;

  static Pose zeros(std::size_t num_joints) { return Pose{std::vector<double>(num_joints, 0.0)}; }
};

struct ArticulatedModel {
  std::string category;
  std::vector<Part> parts;
  std::vector<Joint> joints;

  std::size_t num_parts() const { return parts.size(); }
  std::size_t num_joints() const { return joints.size(); }
  int base_part() const;
  /// Owning joint per part id, -1 for the base.
  std::vector<int> part_joints() const;
  std::size_t vertex_count() const;

  // Throws Error if any structural invariant is broken.
  void validate() const;
};

/// Part and joint counts a known category must have.
struct CategoryShape {
  std::size_t parts;
  std::size_t joints;
};
std::optional<CategoryShape> known_category(std::string_view category);

ArticulatedModel parse_model(std::string_view spec_text);
std::string serialize_model(const ArticulatedModel& model);
ArticulatedModel load_model(const std::filesystem::path& path);

/// Rest-pose bounding box centered at (0.5, 0.5, 0.5) with its longest side 1.
ArticulatedModel normalize_to_container(const ArticulatedModel& model);

/// Per-axis scaling about the origin (dataset augmentation); not renormalized.
ArticulatedModel scale_model(const ArticulatedModel& model, const Vec3& factors);

/// Posed vertices per part, shells concatenated in order. Throws on pose length mismatch.
std::vector<std::vector<Vec3>> forward_kinematics(const ArticulatedModel& model, const Pose& pose);

/// Copy of the model with geometry moved to `pose`; joints are left as-is.
ArticulatedModel posed_model(const ArticulatedModel& model, const Pose& pose);

/// Union of all parts at `pose`; `face_parts` (optional) receives each face's part id.
TriangleMesh posed_mesh(const ArticulatedModel& model, const Pose& pose,
                        std::vector<int>* face_parts = nullptr);

/// Occupancy by ray parity against every posed shell.
std::vector<bool> gt_occupancy(const ArticulatedModel& model, const Pose& pose,
                               std::span<const Vec3> queries);

/// Clamps each angle into its joint's limits; reports whether anything moved.
Pose clamp_pose(const ArticulatedModel& model, const Pose& pose, bool* clamped = nullptr);

/// Throws Error when the pose has the wrong length or leaves the joint limits.
void require_pose_in_limits(const ArticulatedModel& model, const Pose& pose);

}  // namespace arecon
