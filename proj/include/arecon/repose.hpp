#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arecon/artmodel.hpp"
#include "arecon/canon.hpp"

namespace arecon {

struct RigJoint {
  std::string name;
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // unit
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const RigJoint&) const = default;
};

// Estimated joints of a reconstruction plus the part-to-joint table taken
// from the model spec (-1 for the base part).
struct Rig {
  std::vector<RigJoint> joints;
  std::vector<int> part_joints;

  std::size_t num_joints() const { return joints.size(); }
  bool operator==(const Rig&) const = default;
};

// Rig from aggregated estimates. Each joint's axis is the confidence- and
// angle-weighted mean of the per-view rotation directions, sign-aligned with
// the model's axis so the model's limits keep their meaning. When every view
// saw the joint at (numerically) zero angle the model axis is used.
Rig make_rig(const ArticulatedModel& model, const std::vector<JointEstimate>& estimates);

/// Rig with the model's own pivots and axes.
Rig model_rig(const ArticulatedModel& model);

/// Angle of each estimate's rotation measured about the rig axis.
Pose recovered_pose(const Rig& rig, const std::vector<JointEstimate>& estimates);

Pose clamp_to_rig(const Rig& rig, const Pose& pose, bool* clamped = nullptr);

/// Rotates joint j's moving-part points by pose.angles[j] about the rig axis through its center.
FeaturedPointCloud repose_cloud(const FeaturedPointCloud& cloud, const Rig& rig, const Pose& pose);

struct SkinBinding {
  std::vector<int> parts;
  std::vector<std::uint32_t> sources;  // nearest cloud point per vertex
  std::vector<double> distances;

  std::size_t size() const { return parts.size(); }
  bool operator==(const SkinBinding&) const = default;
};

/// Nearest-cloud-point part label per vertex; ties go to the lowest point index.
SkinBinding bind_mesh(const TriangleMesh& mesh, const FeaturedPointCloud& cloud);

/// Piecewise-rigid skinning: each vertex follows the joint of its bound part.
TriangleMesh repose_mesh(const TriangleMesh& mesh, const SkinBinding& binding, const Rig& rig, const Pose& pose);

struct Keyframe {
  double time = 0.0;
  Pose pose;
};

struct AnimationFrame {
  double time = 0.0;
  Pose pose;
  TriangleMesh mesh;
};

/// Linear interpolation of joint angles; ceil((t_end - t_start) * fps) + 1 frames.
std::vector<AnimationFrame> animate(const TriangleMesh& mesh, const SkinBinding& binding, const Rig& rig,
                                    const std::vector<Keyframe>& keyframes, double fps);

/// Writes frame_%04d.obj files and animation.json (fps, times, poses) into `dir`.
void export_animation(const std::vector<AnimationFrame>& frames, double fps, const std::filesystem::path& dir);

// "BIND", u32 count, then per vertex u16 part, u32 source, f64 distance.
std::string encode_binding(const SkinBinding& binding);
SkinBinding decode_binding(std::string_view bytes);

}  // namespace arecon
