#include "arecon/repose.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "arecon/fileio.hpp"
#include "arecon/point_index.hpp"
#include "arecon/recon.hpp"
#include "binio.hpp"

namespace arecon {
namespace {

// Below this angle (radians) a per-view rotation carries no usable axis.
constexpr double kAxisAngleFloor = 1e-6;

void check_pose(const Rig& rig, const Pose& pose) {
  if (pose.angles.size() != rig.num_joints()) {
    throw Error("pose has " + std::to_string(pose.angles.size()) + " angles, rig has " +
                std::to_string(rig.num_joints()) + " joints");
  }
}

std::vector<Mat3> joint_rotations(const Rig& rig, const Pose& pose) {
  std::vector<Mat3> rot;
  for (std::size_t j = 0; j < rig.num_joints(); ++j) rot.push_back(axis_angle_matrix(rig.joints[j].axis, pose.angles[j]));
  return rot;
}

int joint_of(const Rig& rig, int part) {
  if (part < 0 || static_cast<std::size_t>(part) >= rig.part_joints.size()) {
    throw Error("part " + std::to_string(part) + " is not in the rig");
  }
  return rig.part_joints[part];
}

}  // namespace

Rig model_rig(const ArticulatedModel& model) {
  Rig rig;
  for (const auto& j : model.joints) rig.joints.push_back({j.name, j.pivot, j.axis, j.lower, j.upper});
  rig.part_joints = model.part_joints();
  return rig;
}

Rig make_rig(const ArticulatedModel& model, const std::vector<JointEstimate>& estimates) {
  if (estimates.size() != model.num_joints()) throw Error("make_rig: one estimate per joint required");
  Rig rig = model_rig(model);
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const Vec3& ref = model.joints[j].axis;
    Vec3 sum = Vec3::Zero();
    for (const auto& v : estimates[j].per_view) {
      const double angle = v.rotation.norm();
      if (angle < kAxisAngleFloor) continue;
      Vec3 dir = v.rotation / angle;
      if (dir.dot(ref) < 0) dir = -dir;
      sum += v.total_weight * angle * dir;
    }
    rig.joints[j].center = estimates[j].center;
    rig.joints[j].axis = sum.norm() > 0 ? Vec3(sum.normalized()) : ref;
  }
  return rig;
}

Pose recovered_pose(const Rig& rig, const std::vector<JointEstimate>& estimates) {
  if (estimates.size() != rig.num_joints()) throw Error("recovered_pose: one estimate per joint required");
  Pose pose;
  for (std::size_t j = 0; j < estimates.size(); ++j) pose.angles.push_back(estimates[j].rotation.dot(rig.joints[j].axis));
  return pose;
}

Pose clamp_to_rig(const Rig& rig, const Pose& pose, bool* clamped) {
  check_pose(rig, pose);
  Pose out = pose;
  bool any = false;
  for (std::size_t j = 0; j < rig.num_joints(); ++j) {
    const double c = std::clamp(out.angles[j], rig.joints[j].lower, rig.joints[j].upper);
    if (c != out.angles[j]) any = true;
    out.angles[j] = c;
  }
  if (clamped) *clamped = any;
  return out;
}

FeaturedPointCloud repose_cloud(const FeaturedPointCloud& cloud, const Rig& rig, const Pose& pose) {
  if (pose.angles.size() != rig.num_joints() || cloud.num_joints != rig.num_joints()) {
    throw Error("repose_cloud: missing joint estimate (pose, rig and cloud disagree on joint count)");
  }
  const auto rot = joint_rotations(rig, pose);
  FeaturedPointCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int j = joint_of(rig, out.labels[i]);
    if (j < 0 || pose.angles[j] == 0.0) continue;
    out.points[i] = rotate_about(out.points[i], rig.joints[j].center, rot[j]);
  }
  return out;
}

SkinBinding bind_mesh(const TriangleMesh& mesh, const FeaturedPointCloud& cloud) {
  if (cloud.empty()) throw Error("bind_mesh: empty cloud");
  const PointIndex index(cloud.points);
  SkinBinding b;
  b.parts.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    const auto nn = index.nearest(v);
    b.parts.push_back(cloud.labels[nn.index]);
    b.sources.push_back(static_cast<std::uint32_t>(nn.index));
    b.distances.push_back(std::sqrt(nn.dist2));
  }
  return b;
}

TriangleMesh repose_mesh(const TriangleMesh& mesh, const SkinBinding& binding, const Rig& rig, const Pose& pose) {
  check_pose(rig, pose);
  if (binding.size() != mesh.vertices.size()) throw Error("repose_mesh: binding does not match mesh");
  const auto rot = joint_rotations(rig, pose);
  TriangleMesh out = mesh;
  for (std::size_t i = 0; i < out.vertices.size(); ++i) {
    const int j = joint_of(rig, binding.parts[i]);
    if (j < 0 || pose.angles[j] == 0.0) continue;
    out.vertices[i] = rotate_about(out.vertices[i], rig.joints[j].center, rot[j]);
  }
  return out;
}

std::vector<AnimationFrame> animate(const TriangleMesh& mesh, const SkinBinding& binding, const Rig& rig,
                                    const std::vector<Keyframe>& keyframes, double fps) {
  if (keyframes.size() < 2) throw Error("animate: at least two keyframes required");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error("animate: fps must be positive");
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    check_pose(rig, keyframes[k].pose);
    if (k > 0 && !(keyframes[k].time > keyframes[k - 1].time)) throw Error("animate: keyframe times must increase");
  }
  const double t0 = keyframes.front().time, t1 = keyframes.back().time;
  // Tolerate products like 0.3 * 10 landing a hair above an integer.
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) * fps - 1e-9));
  std::vector<AnimationFrame> frames;
  std::size_t seg = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = std::min(t0 + static_cast<double>(i) / fps, t1);
    while (seg + 2 < keyframes.size() && t > keyframes[seg + 1].time) ++seg;
    const auto& a = keyframes[seg];
    const auto& b = keyframes[seg + 1];
    const double s = (t - a.time) / (b.time - a.time);
    Pose pose;
    for (std::size_t j = 0; j < rig.num_joints(); ++j) {
      pose.angles.push_back(a.pose.angles[j] + s * (b.pose.angles[j] - a.pose.angles[j]));
    }
    frames.push_back({t, pose, repose_mesh(mesh, binding, rig, pose)});
  }
  return frames;
}

void export_animation(const std::vector<AnimationFrame>& frames, double fps, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["fps"] = fps;
  manifest["frames"] = nlohmann::json::array();
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%04zu.obj", i);
    write_file_atomic(dir / name, export_mesh(frames[i].mesh, MeshFormat::kObj));
    manifest["frames"].push_back({{"file", name}, {"time", frames[i].time}, {"angles", frames[i].pose.angles}});
  }
  write_file_atomic(dir / "animation.json", manifest.dump(1) + "\n");
}

std::string encode_binding(const SkinBinding& b) {
  if (b.sources.size() != b.size() || b.distances.size() != b.size()) throw Error("binding: inconsistent arrays");
  binio::Writer w;
  w.raw("BIND");
  w.put(static_cast<std::uint32_t>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.parts[i] < 0 || b.parts[i] > 0xffff) throw Error("binding: part id out of range");
    w.put(static_cast<std::uint16_t>(b.parts[i]));
    w.put(b.sources[i]);
    w.put(b.distances[i]);
  }
  return w.take();
}

SkinBinding decode_binding(std::string_view bytes) {
  binio::Reader r(bytes, "binding");
  if (r.raw(4) != "BIND") throw Error("binding: bad magic");
  const auto n = r.get<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(n) * 14) throw Error("binding: body size does not match count");
  SkinBinding b;
  for (std::uint32_t i = 0; i < n; ++i) {
    b.parts.push_back(r.get<std::uint16_t>());
    b.sources.push_back(r.get<std::uint32_t>());
    b.distances.push_back(r.get<double>());
    if (!std::isfinite(b.distances.back())) throw Error("binding: non-finite distance");
  }
  return b;
}

}  // namespace arecon
