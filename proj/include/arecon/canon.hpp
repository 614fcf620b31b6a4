#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arecon/synth.hpp"

namespace arecon {

// Point cloud lifted from one or more bundles. Each point keeps its source
// view and pixel so per-view statistics and pixel-level comparisons stay
// possible after union.
struct FeaturedPointCloud {
  std::uint32_t num_joints = 0;
  std::uint32_t num_parts = 0;
  std::uint32_t channels = 0;
  std::vector<Vec3> points;
  std::vector<float> features;         // N*C
  std::vector<std::uint16_t> labels;   // N
  std::vector<float> votes;            // N*N_J*6
  std::vector<float> confidences;      // N*N_J
  std::vector<std::uint32_t> view_ids; // N
  std::vector<std::uint32_t> pixels;   // N

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const float* vote(std::size_t i, std::size_t j) const { return &votes[(i * num_joints + j) * 6]; }
  float confidence(std::size_t i, std::size_t j) const { return confidences[i * num_joints + j]; }

  void reserve(std::size_t n);
  /// Appends point `i` of `other` (same dimensions).
  void push_from(const FeaturedPointCloud& other, std::size_t i);

  bool operator==(const FeaturedPointCloud&) const = default;
};

/// One point per foreground pixel. An all-background bundle yields an empty cloud.
FeaturedPointCloud lift(const MapBundle& bundle);

enum class VoteWeighting { kConfidence, kUniform };

struct ViewJointEstimate {
  std::uint32_t view_id = 0;
  Vec3 center = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();
  double total_weight = 0.0;
};

struct JointEstimate {
  Vec3 center = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();  // axis-angle, norm <= pi
  double total_weight = 0.0;
  std::vector<ViewJointEstimate> per_view;

  /// Estimate for a single view, taken from `per_view`.
  JointEstimate view(std::uint32_t view_id) const;
};

// Weighted mean of the joint-j votes. Points are grouped by view: each view
// yields a normalized weighted mean, and views are combined weighted by their
// total weight. Throws when no point carries positive weight.
JointEstimate aggregate_joint(std::span<const FeaturedPointCloud> clouds, std::size_t joint,
                              VoteWeighting weighting = VoteWeighting::kConfidence);

std::vector<JointEstimate> aggregate_joints(std::span<const FeaturedPointCloud> clouds,
                                            VoteWeighting weighting = VoteWeighting::kConfidence);

/// Per-joint estimates restricted to one view of a (possibly multi-view) aggregate.
std::vector<JointEstimate> view_estimates(const std::vector<JointEstimate>& estimates, std::uint32_t view_id);

// Rotates every point of joint j's moving part by the inverse of
// estimates[j].rotation about estimates[j].center. `part_joints` maps part
// label to owning joint (-1 for the base part).
FeaturedPointCloud canonicalize_articulation(const FeaturedPointCloud& cloud,
                                             const std::vector<JointEstimate>& estimates,
                                             const std::vector<int>& part_joints);

/// Set union: concatenation in input order.
FeaturedPointCloud union_views(std::span<const FeaturedPointCloud> clouds);

// Binary little-endian PLY with per-point features, label, source, votes and
// confidences as extra vertex properties.
std::string encode_cloud_ply(const FeaturedPointCloud& cloud);
FeaturedPointCloud decode_cloud_ply(std::string_view bytes);

}  // namespace arecon
