#include "arecon/canon.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace arecon {

void FeaturedPointCloud::reserve(std::size_t n) {
  points.reserve(n);
  features.reserve(n * channels);
  labels.reserve(n);
  votes.reserve(n * num_joints * 6);
  confidences.reserve(n * num_joints);
  view_ids.reserve(n);
  pixels.reserve(n);
}

void FeaturedPointCloud::push_from(const FeaturedPointCloud& o, std::size_t i) {
  points.push_back(o.points[i]);
  features.insert(features.end(), o.features.begin() + i * channels, o.features.begin() + (i + 1) * channels);
  labels.push_back(o.labels[i]);
  votes.insert(votes.end(), o.votes.begin() + i * num_joints * 6, o.votes.begin() + (i + 1) * num_joints * 6);
  confidences.insert(confidences.end(), o.confidences.begin() + i * num_joints,
                     o.confidences.begin() + (i + 1) * num_joints);
  view_ids.push_back(o.view_ids[i]);
  pixels.push_back(o.pixels[i]);
}

FeaturedPointCloud lift(const MapBundle& b) {
  FeaturedPointCloud cloud;
  cloud.num_joints = b.num_joints;
  cloud.num_parts = b.num_parts;
  cloud.channels = b.channels;
  cloud.reserve(b.foreground());
  const std::size_t nj = b.num_joints, C = b.channels;
  for (std::size_t p = 0; p < b.pixels(); ++p) {
    if (!b.mask[p]) continue;
    cloud.points.push_back(b.coord(p));
    cloud.features.insert(cloud.features.end(), b.features.begin() + p * C, b.features.begin() + (p + 1) * C);
    cloud.labels.push_back(b.part_labels[p]);
    cloud.votes.insert(cloud.votes.end(), b.votes.begin() + p * nj * 6, b.votes.begin() + (p + 1) * nj * 6);
    cloud.confidences.insert(cloud.confidences.end(), b.confidences.begin() + p * nj,
                             b.confidences.begin() + (p + 1) * nj);
    cloud.view_ids.push_back(static_cast<std::uint32_t>(b.view_id));
    cloud.pixels.push_back(static_cast<std::uint32_t>(p));
  }
  return cloud;
}

JointEstimate JointEstimate::view(std::uint32_t view_id) const {
  for (const auto& v : per_view) {
    if (v.view_id == view_id) {
      JointEstimate e;
      e.center = v.center;
      e.rotation = v.rotation;
      e.total_weight = v.total_weight;
      e.per_view = {v};
      return e;
    }
  }
  throw Error("joint estimate has no entry for view " + std::to_string(view_id));
}

JointEstimate aggregate_joint(std::span<const FeaturedPointCloud> clouds, std::size_t joint,
                              VoteWeighting weighting) {
  struct Accum {
    double weight = 0.0;
    Vec3 center = Vec3::Zero();
    Vec3 rotation = Vec3::Zero();
  };
  std::map<std::uint32_t, Accum> views;
  for (const auto& cloud : clouds) {
    if (joint >= cloud.num_joints) throw Error("aggregate_joint: joint index out of range");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double w = weighting == VoteWeighting::kUniform ? 1.0 : cloud.confidence(i, joint);
      if (!(w > 0.0)) continue;
      const float* v = cloud.vote(i, joint);
      auto& acc = views[cloud.view_ids[i]];
      acc.weight += w;
      acc.center += w * Vec3(v[0], v[1], v[2]);
      acc.rotation += w * Vec3(v[3], v[4], v[5]);
    }
  }
  JointEstimate est;
  Vec3 center = Vec3::Zero(), rotation = Vec3::Zero();
  for (const auto& [view_id, acc] : views) {
    ViewJointEstimate ve;
    ve.view_id = view_id;
    ve.total_weight = acc.weight;
    ve.center = acc.center / acc.weight;
    ve.rotation = wrap_rotation(acc.rotation / acc.weight);
    est.total_weight += acc.weight;
    center += acc.weight * ve.center;
    rotation += acc.weight * ve.rotation;
    est.per_view.push_back(ve);
  }
  if (!(est.total_weight > 0.0)) {
    throw Error("joint unobserved: no vote for joint " + std::to_string(joint) + " carries positive confidence");
  }
  if (est.per_view.size() == 1) {
    est.center = est.per_view.front().center;
    est.rotation = est.per_view.front().rotation;
  } else {
    est.center = center / est.total_weight;
    est.rotation = wrap_rotation(rotation / est.total_weight);
  }
  return est;
}

std::vector<JointEstimate> aggregate_joints(std::span<const FeaturedPointCloud> clouds, VoteWeighting weighting) {
  if (clouds.empty()) throw Error("aggregate_joints: no clouds");
  std::vector<JointEstimate> out;
  for (std::size_t j = 0; j < clouds.front().num_joints; ++j) out.push_back(aggregate_joint(clouds, j, weighting));
  return out;
}

std::vector<JointEstimate> view_estimates(const std::vector<JointEstimate>& estimates, std::uint32_t view_id) {
  std::vector<JointEstimate> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.push_back(e.view(view_id));
  return out;
}

FeaturedPointCloud canonicalize_articulation(const FeaturedPointCloud& cloud,
                                             const std::vector<JointEstimate>& estimates,
                                             const std::vector<int>& part_joints) {
  std::vector<Mat3> inverse;
  inverse.reserve(estimates.size());
  for (const auto& e : estimates) inverse.push_back(rotation_from_vector(-e.rotation));
  FeaturedPointCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto label = out.labels[i];
    if (label >= part_joints.size()) {
      throw Error("canonicalize: label " + std::to_string(label) + " references an unknown part");
    }
    const int j = part_joints[label];
    if (j < 0) continue;
    if (static_cast<std::size_t>(j) >= estimates.size()) throw Error("canonicalize: missing joint estimate");
    out.points[i] = rotate_about(out.points[i], estimates[j].center, inverse[j]);
  }
  return out;
}

FeaturedPointCloud union_views(std::span<const FeaturedPointCloud> clouds) {
  if (clouds.empty()) throw Error("union_views: no clouds");
  FeaturedPointCloud out;
  out.num_joints = clouds.front().num_joints;
  out.num_parts = clouds.front().num_parts;
  out.channels = clouds.front().channels;
  std::size_t total = 0;
  for (const auto& c : clouds) {
    if (c.num_joints != out.num_joints || c.num_parts != out.num_parts || c.channels != out.channels) {
      throw Error("union_views: clouds disagree on joint/part/feature dimensions");
    }
    total += c.size();
  }
  out.reserve(total);
  for (const auto& c : clouds) {
    out.points.insert(out.points.end(), c.points.begin(), c.points.end());
    out.features.insert(out.features.end(), c.features.begin(), c.features.end());
    out.labels.insert(out.labels.end(), c.labels.begin(), c.labels.end());
    out.votes.insert(out.votes.end(), c.votes.begin(), c.votes.end());
    out.confidences.insert(out.confidences.end(), c.confidences.begin(), c.confidences.end());
    out.view_ids.insert(out.view_ids.end(), c.view_ids.begin(), c.view_ids.end());
    out.pixels.insert(out.pixels.end(), c.pixels.begin(), c.pixels.end());
  }
  return out;
}

}  // namespace arecon
