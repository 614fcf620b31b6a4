#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "arecon/metrics.hpp"
#include "arecon/oracle.hpp"
#include "arecon/recon.hpp"
#include "arecon/repose.hpp"
#include "arecon/session.hpp"

namespace arecon {

// Settings shared by every command that reconstructs.
struct PipelineConfig {
  NoiseModel noise;
  std::string noise_name = "clean";
  VoteWeighting weighting = VoteWeighting::kConfidence;
  // Canonicalize each view about the multi-view joint center (true) or its
  // own per-view center (false). Rotations are always per view.
  bool combined_center = true;
  FieldParams field;
  std::uint32_t voxel_resolution = 32;
  LossWeights loss_weights;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are errors.
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct Reconstruction {
  std::vector<FeaturedPointCloud> lifted;     // per non-empty view
  std::vector<JointEstimate> estimates;
  std::vector<FeaturedPointCloud> canonical;  // per non-empty view
  FeaturedPointCloud cloud;                   // union of canonical views
  VoxelFeatureGrid grid;
  TriangleMesh mesh;
  Rig rig;
  SkinBinding binding;
};

/// Joint estimates from lifted views (empty clouds are ignored).
std::vector<JointEstimate> estimate_joints(const std::vector<FeaturedPointCloud>& lifted, VoteWeighting weighting);

/// Per-view canonicalization with per-view rotations and the configured center choice.
std::vector<FeaturedPointCloud> canonicalize_views(const std::vector<FeaturedPointCloud>& lifted,
                                                   const std::vector<JointEstimate>& estimates,
                                                   const std::vector<int>& part_joints, bool combined_center);

// Lift, aggregate, canonicalize, union, voxelize, mesh and bind. `observed`
// are already-corrupted bundles with distinct view ids. Throws when every
// view is empty.
Reconstruction reconstruct(const ArticulatedModel& model, const std::vector<MapBundle>& observed,
                           const PipelineConfig& config);


/// Built-in category name (data/models/<name>.json) or a spec file path; result is normalized.
ArticulatedModel resolve_model(const std::string& name_or_path, const std::filesystem::path& base_dir = {});

std::filesystem::path data_dir();

// gen-data: config keys models[{id, spec}], poses_per_model, views_per_pose,
// radius[2], vfov, width, height, channels, augmentation{copies, min_scale, max_scale}.
DatasetManifest cmd_gen_data(const nlohmann::json& config, const std::filesystem::path& config_dir,
                             const std::filesystem::path& out_dir, std::uint64_t seed);

Session cmd_reconstruct(const std::vector<std::filesystem::path>& bundles, const PipelineConfig& config,
                        const std::filesystem::path& out_dir, std::uint64_t seed);

struct ExperimentConfig {
  std::string model = "laptop";
  std::vector<int> views = {1, 2, 4, 6};
  int trials = 20;
  CameraIntrinsics intrinsics{1.0, 128, 128};
  double radius_min = 1.5;
  double radius_max = 2.5;
  std::uint32_t channels = 8;
  std::uint32_t samples = 10000;
  std::uint32_t iou_resolution = 64;
  // ablate only: "weighting" (weighted vs unweighted votes) or
  // "combination" (per-view vs combined joint centers).
  std::string ablate_switch = "weighting";
  PipelineConfig pipeline;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Observations for one trial: view q uses its own random pose and camera; the first Q views nest.
struct TrialViews {
  std::vector<Pose> poses;
  std::vector<MapBundle> truth;
  std::vector<MapBundle> observed;
};
TrialViews make_trial_views(const ArticulatedModel& model, const ExperimentConfig& config, int count,
                            std::uint64_t trial_seed);

struct TrendVerdict {
  bool cd_drop = false;       // CD(2) <= 0.9 CD(1)
  bool cd_hold = false;       // CD(4) <= 1.05 CD(2)
  bool iou_rise = false;      // IoU non-decreasing 1 -> 2 -> 4 within one point
  bool ok() const { return cd_drop && cd_hold && iou_rise; }
  std::string text;
};

EvalReport cmd_view_sweep(const ExperimentConfig& config, std::uint64_t seed);
TrendVerdict view_trend(const EvalReport& report);

struct AblationSummary {
  std::string baseline, variant;
  int views = 0;
  int trials = 0;
  int baseline_wins = 0;  // baseline strictly lower center error
  double max_baseline_error = 0.0;
};

EvalReport cmd_ablate(const ExperimentConfig& config, std::uint64_t seed);
std::vector<AblationSummary> ablation_wins(const EvalReport& report);

}  // namespace arecon
