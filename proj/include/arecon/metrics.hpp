#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arecon/artmodel.hpp"
#include "arecon/canon.hpp"

namespace arecon {

/// Bidirectional mean squared nearest-neighbour distance, times 100.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

// R^3 occupancy sampled at voxel centers (i + 0.5) / R, same layout as the
// voxel grid.
struct OccupancyGrid {
  std::uint32_t resolution = 0;
  std::vector<std::uint8_t> occupied;

  std::size_t count() const;
  bool operator==(const OccupancyGrid&) const = default;
};

std::vector<Vec3> lattice_centers(std::uint32_t resolution);
OccupancyGrid gt_occupancy_grid(const ArticulatedModel& model, const Pose& pose, std::uint32_t resolution = 64);
/// Ray-parity occupancy of a closed mesh; an empty mesh gives an empty grid.
OccupancyGrid mesh_occupancy_grid(const TriangleMesh& mesh, std::uint32_t resolution = 64);

/// |A and B| / |A or B| * 100; 100 with `degenerate` set when both are empty.
double iou(const OccupancyGrid& a, const OccupancyGrid& b, bool* degenerate = nullptr);

struct LossWeights {
  std::array<double, 7> lambda = {1.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
  bool operator==(const LossWeights&) const = default;
};

struct LossTerms {
  std::array<double, 7> terms{};
  double total = 0.0;
  bool single_view = false;  // L5 undefined for one view and reported as 0
};

// Cross-entropy terms compare hard predictions against hard targets with
// probabilities floored at this value: a match costs exactly 0, a mismatch
// costs -log(kLossEpsilon).
inline constexpr double kLossEpsilon = 1e-6;

// pred/gt: bundles of the same views in the same order. pred_canonical /
// gt_canonical: canonicalized clouds, matched point-to-point by (view, pixel).
LossTerms losses(std::span<const MapBundle> pred, std::span<const MapBundle> gt,
                 std::span<const FeaturedPointCloud> pred_canonical, std::span<const FeaturedPointCloud> gt_canonical,
                 const LossWeights& weights = {});

/// Fraction of `reference` points within `radius` of some `cloud` point.
double coverage(std::span<const Vec3> cloud, std::span<const Vec3> reference, double radius);

struct TrialRecord {
  std::string variant;
  int views = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double cd = 0.0;
  double iou = 0.0;
  double center_error = 0.0;
  double coverage = 0.0;
};

struct SummaryRow {
  std::string variant;
  int views = 0;
  std::size_t trials = 0;
  double cd_mean = 0.0, cd_std = 0.0;
  double iou_mean = 0.0, iou_std = 0.0;
  double center_error_mean = 0.0;
};

struct EvalReport {
  std::string experiment;
  std::string noise;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> trials;

  /// One row per (variant, view count) in first-appearance order.
  std::vector<SummaryRow> summary() const;
  std::string to_csv() const;
  std::string summary_text() const;
};

}  // namespace arecon
