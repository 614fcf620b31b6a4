#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "arecon/synth.hpp"

namespace arecon {

// Parameterized corruption standing in for stage-1 prediction error.
//
// Vote noise is heteroscedastic: each foreground pixel draws a log-normal
// scale s with E[s^2] = 1 (log-std `vote_spread`), and its center and
// rotation errors are s times isotropic normals of std sigma_center /
// sigma_rot. Confidence per pixel and joint is exp(-kappa * e^2) with e the
// norm of the injected 6D vote error.
struct NoiseModel {
  double sigma_coord = 0.0;
  double p_mask_flip = 0.0;
  double sigma_center = 0.0;
  double sigma_rot = 0.0;
  double p_part_mislabel = 0.0;
  double kappa = 100.0;
  double vote_spread = 1.5;
  // Fraction of pixels whose votes are replaced by uniform junk, with
  // confidence capped at `outlier_confidence`.
  double outlier_fraction = 0.0;
  double outlier_confidence = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_clean() const;

  /// `clean`, `mild`, or `heavy`.
  static NoiseModel preset(std::string_view name);

  nlohmann::json to_json() const;
  static NoiseModel from_json(const nlohmann::json& j);
  bool operator==(const NoiseModel&) const = default;
};

/// Corrupted copy of a ground-truth bundle; deterministic per (noise.seed, bundle.view_id).
MapBundle corrupt(const MapBundle& bundle, const NoiseModel& noise);

}  // namespace arecon
