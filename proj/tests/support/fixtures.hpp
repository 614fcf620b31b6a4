#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "arecon/artmodel.hpp"
#include "arecon/synth.hpp"

#ifndef ARECON_DATA_DIR
#error "tests need ARECON_DATA_DIR"
#endif

namespace fixtures {

inline std::filesystem::path model_path(const std::string& category) {
  return std::filesystem::path(ARECON_DATA_DIR) / "models" / (category + ".json");
}

inline arecon::ArticulatedModel golden(const std::string& category) {
  return arecon::normalize_to_container(arecon::load_model(model_path(category)));
}

inline arecon::Pose pose_of(std::initializer_list<double> angles) { return arecon::Pose{std::vector<double>(angles)}; }

/// Camera looking at the container center from `dir` at distance 2.
inline arecon::Camera camera_from(const arecon::Vec3& dir, int size = 64) {
  arecon::Camera c;
  c.eye = arecon::Vec3::Constant(0.5) + 2.0 * dir.normalized();
  c.up = std::abs(dir.normalized().z()) > 0.9 ? arecon::Vec3::UnitY() : arecon::Vec3::UnitZ();
  c.width = c.height = size;
  return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("arecon_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
