#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arecon/artmodel.hpp"

namespace arecon {

struct Camera {
  Vec3 eye = Vec3(0.5, -1.5, 0.5);
  Vec3 target = Vec3::Constant(0.5);
  Vec3 up = Vec3::UnitZ();
  double vfov = 1.3;  // radians
  int width = 64;
  int height = 64;

  void validate() const;
  /// Unit direction of the primary ray through the center of pixel (col, row).
  Vec3 ray_direction(int col, int row) const;
};

struct CameraIntrinsics {
  double vfov = 1.3;
  int width = 64;
  int height = 64;
};

/// `count` cameras on random spherical positions around the container center.
std::vector<Camera> make_cameras(int count, double radius_min, double radius_max, std::uint64_t seed,
                                 const CameraIntrinsics& intrinsics = {});

// Per-view rasters of all stage-1 quantities. Pixel p = row * width + col.
struct MapBundle {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t num_joints = 0;
  std::uint32_t num_parts = 0;
  std::uint32_t channels = 0;
  std::vector<float> pose;
  std::vector<float> coords;          // H*W*3
  std::vector<std::uint8_t> mask;     // H*W
  std::vector<std::uint16_t> part_labels;  // H*W
  std::vector<float> votes;           // H*W*N_J*6: center xyz, axis-angle xyz
  std::vector<float> confidences;     // H*W*N_J
  std::vector<float> features;        // H*W*C

  // Not part of the file format.
  int view_id = 0;
  bool camera_inside = false;

  static MapBundle blank(std::uint32_t h, std::uint32_t w, std::uint32_t nj, std::uint32_t np, std::uint32_t c);

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t foreground() const;
  float* vote(std::size_t pixel, std::size_t joint) { return &votes[(pixel * num_joints + joint) * 6]; }
  const float* vote(std::size_t pixel, std::size_t joint) const {
    return &votes[(pixel * num_joints + joint) * 6];
  }
  Vec3 coord(std::size_t pixel) const {
    return {coords[3 * pixel], coords[3 * pixel + 1], coords[3 * pixel + 2]};
  }

  /// Equality over every serialized field.
  bool same_content(const MapBundle& other) const;
};

struct RayHit {
  bool hit = false;
  double t = 0.0;
  std::uint32_t face = 0;
  double u = 0.0, v = 0.0;  // barycentric weights of face vertices 1 and 2
};

// First-hit ray caster over a triangle soup (Moller-Trumbore, all triangles).
class RayCaster {
 public:
  explicit RayCaster(TriangleMesh mesh) : mesh_(std::move(mesh)) {}
  RayHit cast(const Vec3& origin, const Vec3& dir) const;
  const TriangleMesh& mesh() const { return mesh_; }

 private:
  TriangleMesh mesh_;
};

struct RenderOptions {
  std::uint32_t channels = 8;
};

/// Ground-truth bundle for `model` at `pose` seen from `camera`.
MapBundle render_view(const ArticulatedModel& model, const Pose& pose, const Camera& camera,
                      const RenderOptions& options = {});

struct Augmentation {
  int copies = 0;  // augmented instances per model, in addition to the original
  double min_scale = 0.8;
  double max_scale = 1.25;
};

struct DatasetConfig {
  int poses_per_model = 20;
  int views_per_pose = 8;
  double radius_min = 1.5;
  double radius_max = 2.5;
  CameraIntrinsics intrinsics;
  std::uint32_t channels = 8;
  Augmentation augmentation;
};

struct ModelSource {
  std::string id;
  ArticulatedModel model;  // as parsed; normalized during generation
};

struct DatasetManifest {
  struct View {
    Camera camera;
    std::string file;
  };
  struct PoseRecord {
    std::vector<double> angles;
    std::vector<View> views;
  };
  struct ModelRecord {
    std::string id;
    std::string category;
    std::string spec_file;
    Vec3 scale = Vec3::Ones();
    std::vector<PoseRecord> poses;
  };

  std::uint64_t seed = 0;
  DatasetConfig config;
  std::vector<ModelRecord> models;

  std::size_t bundle_count() const;
  std::string to_text() const;
  static DatasetManifest from_text(const std::string& text);
};

/// True when every pose within the joint limits keeps all vertices in [0,1]^3.
bool sweep_fits_container(const ArticulatedModel& model);

DatasetManifest generate_dataset(const std::vector<ModelSource>& models, const DatasetConfig& config,
                                 const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace arecon
