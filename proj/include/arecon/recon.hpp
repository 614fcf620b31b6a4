#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arecon/canon.hpp"

namespace arecon {

// R^3 grid over [0,1]^3. Voxel (x, y, z) is stored at (z * R + y) * R + x; a
// coordinate of exactly 1.0 falls into the last voxel.
struct VoxelFeatureGrid {
  std::uint32_t resolution = 0;
  std::uint32_t channels = 0;
  std::vector<std::uint32_t> counts;
  std::vector<double> mean_features;  // R^3 * C, zero where count == 0

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return (static_cast<std::size_t>(z) * resolution + y) * resolution + x;
  }
  bool occupied(std::size_t voxel) const { return counts[voxel] > 0; }
  std::size_t occupied_count() const;
  /// Voxel containing `p` after clamping into the container.
  std::size_t voxel_of(const Vec3& p) const;

  bool operator==(const VoxelFeatureGrid&) const = default;
};

VoxelFeatureGrid voxelize(const FeaturedPointCloud& cloud, std::uint32_t resolution = 32);

// Values at lattice points i / (R_f - 1), i in [0, R_f), stored like voxels.
struct ScalarField {
  std::uint32_t resolution = 0;
  std::vector<double> values;
  double iso = 0.5;

  double at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return values[(static_cast<std::size_t>(z) * resolution + y) * resolution + x];
  }
  Vec3 lattice_point(std::uint32_t x, std::uint32_t y, std::uint32_t z) const;
  void validate() const;
};

struct FieldParams {
  std::uint32_t resolution = 64;
  double tau = 1.5 / 64;
  double beta = 4.0 * 64;
  // Meshing only. Points with fewer than `min_neighbors` others within
  // 2 tau are left out, and mesh vertices then give up this fraction of
  // their offset from the points.
  double shrink = 0.75;
  std::uint32_t min_neighbors = 2;

  /// Defaults scaled to `resolution`: tau = 1.5 / R_f, beta = 4 R_f, shrink 0.75.
  static FieldParams for_resolution(std::uint32_t resolution);
  void validate() const;
};

/// sigma(beta * (tau - d(x))) with d the distance to the nearest point.
ScalarField occupancy_field(std::span<const Vec3> points, const FieldParams& params);
ScalarField occupancy_field(const FeaturedPointCloud& cloud, const FieldParams& params);

// Raw dump for debugging: "FLD1", u32 R, f32 iso, f32 values[R^3].
std::string encode_field(const ScalarField& field);
ScalarField decode_field(std::string_view bytes);

// Marching cubes over the field lattice. Samples outside the lattice count as
// 0, so surfaces reaching the container boundary are closed there. Triangles
// face away from high values; vertices are shared by lattice-edge key.
TriangleMesh marching_cubes(const ScalarField& field);

/// Points with at least `min_neighbors` others within `radius`.
std::vector<Vec3> drop_isolated(std::span<const Vec3> points, double radius, std::uint32_t min_neighbors);

/// Moves each vertex `shrink` of the way onto the plane fitted to points
/// within 2.5 tau (onto the nearest point when fewer than three are near).
void shrink_to_points(TriangleMesh& mesh, std::span<const Vec3> points, const FieldParams& params);

/// drop_isolated, occupancy_field, marching cubes, then shrink_to_points.
TriangleMesh mesh_from_points(std::span<const Vec3> points, const FieldParams& params);

enum class MeshFormat { kObj, kPly, kJson };

MeshFormat parse_mesh_format(std::string_view name);
std::string export_mesh(const TriangleMesh& mesh, MeshFormat format,
                        const std::vector<int>* part_assignment = nullptr);
TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format, std::vector<int>* part_assignment = nullptr);

}  // namespace arecon
