#include <cmath>
#include <unordered_map>

#include "arecon/recon.hpp"

namespace arecon {
namespace {

constexpr int kTriTable[256][16] = {
#include "mc_tables.inc"
};

// Corner offsets and edge endpoints in the table's corner numbering.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Keeps interpolation parameters away from 0 and 1 so no two edges emit the
// same position.
constexpr double kIsoGuard = 1e-7;

}  // namespace

TriangleMesh marching_cubes(const ScalarField& field) {
  field.validate();
  const long n = field.resolution;
  const double h = 1.0 / (n - 1);
  // Padded lattice index space [-1, n]; samples outside [0, n) read as 0.
  const long m = n + 2;
  auto value = [&](long x, long y, long z) {
    if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) return 0.0;
    double v = field.at(x, y, z);
    if (std::abs(v - field.iso) < kIsoGuard) v = field.iso + kIsoGuard;
    return v;
  };
  auto key = [&](long x, long y, long z) { return ((z + 1) * m + (y + 1)) * m + (x + 1); };

  TriangleMesh mesh;
  std::unordered_map<long, std::uint32_t> welded;
  for (long z = -1; z < n; ++z) {
    for (long y = -1; y < n; ++y) {
      for (long x = -1; x < n; ++x) {
        double v[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = value(x + kCorner[c][0], y + kCorner[c][1], z + kCorner[c][2]);
          if (v[c] < field.iso) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;
        std::uint32_t ids[12];
        bool have[12] = {};
        const int* row = kTriTable[cube];
        for (int t = 0; row[t] != -1; ++t) {
          const int e = row[t];
          if (have[e]) continue;
          const int a = kEdge[e][0], b = kEdge[e][1];
          const long ax = x + kCorner[a][0], ay = y + kCorner[a][1], az = z + kCorner[a][2];
          const long bx = x + kCorner[b][0], by = y + kCorner[b][1], bz = z + kCorner[b][2];
          // Edge key: lower endpoint plus axis, identical from every cell sharing the edge.
          const long lo = std::min(key(ax, ay, az), key(bx, by, bz));
          const int axis = ax != bx ? 0 : (ay != by ? 1 : 2);
          const long k = lo * 3 + axis;
          auto it = welded.find(k);
          if (it == welded.end()) {
            const double s = (field.iso - v[a]) / (v[b] - v[a]);
            const Vec3 pa(ax * h, ay * h, az * h), pb(bx * h, by * h, bz * h);
            it = welded.emplace(k, static_cast<std::uint32_t>(mesh.vertices.size())).first;
            mesh.vertices.push_back(pa + s * (pb - pa));
          }
          ids[e] = it->second;
          have[e] = true;
        }
        for (int t = 0; row[t] != -1; t += 3) {
          mesh.faces.push_back({ids[row[t]], ids[row[t + 1]], ids[row[t + 2]]});
        }
      }
    }
  }
  return mesh;
}

}  // namespace arecon
