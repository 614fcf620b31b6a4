#include <cstdio>
#include <sstream>

#include "arecon/canon.hpp"
#include "binio.hpp"

namespace arecon {

// Vertex properties, in order: x y z (double), f0..f{C-1} (float), label
// (ushort), view (uint), pixel (uint), then per joint j: conf{j} and
// vote{j}_0..5 (float). Dimensions are repeated in a comment line so the
// reader can check the property list.
std::string encode_cloud_ply(const FeaturedPointCloud& c) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\n";
  h << "comment arecon cloud joints " << c.num_joints << " parts " << c.num_parts << " channels " << c.channels
    << "\n";
  h << "element vertex " << c.size() << "\n";
  h << "property double x\nproperty double y\nproperty double z\n";
  for (std::uint32_t k = 0; k < c.channels; ++k) h << "property float f" << k << "\n";
  h << "property ushort label\nproperty uint view\nproperty uint pixel\n";
  for (std::uint32_t j = 0; j < c.num_joints; ++j) {
    h << "property float conf" << j << "\n";
    for (int k = 0; k < 6; ++k) h << "property float vote" << j << "_" << k << "\n";
  }
  h << "end_header\n";
  binio::Writer w;
  w.raw(h.str());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int a = 0; a < 3; ++a) w.put(c.points[i][a]);
    for (std::uint32_t k = 0; k < c.channels; ++k) w.put(c.features[i * c.channels + k]);
    w.put(c.labels[i]);
    w.put(c.view_ids[i]);
    w.put(c.pixels[i]);
    for (std::uint32_t j = 0; j < c.num_joints; ++j) {
      w.put(c.confidence(i, j));
      const float* v = c.vote(i, j);
      for (int k = 0; k < 6; ++k) w.put(v[k]);
    }
  }
  return w.take();
}

FeaturedPointCloud decode_cloud_ply(std::string_view bytes) {
  binio::Reader r(bytes, "cloud ply");
  if (r.line() != "ply") throw Error("cloud ply: missing magic");
  if (r.line() != "format binary_little_endian 1.0") throw Error("cloud ply: unsupported format");
  FeaturedPointCloud c;
  long long n = -1;
  bool dims = false;
  std::size_t properties = 0;
  for (;;) {
    const std::string line(r.line());
    if (line == "end_header") break;
    unsigned nj = 0, np = 0, ch = 0;
    if (std::sscanf(line.c_str(), "comment arecon cloud joints %u parts %u channels %u", &nj, &np, &ch) == 3) {
      c.num_joints = nj;
      c.num_parts = np;
      c.channels = ch;
      dims = true;
    } else if (line.rfind("element vertex ", 0) == 0) {
      n = std::stoll(line.substr(15));
    } else if (line.rfind("property ", 0) == 0) {
      ++properties;
    } else if (line.rfind("comment", 0) != 0) {
      throw Error("cloud ply: unexpected header line '" + line + "'");
    }
  }
  if (!dims || n < 0) throw Error("cloud ply: header lacks cloud dimensions or vertex count");
  if (properties != 6 + c.channels + 7ull * c.num_joints) throw Error("cloud ply: property list does not match dimensions");
  const std::size_t count = static_cast<std::size_t>(n);
  const std::size_t stride = 24 + 4 * c.channels + 10 + 28 * c.num_joints;
  if (r.remaining() != count * stride) throw Error("cloud ply: body size does not match header");
  c.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = r.get<double>();
    c.points.push_back(p);
    for (std::uint32_t k = 0; k < c.channels; ++k) c.features.push_back(r.get<float>());
    c.labels.push_back(r.get<std::uint16_t>());
    c.view_ids.push_back(r.get<std::uint32_t>());
    c.pixels.push_back(r.get<std::uint32_t>());
    for (std::uint32_t j = 0; j < c.num_joints; ++j) {
      c.confidences.push_back(r.get<float>());
      for (int k = 0; k < 6; ++k) c.votes.push_back(r.get<float>());
    }
  }
  return c;
}

}  // namespace arecon
