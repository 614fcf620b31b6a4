#include <doctest.h>

#include <set>

#include "arecon/fileio.hpp"
#include "arecon/nmap_io.hpp"
#include "arecon/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace arecon;

namespace {

// Barycentric coordinates of x in triangle (a, b, c), by area ratios.
Vec3 barycentric(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double area = n.squaredNorm();
  return {n.dot((c - b).cross(x - b)) / area, n.dot((a - c).cross(x - c)) / area, n.dot((b - a).cross(x - a)) / area};
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("make_cameras: radius range, target and determinism") {
  const auto cams = make_cameras(8, 1.5, 2.5, 3);
  REQUIRE(cams.size() == 8);
  for (const auto& c : cams) {
    const double r = (c.eye - Vec3::Constant(0.5)).norm();
    CHECK(r >= 1.5);
    CHECK(r <= 2.5);
    CHECK(c.target == Vec3::Constant(0.5));
  }
  const auto one = make_cameras(1, 1.5, 2.5, 4);
  CHECK(one.size() == 1);
  CHECK(one[0].target == Vec3::Constant(0.5));
  const auto again = make_cameras(8, 1.5, 2.5, 3);
  for (std::size_t i = 0; i < 8; ++i) CHECK(again[i].eye == cams[i].eye);
  CHECK_THROWS_AS(make_cameras(0, 1.5, 2.5, 1), Error);
  CHECK_THROWS_AS(make_cameras(2, 2.5, 1.5, 1), Error);
}

TEST_CASE("camera validation") {
  Camera c;
  CHECK_NOTHROW(c.validate());
  c.vfov = 3.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = Camera{};
  c.width = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = Camera{};
  c.eye = c.target;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("render: background, containment and laptop lid votes") {
  const auto m = fixtures::golden("laptop");
  const double theta = 1.1;
  const Pose pose = fixtures::pose_of({theta});
  const Camera cam = fixtures::camera_from(Vec3(0.3, -1.0, 0.8));
  const MapBundle b = render_view(m, pose, cam);
  REQUIRE(b.foreground() > 100);
  CHECK(b.foreground() < b.pixels());
  const int lid = m.joints[0].moving_part;
  std::size_t lid_pixels = 0;
  for (std::size_t p = 0; p < b.pixels(); ++p) {
    if (!b.mask[p]) {
      CHECK(b.confidences[p] == 0.0f);
      continue;
    }
    const Vec3 c = b.coord(p);
    CHECK((c.array() >= 0.0).all());
    CHECK((c.array() <= 1.0).all());
    CHECK(b.confidences[p] == 1.0f);
    CHECK(b.part_labels[p] < m.num_parts());
    if (b.part_labels[p] != lid) continue;
    ++lid_pixels;
    const float* v = b.vote(p, 0);
    const Vec3 r(v[3], v[4], v[5]);
    CHECK(r.norm() == doctest::Approx(theta).epsilon(1e-6));
    CHECK((r.normalized() - m.joints[0].axis).norm() < 1e-6);
  }
  CHECK(lid_pixels > 50);
}

TEST_CASE("render: unrotated lid coordinates match the rest surface via barycentrics") {
  const auto m = fixtures::golden("laptop");
  const double theta = 0.9;
  const Pose pose = fixtures::pose_of({theta});
  const auto& j = m.joints[0];
  const Camera cam = fixtures::camera_from(Vec3(-0.4, -1.0, 0.7));
  const MapBundle b = render_view(m, pose, cam);
  const TriangleMesh posed = posed_mesh(m, pose);
  const TriangleMesh rest = posed_mesh(m, Pose::zeros(1));
  double worst = 0.0;
  int checked = 0;
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const std::size_t p = static_cast<std::size_t>(row) * cam.width + col;
      if (!b.mask[p] || b.part_labels[p] != j.moving_part) continue;
      // Independent first hit on the posed mesh.
      const Vec3 d = cam.ray_direction(col, row);
      double best = 1e30;
      std::size_t face = 0;
      for (std::size_t f = 0; f < posed.faces.size(); ++f) {
        const auto& t = posed.faces[f];
        const double h = oracle::ray_triangle(cam.eye, d, posed.vertices[t[0]], posed.vertices[t[1]], posed.vertices[t[2]]);
        if (h > 0 && h < best) {
          best = h;
          face = f;
        }
      }
      const auto& t = posed.faces[face];
      const Vec3 hit = cam.eye + best * d;
      const Vec3 w = barycentric(hit, posed.vertices[t[0]], posed.vertices[t[1]], posed.vertices[t[2]]);
      const Vec3 rest_point = w[0] * rest.vertices[t[0]] + w[1] * rest.vertices[t[1]] + w[2] * rest.vertices[t[2]];
      const Vec3 unrotated = oracle::rodrigues(b.coord(p), j.pivot, j.axis, -theta);
      worst = std::max(worst, (unrotated - rest_point).norm());
      ++checked;
    }
  }
  CHECK(checked > 50);
  CHECK(worst < 1e-6);
}

TEST_CASE("silhouette matches a brute-force intersection check on random views") {
  const auto m = fixtures::golden("eyeglasses");
  const Pose pose = fixtures::pose_of({0.4, 1.2});
  const TriangleMesh posed = posed_mesh(m, pose);
  const auto cams = make_cameras(5, 1.5, 2.5, 11, CameraIntrinsics{1.3, 32, 32});
  for (const auto& cam : cams) {
    const MapBundle b = render_view(m, pose, cam);
    int mismatches = 0;
    for (int row = 0; row < cam.height; ++row)
      for (int col = 0; col < cam.width; ++col) {
        const bool hit = oracle::ray_hits_mesh(posed, cam.eye, cam.ray_direction(col, row));
        mismatches += hit != (b.mask[static_cast<std::size_t>(row) * cam.width + col] != 0);
      }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("vote validity: inverse vote rotation lands on the rest surface") {
  for (const char* cat : {"laptop", "oven", "eyeglasses"}) {
    const auto m = fixtures::golden(cat);
    Pose pose = Pose::zeros(m.num_joints());
    for (std::size_t j = 0; j < pose.angles.size(); ++j) pose.angles[j] = 0.6 * m.joints[j].upper;
    const TriangleMesh rest = posed_mesh(m, Pose::zeros(m.num_joints()));
    const auto cam = make_cameras(1, 1.8, 1.8, 5, CameraIntrinsics{1.3, 24, 24}).front();
    const MapBundle b = render_view(m, pose, cam);
    const auto owner = m.part_joints();
    double worst = 0.0;
    for (std::size_t p = 0; p < b.pixels(); ++p) {
      if (!b.mask[p]) continue;
      const int j = owner[b.part_labels[p]];
      Vec3 x = b.coord(p);
      if (j >= 0) {
        const float* v = b.vote(p, j);
        const Vec3 r(v[3], v[4], v[5]);
        x = oracle::rodrigues(x, Vec3(v[0], v[1], v[2]), r, -r.norm());
      }
      worst = std::max(worst, oracle::point_mesh_distance(rest, x));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("camera inside geometry yields a flagged all-background bundle") {
  const auto m = fixtures::golden("oven");
  Camera cam;
  cam.eye = Vec3(0.5, 0.5, 0.4);  // inside the body box
  cam.target = Vec3(0.5, 0.9, 0.4);
  const MapBundle b = render_view(m, Pose::zeros(1), cam);
  CHECK(b.camera_inside);
  CHECK(b.foreground() == 0);
}

TEST_CASE("render rejects poses outside the limits") {
  const auto m = fixtures::golden("laptop");
  CHECK_THROWS_AS(render_view(m, fixtures::pose_of({2.5}), Camera{}), Error);
}

TEST_CASE("features carry the normal and one-hot part") {
  const auto m = fixtures::golden("eyeglasses");
  const MapBundle b = render_view(m, fixtures::pose_of({0.3, 0.3}), fixtures::camera_from(Vec3(0.2, -1, 0.3), 32));
  for (std::size_t p = 0; p < b.pixels(); ++p) {
    if (!b.mask[p]) continue;
    const float* f = &b.features[p * b.channels];
    CHECK(Vec3(f[0], f[1], f[2]).norm() == doctest::Approx(1.0).epsilon(1e-6));
    for (std::uint32_t k = 0; k < m.num_parts(); ++k) CHECK(f[3 + k] == (k == b.part_labels[p] ? 1.0f : 0.0f));
    for (std::uint32_t k = 3 + m.num_parts(); k < b.channels; ++k) CHECK(f[k] == 0.0f);
  }
}

TEST_CASE("NMAP round trip, truncation and bad magic") {
  const auto m = fixtures::golden("eyeglasses");
  const MapBundle b = render_view(m, fixtures::pose_of({0.5, 0.7}), fixtures::camera_from(Vec3(1, -1, 1), 16));
  const std::string bytes = encode_nmap(b);
  CHECK(bytes.substr(0, 4) == "NMAP");
  const std::size_t px = 256;
  CHECK(bytes.size() == 4 + 6 * 4 + 2 * 4 + px * (12 + 1 + 2 + 2 * 24 + 2 * 4 + 8 * 4));
  CHECK(decode_nmap(bytes).same_content(b));
  CHECK_THROWS_AS(decode_nmap(bytes.substr(0, bytes.size() - 1)), Error);
  CHECK_THROWS_AS(decode_nmap(bytes + "x"), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_nmap(bad), Error);
}

TEST_CASE("dataset: counts, single bundle identity and byte-identical regeneration") {
  const auto m = fixtures::golden("laptop");
  DatasetConfig cfg;
  cfg.poses_per_model = 3;
  cfg.views_per_pose = 2;
  cfg.intrinsics = {1.3, 16, 16};
  const auto dir_a = fixtures::scratch_dir("ds_a");
  const auto dir_b = fixtures::scratch_dir("ds_b");
  const auto ma = generate_dataset({{"laptop", m}}, cfg, dir_a, 99);
  CHECK(ma.bundle_count() == 6);
  generate_dataset({{"laptop", m}}, cfg, dir_b, 99);
  for (const auto& p : ma.models[0].poses)
    for (const auto& v : p.views) CHECK(fnv1a64(read_file(dir_a / v.file)) == fnv1a64(read_file(dir_b / v.file)));
  CHECK(read_file(dir_a / "manifest.json") == read_file(dir_b / "manifest.json"));
  CHECK(DatasetManifest::from_text(read_file(dir_a / "manifest.json")).to_text() == ma.to_text());

  DatasetConfig one;
  one.poses_per_model = 1;
  one.views_per_pose = 1;
  one.intrinsics = {1.3, 16, 16};
  const auto dir_c = fixtures::scratch_dir("ds_c");
  const auto mc = generate_dataset({{"laptop", m}}, one, dir_c, 5);
  REQUIRE(mc.bundle_count() == 1);
  const auto& rec = mc.models[0].poses[0];
  const MapBundle direct = render_view(m, Pose{rec.angles}, rec.views[0].camera);
  CHECK(read_nmap(dir_c / rec.views[0].file).same_content(direct));
}

TEST_CASE("dataset: paper-scale counts and in-limit poses") {
  const auto m = fixtures::golden("oven");
  DatasetConfig cfg;  // 20 poses x 8 views
  cfg.intrinsics = {1.3, 8, 8};
  const auto dir = fixtures::scratch_dir("ds_full");
  const auto man = generate_dataset({{"oven", m}}, cfg, dir, 1);
  CHECK(man.bundle_count() == 160);
  for (const auto& p : man.models[0].poses) {
    CHECK(p.angles[0] >= m.joints[0].lower);
    CHECK(p.angles[0] <= m.joints[0].upper);
  }
}

TEST_CASE("dataset: augmented copies are rescaled and still fit the container") {
  const auto m = fixtures::golden("eyeglasses");
  DatasetConfig cfg;
  cfg.poses_per_model = 1;
  cfg.views_per_pose = 1;
  cfg.intrinsics = {1.3, 8, 8};
  cfg.augmentation.copies = 2;
  const auto dir = fixtures::scratch_dir("ds_aug");
  const auto man = generate_dataset({{"glasses", m}}, cfg, dir, 3);
  REQUIRE(man.models.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    const Vec3 s = man.models[i].scale;
    CHECK((s.array() >= 0.8).all());
    CHECK((s.array() <= 1.25).all());
    const auto inst = load_model(dir / man.models[i].spec_file);
    CHECK(sweep_fits_container(inst));
  }
  CHECK_THROWS_AS(generate_dataset({}, cfg, dir, 1), Error);
}

TEST_CASE("dataset: unwritable output directory is an error") {
  DatasetConfig cfg;
  cfg.poses_per_model = 1;
  cfg.views_per_pose = 1;
  CHECK_THROWS_AS(generate_dataset({{"laptop", fixtures::golden("laptop")}}, cfg, "/proc/arecon_nope", 1), Error);
}

}  // TEST_SUITE
