#include <doctest.h>

#include <random>

#include "arecon/nmap_io.hpp"
#include "arecon/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace arecon;

namespace {

// 128x128 bundle with a centered 100x100 foreground block, GT-style votes.
MapBundle block_bundle(int view_id = 0) {
  MapBundle b = MapBundle::blank(128, 128, 1, 2, 8);
  b.view_id = view_id;
  for (std::uint32_t r = 14; r < 114; ++r)
    for (std::uint32_t c = 14; c < 114; ++c) {
      const std::size_t p = r * 128 + c;
      b.mask[p] = 1;
      b.coords[3 * p] = b.coords[3 * p + 1] = b.coords[3 * p + 2] = 0.5f;
      b.part_labels[p] = c < 64 ? 0 : 1;
      float* v = b.vote(p, 0);
      v[0] = 0.5f, v[1] = 0.6f, v[2] = 0.4f, v[3] = 0.7f, v[4] = 0.0f, v[5] = 0.0f;
      b.confidences[p] = 1.0f;
    }
  return b;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("clean noise is the identity") {
  const MapBundle b = render_view(fixtures::golden("laptop"), fixtures::pose_of({0.4}), fixtures::camera_from(Vec3(0, -1, 1), 32));
  const MapBundle c = corrupt(b, NoiseModel::preset("clean"));
  CHECK(c.same_content(b));
  for (std::size_t p = 0; p < c.pixels(); ++p)
    if (c.mask[p]) CHECK(c.confidences[p] == 1.0f);
}

TEST_CASE("confidence ranks are anti-correlated with injected center error") {
  const MapBundle b = block_bundle();
  NoiseModel n;
  n.sigma_center = 0.02;
  n.kappa = 1000;
  n.seed = 7;
  const MapBundle c = corrupt(b, n);
  std::vector<double> err, conf;
  for (std::size_t p = 0; p < c.pixels(); ++p) {
    if (!c.mask[p]) continue;
    const float* v = c.vote(p, 0);
    err.push_back((Vec3(v[0], v[1], v[2]) - Vec3(0.5f, 0.6f, 0.4f)).norm());
    conf.push_back(c.confidences[p]);
  }
  REQUIRE(err.size() == 10000);
  CHECK(oracle::spearman(err, conf) < -0.9);
}

TEST_CASE("mask flips follow the binomial rate") {
  const MapBundle b = block_bundle();
  NoiseModel n;
  n.p_mask_flip = 0.05;
  n.seed = 3;
  const MapBundle c = corrupt(b, n);
  std::size_t flipped = 0;
  for (std::size_t p = 0; p < b.pixels(); ++p) flipped += b.mask[p] != c.mask[p];
  const double rate = static_cast<double>(flipped) / b.pixels();
  CHECK(rate == doctest::Approx(0.05).epsilon(0.2));  // 0.05 +- 0.01
}

TEST_CASE("flipped-on pixels copy a nearby foreground pixel") {
  const MapBundle b = block_bundle();
  NoiseModel n;
  n.p_mask_flip = 0.2;
  n.seed = 4;
  const MapBundle c = corrupt(b, n);
  for (std::size_t p = 0; p < b.pixels(); ++p) {
    if (b.mask[p] || !c.mask[p]) continue;
    CHECK(c.coord(p) == Vec3::Constant(0.5f));
    CHECK(c.confidences[p] == 1.0f);
  }
}

TEST_CASE("coordinate noise magnitude matches the half-normal and Maxwell means") {
  const MapBundle b = block_bundle();
  NoiseModel n;
  n.sigma_coord = 0.01;
  n.seed = 21;
  const MapBundle c = corrupt(b, n);
  double comp = 0.0, eucl = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < c.pixels(); ++p) {
    if (!c.mask[p]) continue;
    const Vec3 d = c.coord(p) - b.coord(p);
    comp += d.cwiseAbs().sum() / 3.0;
    eucl += d.norm();
    ++count;
  }
  comp /= count;
  eucl /= count;
  // Reference values from a separately seeded sampler.
  std::mt19937 ref_rng(12345);
  std::normal_distribution<double> ref(0.0, 0.01);
  double ref_eucl = 0.0;
  for (int i = 0; i < 100000; ++i) ref_eucl += Vec3(ref(ref_rng), ref(ref_rng), ref(ref_rng)).norm();
  ref_eucl /= 100000;
  const double half_normal = 0.01 * std::sqrt(2.0 / M_PI);
  CHECK(comp == doctest::Approx(half_normal).epsilon(0.05));
  CHECK(eucl == doctest::Approx(2.0 * half_normal).epsilon(0.05));
  CHECK(eucl == doctest::Approx(ref_eucl).epsilon(0.05));
}

TEST_CASE("coordinates are clamped and header fields are preserved") {
  const MapBundle b = block_bundle();
  NoiseModel n = NoiseModel::preset("heavy");
  n.sigma_coord = 0.5;
  n.seed = 2;
  const MapBundle c = corrupt(b, n);
  for (std::size_t p = 0; p < c.pixels(); ++p) {
    if (!c.mask[p]) continue;
    CHECK((c.coord(p).array() >= -0.1f).all());
    CHECK((c.coord(p).array() <= 1.1f).all());
  }
  CHECK(c.height == b.height);
  CHECK(c.width == b.width);
  CHECK(c.num_joints == b.num_joints);
  CHECK(c.num_parts == b.num_parts);
  CHECK(c.channels == b.channels);
  CHECK(c.pose == b.pose);
}

TEST_CASE("corruption is deterministic per seed and view") {
  const MapBundle b = block_bundle(3);
  NoiseModel n = NoiseModel::preset("heavy");
  n.seed = 9;
  CHECK(encode_nmap(corrupt(b, n)) == encode_nmap(corrupt(b, n)));
  MapBundle other = b;
  other.view_id = 4;
  CHECK_FALSE(corrupt(other, n).same_content(corrupt(b, n)));
  n.seed = 10;
  CHECK_FALSE(corrupt(b, n).same_content(corrupt(other, n)));
}

TEST_CASE("outlier votes carry capped confidence") {
  const MapBundle b = block_bundle();
  NoiseModel n = NoiseModel::preset("heavy");
  n.outlier_fraction = 0.2;
  n.seed = 5;
  const MapBundle c = corrupt(b, n);
  std::size_t far = 0;
  for (std::size_t p = 0; p < c.pixels(); ++p) {
    if (!c.mask[p]) continue;
    const float* v = c.vote(p, 0);
    if ((Vec3(v[0], v[1], v[2]) - Vec3(0.5, 0.6, 0.4)).norm() > 0.3) {
      ++far;
      CHECK(c.confidences[p] <= 0.01f);
    }
  }
  CHECK(far > 500);
}

TEST_CASE("noise model presets, validation and JSON") {
  const auto mild = NoiseModel::preset("mild");
  CHECK(mild.sigma_coord == 0.005);
  CHECK(mild.sigma_center == 0.005);
  CHECK(mild.sigma_rot == 0.02);
  CHECK(mild.p_mask_flip == 0.01);
  const auto heavy = NoiseModel::preset("heavy");
  CHECK(heavy.sigma_coord == 0.02);
  CHECK(heavy.sigma_rot == 0.08);
  CHECK(heavy.p_part_mislabel == 0.05);
  CHECK(NoiseModel::preset("clean").is_clean());
  CHECK_THROWS_AS(NoiseModel::preset("extreme"), Error);
  CHECK(NoiseModel::from_json(heavy.to_json()) == heavy);
  CHECK(NoiseModel::from_json(nlohmann::json("mild")) == mild);
  CHECK(NoiseModel::from_json(nlohmann::json{{"preset", "mild"}, {"seed", 4}}).seed == 4);
  NoiseModel bad;
  bad.kappa = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = NoiseModel{};
  bad.p_mask_flip = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = NoiseModel{};
  bad.sigma_rot = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
