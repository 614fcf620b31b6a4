// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "arecon/canon.hpp"
#include "arecon/harness.hpp"
#include "arecon/metrics.hpp"
#include "arecon/recon.hpp"
#include "arecon/repose.hpp"
#include "arecon/seeding.hpp"
#include "arecon/service.hpp"
#include "arecon/session.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

// After Eigen, see test_service.cpp.
#include <httplib.h>

using namespace arecon;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Four clean views at assorted openings, reconstructed with defaults.
Reconstruction four_view(const ArticulatedModel& m, const std::vector<double>& scale) {
  const std::vector<Vec3> dirs = {Vec3(0.3, -1, 0.8), Vec3(-0.4, 1, 0.6), Vec3(1, 0.2, -0.5), Vec3(-1, -0.3, -0.4)};
  std::vector<MapBundle> views;
  for (std::size_t v = 0; v < dirs.size(); ++v) {
    Pose p = Pose::zeros(m.num_joints());
    for (std::size_t j = 0; j < p.angles.size(); ++j)
      p.angles[j] = m.joints[j].lower + scale[v] * (m.joints[j].upper - m.joints[j].lower);
    views.push_back(render_view(m, p, fixtures::camera_from(dirs[v], 128)));
    views.back().view_id = static_cast<int>(v);
  }
  return reconstruct(m, views, PipelineConfig{});
}

// 1. Zero-noise end-to-end identity.
void criterion1(Verdict& v) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t points = 0;
  for (const char* cat : {"laptop", "oven", "eyeglasses"}) {
    const auto m = fixtures::golden(cat);
    const auto owner = m.part_joints();
    for (std::uint64_t k = 0; k < 5; ++k) {
      const auto seed = derive_seed(101, {k});
      std::mt19937_64 rng(seed);
      Pose pose = Pose::zeros(m.num_joints());
      for (std::size_t j = 0; j < pose.angles.size(); ++j)
        pose.angles[j] = std::uniform_real_distribution<double>(m.joints[j].lower, m.joints[j].upper)(rng);
      const Camera cam = make_cameras(1, 1.5, 2.5, seed, CameraIntrinsics{1.0, 64, 64}).front();
      const MapBundle truth = render_view(m, pose, cam);
      const auto lifted = lift(corrupt(truth, NoiseModel::preset("clean")));
      const auto can = canonicalize_articulation(lifted, aggregate_joints(std::span(&lifted, 1)), owner);
      // Rest coordinates from the GT posed coordinates and the GT joints.
      for (std::size_t i = 0; i < can.size(); ++i) {
        const std::size_t px = can.pixels[i];
        const Vec3 posed(truth.coords[3 * px], truth.coords[3 * px + 1], truth.coords[3 * px + 2]);
        const int j = owner[truth.part_labels[px]];
        const Vec3 rest = j < 0 ? posed : oracle::rodrigues(posed, m.joints[j].pivot, m.joints[j].axis, -pose.angles[j]);
        worst = std::max(worst, (can.points[i] - rest).norm());
        ++points;
      }
    }
  }
  const double secs = seconds_since(t0);
  v.detail << "15 poses, " << points << " points, max error " << worst << ", " << secs << " s";
  v.require(points > 1000, "too few points");
  v.require(worst < 1e-5, "error >= 1e-5");
  v.require(secs < 30.0, "runtime >= 30 s");
}

// 2. View-sweep trend under mild noise.
void criterion2(Verdict& v) {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.views = {1, 2, 4};
  c.trials = 20;
  c.pipeline.noise = NoiseModel::preset("mild");
  c.pipeline.noise_name = "mild";
  const auto report = cmd_view_sweep(c, 0);
  const auto trend = view_trend(report);
  const double secs = seconds_since(t0);
  v.detail << trend.text << "; " << secs << " s";
  v.require(trend.cd_drop, "CD 1->2");
  v.require(trend.cd_hold, "CD 4 vs 2");
  v.require(trend.iou_rise, "IoU");
  v.require(secs < 600.0, "runtime >= 10 min");
}

OccupancyGrid box(std::uint32_t r, std::array<std::uint32_t, 3> lo, std::array<std::uint32_t, 3> hi) {
  OccupancyGrid g{r, std::vector<std::uint8_t>(static_cast<std::size_t>(r) * r * r, 0)};
  for (std::uint32_t z = lo[2]; z < hi[2]; ++z)
    for (std::uint32_t y = lo[1]; y < hi[1]; ++y)
      for (std::uint32_t x = lo[0]; x < hi[0]; ++x) g.occupied[(static_cast<std::size_t>(z) * r + y) * r + x] = 1;
  return g;
}

// 3. Metric oracles.
void criterion3(Verdict& v) {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double cd_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> a(50), b(50);
    for (auto& p : a) p = Vec3(uni(rng), uni(rng), uni(rng));
    for (auto& p : b) p = Vec3(uni(rng), uni(rng), uni(rng));
    cd_gap = std::max(cd_gap, std::abs(chamfer(a, b) - oracle::brute_chamfer(a, b)));
  }

  double iou_gap = 0.0;
  std::uniform_int_distribution<std::uint32_t> pick(0, 15);
  for (int t = 0; t < 100; ++t) {
    std::array<std::uint32_t, 3> lo1, hi1, lo2, hi2;
    double inter = 1.0, v1 = 1.0, v2 = 1.0;
    for (int k = 0; k < 3; ++k) {
      const auto a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
      lo1[k] = std::min(a, b), hi1[k] = std::max(a, b) + 1;
      lo2[k] = std::min(c, d), hi2[k] = std::max(c, d) + 1;
      inter *= std::max(0.0, double(std::min(hi1[k], hi2[k])) - double(std::max(lo1[k], lo2[k])));
      v1 *= hi1[k] - lo1[k];
      v2 *= hi2[k] - lo2[k];
    }
    iou_gap = std::max(iou_gap, std::abs(iou(box(16, lo1, hi1), box(16, lo2, hi2)) - 100.0 * inter / (v1 + v2 - inter)));
  }
  iou_gap = std::max(iou_gap, std::abs(iou(box(16, {0, 0, 0}, {8, 16, 16}), box(16, {4, 0, 0}, {12, 16, 16})) - 100.0 / 3));

  // Perfect predictions on two real views.
  const auto m = fixtures::golden("eyeglasses");
  std::vector<MapBundle> views;
  std::vector<FeaturedPointCloud> can;
  for (const Vec3& dir : {Vec3(0, -1, 0.4), Vec3(0.7, -1, -0.2)}) {
    views.push_back(render_view(m, fixtures::pose_of({0.3, 0.6}), fixtures::camera_from(dir, 48)));
    views.back().view_id = static_cast<int>(views.size() - 1);
    const auto c = lift(views.back());
    can.push_back(canonicalize_articulation(c, aggregate_joints(std::span(&c, 1)), m.part_joints()));
  }
  const auto perfect = losses(views, views, can, can);
  bool zero = perfect.total == 0.0;
  for (double t : perfect.terms) zero = zero && t == 0.0;

  // Two foreground pixels, hand-computed terms.
  MapBundle gt = MapBundle::blank(1, 2, 1, 2, 1);
  for (std::size_t p = 0; p < 2; ++p) {
    gt.mask[p] = 1;
    gt.coords[3 * p] = 0.25f + 0.5f * p;
    gt.coords[3 * p + 1] = 0.5f;
    gt.coords[3 * p + 2] = 0.75f;
    gt.part_labels[p] = static_cast<std::uint16_t>(p);
    for (int k = 0; k < 3; ++k) gt.vote(p, 0)[k] = 0.5f;
    gt.confidences[p] = 1.0f;
  }
  const double miss = -std::log(kLossEpsilon);
  double hand_gap = 0.0;
  const auto term = [&](const MapBundle& pred, int i) { return losses(std::span(&pred, 1), std::span(&gt, 1), {}, {}).terms[i]; };
  MapBundle p = gt;
  p.coords[0] = 0.5f;  // exactly representable: error 0.25
  hand_gap = std::max(hand_gap, std::abs(term(p, 0) - 0.0625 / 2));
  p = gt;
  p.mask[1] = 0;
  hand_gap = std::max(hand_gap, std::abs(term(p, 1) - miss / 2));
  p = gt;
  p.vote(0, 0)[1] = 0.75f;
  hand_gap = std::max(hand_gap, std::abs(term(p, 2) - 0.0625 / 2));
  p = gt;
  p.vote(1, 0)[5] = -0.5f;
  hand_gap = std::max(hand_gap, std::abs(term(p, 3) - 0.25 / 2));
  p = gt;
  p.part_labels[0] = 1;
  hand_gap = std::max(hand_gap, std::abs(term(p, 5) - miss / 2));

  v.detail << "chamfer gap " << cd_gap << ", iou gap " << iou_gap << ", perfect losses "
           << (zero ? "all 0" : "nonzero") << ", hand-value gap " << hand_gap;
  v.require(cd_gap < 1e-9, "chamfer");
  v.require(iou_gap < 1e-9, "iou");
  v.require(zero, "perfect losses");
  v.require(hand_gap < 1e-12, "hand values");
}

// 4. Analytic sphere through marching cubes.
void criterion4(Verdict& v) {
  const std::uint32_t r = 64;
  const Vec3 c = Vec3::Constant(0.5);
  ScalarField f;
  f.resolution = r;
  f.values.resize(static_cast<std::size_t>(r) * r * r);
  for (std::uint32_t z = 0; z < r; ++z)
    for (std::uint32_t y = 0; y < r; ++y)
      for (std::uint32_t x = 0; x < r; ++x) f.values[(static_cast<std::size_t>(z) * r + y) * r + x] = 0.5 + (0.3 - (f.lattice_point(x, y, z) - c).norm());
  const auto mesh = marching_cubes(f);
  const auto t = analyze_topology(mesh);
  double worst = 0.0;
  for (const auto& p : mesh.vertices) worst = std::max(worst, std::abs((p - c).norm() - 0.3));
  v.detail << mesh.vertices.size() << " vertices, closed manifold " << (t.closed_manifold() ? "yes" : "no") << ", Euler "
           << t.euler_characteristic() << ", worst radial deviation " << worst;
  v.require(t.closed_manifold(), "not a closed 2-manifold");
  v.require(t.euler_characteristic() == 2, "Euler characteristic");
  v.require(worst <= 2.0 / 64, "radius band");
}

// 5. Inverse pairs and per-part rigidity.
void criterion5(Verdict& v) {
  double inv = 0.0, edge = 0.0;
  std::size_t edges = 0;
  for (const char* cat : {"laptop", "eyeglasses"}) {
    const auto m = fixtures::golden(cat);
    const auto r = four_view(m, {0.2, 0.55, 0.4, 0.8});
    const auto& rig = r.rig;
    for (double s : {0.1, 0.5, 0.95}) {
      Pose pose = Pose::zeros(rig.num_joints()), back = pose;
      for (std::size_t j = 0; j < pose.angles.size(); ++j) {
        pose.angles[j] = rig.joints[j].lower + s * (rig.joints[j].upper - rig.joints[j].lower);
        back.angles[j] = -pose.angles[j];
      }
      const auto posed = repose_cloud(r.cloud, rig, pose);
      std::vector<JointEstimate> est(rig.num_joints());
      for (std::size_t j = 0; j < est.size(); ++j) {
        est[j].center = rig.joints[j].center;
        est[j].rotation = pose.angles[j] * rig.joints[j].axis;
      }
      const auto undone = canonicalize_articulation(posed, est, rig.part_joints);
      for (std::size_t i = 0; i < undone.size(); ++i) inv = std::max(inv, (undone.points[i] - r.cloud.points[i]).norm());

      const auto there = repose_mesh(r.mesh, r.binding, rig, pose);
      const auto again = repose_mesh(there, r.binding, rig, back);
      for (std::size_t i = 0; i < again.vertices.size(); ++i)
        inv = std::max(inv, (again.vertices[i] - r.mesh.vertices[i]).norm());

      for (const auto& f : r.mesh.faces)
        for (int e = 0; e < 3; ++e) {
          const auto a = f[e], b = f[(e + 1) % 3];
          if (r.binding.parts[a] != r.binding.parts[b]) continue;
          edge = std::max(edge, std::abs((there.vertices[a] - there.vertices[b]).norm() -
                                         (r.mesh.vertices[a] - r.mesh.vertices[b]).norm()));
          ++edges;
        }
      // Cloud: consecutive same-part points stand in for edges.
      for (std::size_t i = 1; i < posed.size(); ++i) {
        if (posed.labels[i] != posed.labels[i - 1]) continue;
        edge = std::max(edge, std::abs((posed.points[i] - posed.points[i - 1]).norm() -
                                       (r.cloud.points[i] - r.cloud.points[i - 1]).norm()));
        ++edges;
      }
    }
  }
  v.detail << "worst inverse gap " << inv << ", worst edge change " << edge << " over " << edges << " edges";
  v.require(inv < 1e-9, "inverse pair");
  v.require(edge < 1e-9, "edge length");
  v.require(edges > 10000, "too few edges");
}

// 6. Weighted votes against uniform votes with outliers.
void criterion6(Verdict& v) {
  const auto m = fixtures::golden("laptop");
  NoiseModel noise = NoiseModel::preset("heavy");
  noise.outlier_fraction = 0.2;
  noise.outlier_confidence = 0.01;
  int wins = 0, trials = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto seed = derive_seed(606, {t});
    std::mt19937_64 rng(seed);
    const Pose pose{{std::uniform_real_distribution<double>(m.joints[0].lower, m.joints[0].upper)(rng)}};
    const Camera cam = make_cameras(1, 1.5, 2.5, derive_seed(seed, {1}), CameraIntrinsics{1.0, 128, 128}).front();
    noise.seed = derive_seed(seed, {2});
    const auto c = lift(corrupt(render_view(m, pose, cam), noise));
    ++trials;
    if (c.empty()) {
      worst = std::numeric_limits<double>::infinity();
      continue;
    }
    const double w = (aggregate_joint(std::span(&c, 1), 0).center - m.joints[0].pivot).norm();
    const double u = (aggregate_joint(std::span(&c, 1), 0, VoteWeighting::kUniform).center - m.joints[0].pivot).norm();
    wins += w < u;
    worst = std::max(worst, w);
  }
  v.detail << "weighted wins " << wins << "/" << trials << ", worst weighted center error " << worst;
  v.require(worst < 0.005, "center error");
  v.require(wins >= 95, "wins");
}

// 7. Default loss weights through a config round trip.
void criterion7(Verdict& v) {
  const std::array<double, 7> want = {1.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0};
  const auto text = PipelineConfig{}.to_json().dump();
  const auto back = PipelineConfig::from_json(json::parse(text));
  const auto exp_back = ExperimentConfig::from_json(json::parse(ExperimentConfig{}.to_json().dump()));
  v.detail << "lambda after round trip " << json(back.loss_weights.lambda).dump();
  v.require(LossWeights{}.lambda == want, "defaults");
  v.require(back.loss_weights.lambda == want, "pipeline round trip");
  v.require(exp_back.pipeline.loss_weights.lambda == want, "experiment round trip");
}

// 8. Service contract over real HTTP on a saved laptop session.
void criterion8(Verdict& v) {
  const auto m = fixtures::golden("laptop");
  const auto r = four_view(m, {0.15, 0.55, 0.4, 0.8});
  Session s;
  s.id = "golden-laptop";
  s.model_spec = serialize_model(m);
  s.cloud = r.cloud;
  s.estimates = r.estimates;
  s.rig = r.rig;
  s.mesh = r.mesh;
  s.binding = r.binding;
  s.field = PipelineConfig{}.field;
  const auto dir = fixtures::scratch_dir("acceptance_session");
  save_session(s, dir);
  const ReposeService svc(load_session(dir));

  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  const std::string body = R"({"angles": [1.1], "strategy": "mesh-skin"})";
  const auto t0 = Clock::now();
  auto a = client.Post("/repose", body, "application/json");
  const double ms = 1000.0 * seconds_since(t0);
  auto b = client.Post("/repose", body, "application/json");
  auto over = client.Post("/repose", R"({"angles": [2.6]})", "application/json");
  auto strict = client.Post("/repose?strict=1", R"({"angles": [2.6]})", "application/json");
  server.stop();
  thread.join();

  bool valid = false, clamped = false;
  std::size_t verts = 0;
  if (a && a->status == 200) {
    const auto j = json::parse(a->body);
    TriangleMesh mesh;
    for (const auto& p : j["mesh"]["vertices"]) mesh.vertices.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    for (const auto& f : j["mesh"]["faces"]) mesh.faces.push_back({f[0].get<std::uint32_t>(), f[1].get<std::uint32_t>(), f[2].get<std::uint32_t>()});
    verts = mesh.vertices.size();
    try {
      mesh.validate();
      valid = verts > 0 && mesh.faces == svc.session().mesh.faces;
    } catch (const Error&) {
    }
  }
  if (over && over->status == 200) {
    const auto j = json::parse(over->body);
    clamped = j["clamped"] == true && j["angles"][0] == m.joints[0].upper;
  }
  const bool same = a && b && a->body == b->body;
  v.detail << "mesh-skin " << verts << " vertices in " << ms << " ms, valid " << (valid ? "yes" : "no") << ", clamp flagged "
           << (clamped ? "yes" : "no") << ", strict status " << (strict ? strict->status : -1) << ", repeat bytes "
           << (same ? "identical" : "differ");
  v.require(valid, "mesh validity");
  v.require(ms < 2000.0, "latency");
  v.require(clamped, "clamping");
  v.require(strict && strict->status == 422, "strict refusal");
  v.require(same, "determinism");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"1 zero-noise identity", criterion1},  {"2 view-sweep trend", criterion2},
      {"3 metric oracles", criterion3},       {"4 marching-cubes sphere", criterion4},
      {"5 inverse-pair identities", criterion5}, {"6 weighted-vote robustness", criterion6},
      {"7 default loss weights", criterion7}, {"8 service contract", criterion8}};
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
