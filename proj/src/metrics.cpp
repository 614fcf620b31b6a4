#include "arecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "arecon/inside_test.hpp"
#include "arecon/point_index.hpp"

namespace arecon {
namespace {

double mean_nn2(std::span<const Vec3> from, const PointIndex& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest(p).dist2;
  return sum / static_cast<double>(from.size());
}

double xent(bool match) { return match ? 0.0 : -std::log(kLossEpsilon); }

void check_pair(const MapBundle& p, const MapBundle& g) {
  if (p.height != g.height || p.width != g.width || p.num_joints != g.num_joints || p.num_parts != g.num_parts) {
    throw Error("losses: prediction and ground truth shapes differ");
  }
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error("chamfer: empty point set");
  const PointIndex ia(a), ib(b);
  return 100.0 * (mean_nn2(a, ib) + mean_nn2(b, ia));
}

std::size_t OccupancyGrid::count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), 1));
}

std::vector<Vec3> lattice_centers(std::uint32_t r) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(r) * r * r);
  for (std::uint32_t z = 0; z < r; ++z)
    for (std::uint32_t y = 0; y < r; ++y)
      for (std::uint32_t x = 0; x < r; ++x) pts.emplace_back((x + 0.5) / r, (y + 0.5) / r, (z + 0.5) / r);
  return pts;
}

OccupancyGrid gt_occupancy_grid(const ArticulatedModel& model, const Pose& pose, std::uint32_t resolution) {
  const auto pts = lattice_centers(resolution);
  const auto inside = gt_occupancy(model, pose, pts);
  OccupancyGrid g{resolution, std::vector<std::uint8_t>(inside.begin(), inside.end())};
  return g;
}

OccupancyGrid mesh_occupancy_grid(const TriangleMesh& mesh, std::uint32_t resolution) {
  const auto pts = lattice_centers(resolution);
  OccupancyGrid g{resolution, std::vector<std::uint8_t>(pts.size(), 0)};
  if (mesh.empty()) return g;
  const InsideTester tester(mesh);
  for (std::size_t i = 0; i < pts.size(); ++i) g.occupied[i] = tester.inside(pts[i]) ? 1 : 0;
  return g;
}

double iou(const OccupancyGrid& a, const OccupancyGrid& b, bool* degenerate) {
  if (a.resolution != b.resolution || a.occupied.size() != b.occupied.size()) {
    throw Error("iou: resolution mismatch");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.occupied.size(); ++i) {
    inter += a.occupied[i] && b.occupied[i];
    uni += a.occupied[i] || b.occupied[i];
  }
  if (degenerate) *degenerate = uni == 0;
  if (uni == 0) return 100.0;
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

void LossWeights::validate() const {
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw Error("loss weights must be finite and non-negative");
  }
}

nlohmann::json LossWeights::to_json() const {
  nlohmann::json j;
  for (std::size_t i = 0; i < 7; ++i) j["lambda" + std::to_string(i + 1)] = lambda[i];
  return j;
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  if (!j.is_object()) throw Error("loss weights must be an object");
  for (const auto& [key, value] : j.items()) {
    std::size_t k = 0;
    if (key.size() == 7 && key.rfind("lambda", 0) == 0 && key[6] >= '1' && key[6] <= '7') {
      k = static_cast<std::size_t>(key[6] - '1');
    } else {
      throw Error("unknown loss weight '" + key + "'");
    }
    if (!value.is_number()) throw Error("loss weight '" + key + "' must be a number");
    w.lambda[k] = value.get<double>();
  }
  w.validate();
  return w;
}

LossTerms losses(std::span<const MapBundle> pred, std::span<const MapBundle> gt,
                 std::span<const FeaturedPointCloud> pred_canonical, std::span<const FeaturedPointCloud> gt_canonical,
                 const LossWeights& weights) {
  weights.validate();
  if (pred.size() != gt.size() || pred.empty()) throw Error("losses: need matching, non-empty view lists");
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0, l6 = 0;
  std::size_t fg = 0, pixels = 0, fg_joint = 0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    const auto& p = pred[v];
    const auto& g = gt[v];
    check_pair(p, g);
    for (std::size_t px = 0; px < g.pixels(); ++px) {
      ++pixels;
      l2 += xent((p.mask[px] != 0) == (g.mask[px] != 0));
      if (!g.mask[px]) continue;
      ++fg;
      l1 += (p.coord(px) - g.coord(px)).squaredNorm();
      l6 += xent(p.part_labels[px] == g.part_labels[px]);
      for (std::size_t j = 0; j < g.num_joints; ++j) {
        ++fg_joint;
        const float* a = p.vote(px, j);
        const float* b = g.vote(px, j);
        for (int k = 0; k < 3; ++k) {
          l3 += std::pow(double(a[k]) - b[k], 2);
          l4 += std::pow(double(a[k + 3]) - b[k + 3], 2);
        }
      }
    }
  }
  LossTerms out;
  if (fg) {
    out.terms[0] = l1 / fg;
    out.terms[5] = l6 / fg;
  }
  if (fg_joint) {
    out.terms[2] = l3 / fg_joint;
    out.terms[3] = l4 / fg_joint;
  }
  out.terms[1] = l2 / pixels;

  // L5: pairwise agreement of per-view aggregated joint centers. Rotations
  // differ legitimately between views seen at different articulations.
  if (pred.size() < 2) {
    out.single_view = true;
  } else {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t j = 0; j < pred.front().num_joints; ++j) {
      std::vector<Vec3> centers;
      for (const auto& b : pred) {
        const FeaturedPointCloud c = lift(b);
        try {
          centers.push_back(aggregate_joint(std::span(&c, 1), j).center);
        } catch (const Error&) {
          // view did not observe this joint
        }
      }
      for (std::size_t a = 0; a < centers.size(); ++a)
        for (std::size_t b = a + 1; b < centers.size(); ++b, ++pairs) sum += (centers[a] - centers[b]).squaredNorm();
    }
    out.terms[4] = pairs ? sum / pairs : 0.0;
  }

  // L7: canonical points matched by (view, pixel).
  std::map<std::pair<std::uint32_t, std::uint32_t>, Vec3> truth;
  for (const auto& c : gt_canonical)
    for (std::size_t i = 0; i < c.size(); ++i) truth[{c.view_ids[i], c.pixels[i]}] = c.points[i];
  double l7 = 0.0;
  std::size_t matched = 0;
  for (const auto& c : pred_canonical) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto it = truth.find({c.view_ids[i], c.pixels[i]});
      if (it == truth.end()) continue;
      l7 += (c.points[i] - it->second).squaredNorm();
      ++matched;
    }
  }
  out.terms[6] = matched ? l7 / matched : 0.0;

  for (std::size_t i = 0; i < 7; ++i) out.total += weights.lambda[i] * out.terms[i];
  return out;
}

double coverage(std::span<const Vec3> cloud, std::span<const Vec3> reference, double radius) {
  if (cloud.empty() || reference.empty()) throw Error("coverage: empty point set");
  const PointIndex index(cloud);
  const double r2 = radius * radius;
  std::size_t hit = 0;
  for (const auto& p : reference) hit += index.nearest(p).dist2 <= r2;
  return static_cast<double>(hit) / static_cast<double>(reference.size());
}

std::vector<SummaryRow> EvalReport::summary() const {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<const TrialRecord*>> groups;
  for (const auto& t : trials) {
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const SummaryRow& r) { return r.variant == t.variant && r.views == t.views; });
    if (it == rows.end()) {
      rows.push_back({t.variant, t.views});
      groups.emplace_back();
      it = rows.end() - 1;
    }
    groups[it - rows.begin()].push_back(&t);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& g = groups[r];
    // Failed trials carry NaN metrics and are left out of the statistics.
    auto stats = [&](auto field, double& mean, double& sd) {
      double sum = 0.0, n = 0.0;
      for (auto* t : g)
        if (std::isfinite(field(*t))) sum += field(*t), n += 1.0;
      mean = n > 0 ? sum / n : std::nan("");
      double var = 0.0;
      for (auto* t : g)
        if (std::isfinite(field(*t))) var += std::pow(field(*t) - mean, 2);
      sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    };
    rows[r].trials = g.size();
    double unused = 0.0;
    stats([](const TrialRecord& t) { return t.cd; }, rows[r].cd_mean, rows[r].cd_std);
    stats([](const TrialRecord& t) { return t.iou; }, rows[r].iou_mean, rows[r].iou_std);
    stats([](const TrialRecord& t) { return t.center_error; }, rows[r].center_error_mean, unused);
  }
  return rows;
}

std::string EvalReport::to_csv() const {
  std::string out = "# experiment=" + experiment + " noise=" + noise + " seed=" + std::to_string(seed) +
                    " cd=bidirectional mean squared distance x100, iou in percent\n";
  out += "variant,views,trial,seed,cd,iou,center_error,coverage\n";
  char buf[256];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%llu,%.9g,%.9g,%.9g,%.9g\n", t.variant.c_str(), t.views, t.trial,
                  static_cast<unsigned long long>(t.seed), t.cd, t.iou, t.center_error, t.coverage);
    out += buf;
  }
  return out;
}

std::string EvalReport::summary_text() const {
  std::string out = experiment + " (noise " + noise + ", seed " + std::to_string(seed) + ")\n";
  out += "CD: bidirectional mean squared nearest-neighbour distance x100; IoU: percent, on occupancy lattices\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %5s %6s %18s %18s %12s\n", "variant", "views", "trials", "CD mean +- std",
                "IoU mean +- std", "center err");
  out += buf;
  // Columns an experiment does not measure are all-NaN; show them as "-".
  const auto cell = [](double mean, double sd, int digits) {
    char c[40];
    if (std::isnan(mean)) std::snprintf(c, sizeof c, "%18s", "-");
    else std::snprintf(c, sizeof c, "%9.*f +- %-6.*f", digits, mean, digits, sd);
    return std::string(c);
  };
  for (const auto& r : summary()) {
    std::snprintf(buf, sizeof buf, "%-12s %5d %6zu %s %s %12.6f\n", r.variant.c_str(), r.views, r.trials,
                  cell(r.cd_mean, r.cd_std, 4).c_str(), cell(r.iou_mean, r.iou_std, 2).c_str(), r.center_error_mean);
    out += buf;
  }
  return out;
}

}  // namespace arecon
