#include "arecon/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>

#include "arecon/seeding.hpp"

namespace arecon {
namespace {

constexpr float kCoordMin = -0.1f;
constexpr float kCoordMax = 1.1f;

// Nearest foreground pixel (4-connected BFS distance) for every pixel; -1
// when the bundle has no foreground.
std::vector<long> nearest_foreground(const MapBundle& b) {
  const std::size_t px = b.pixels();
  std::vector<long> source(px, -1);
  std::deque<std::size_t> queue;
  for (std::size_t p = 0; p < px; ++p) {
    if (b.mask[p]) {
      source[p] = static_cast<long>(p);
      queue.push_back(p);
    }
  }
  const long w = b.width, h = b.height;
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    const long r = static_cast<long>(p) / w, c = static_cast<long>(p) % w;
    const long nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
      const std::size_t q = static_cast<std::size_t>(n[0] * w + n[1]);
      if (source[q] >= 0) continue;
      source[q] = source[p];
      queue.push_back(q);
    }
  }
  return source;
}

void copy_pixel(MapBundle& dst, std::size_t to, const MapBundle& src, std::size_t from) {
  const std::size_t nj = src.num_joints, C = src.channels;
  std::copy_n(&src.coords[3 * from], 3, &dst.coords[3 * to]);
  dst.part_labels[to] = src.part_labels[from];
  std::copy_n(&src.votes[from * nj * 6], nj * 6, &dst.votes[to * nj * 6]);
  std::copy_n(&src.confidences[from * nj], nj, &dst.confidences[to * nj]);
  std::copy_n(&src.features[from * C], C, &dst.features[to * C]);
}

void clear_pixel(MapBundle& b, std::size_t p) {
  const std::size_t nj = b.num_joints, C = b.channels;
  std::fill_n(&b.coords[3 * p], 3, 0.0f);
  b.part_labels[p] = 0;
  std::fill_n(&b.votes[p * nj * 6], nj * 6, 0.0f);
  std::fill_n(&b.confidences[p * nj], nj, 0.0f);
  std::fill_n(&b.features[p * C], C, 0.0f);
}

}  // namespace

void NoiseModel::validate() const {
  for (double s : {sigma_coord, sigma_center, sigma_rot, vote_spread}) {
    if (!(s >= 0.0)) throw Error("noise model: standard deviations must be >= 0");
  }
  for (double p : {p_mask_flip, p_part_mislabel, outlier_fraction, outlier_confidence}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("noise model: probabilities must be in [0, 1]");
  }
  if (!(kappa > 0.0)) throw Error("noise model: kappa must be positive");
}

bool NoiseModel::is_clean() const {
  return sigma_coord == 0.0 && p_mask_flip == 0.0 && sigma_center == 0.0 && sigma_rot == 0.0 &&
         p_part_mislabel == 0.0 && outlier_fraction == 0.0;
}

NoiseModel NoiseModel::preset(std::string_view name) {
  NoiseModel n;
  if (name == "clean") return n;
  if (name == "mild") {
    n.sigma_coord = 0.005;
    n.sigma_center = 0.005;
    n.sigma_rot = 0.02;
    n.p_mask_flip = 0.01;
    n.p_part_mislabel = 0.01;
    return n;
  }
  if (name == "heavy") {
    n.sigma_coord = 0.02;
    n.sigma_center = 0.02;
    n.sigma_rot = 0.08;
    n.p_mask_flip = 0.05;
    n.p_part_mislabel = 0.05;
    return n;
  }
  throw Error("unknown noise preset '" + std::string(name) + "' (expected clean, mild, heavy)");
}

nlohmann::json NoiseModel::to_json() const {
  return {{"sigma_coord", sigma_coord},   {"p_mask_flip", p_mask_flip},
          {"sigma_center", sigma_center}, {"sigma_rot", sigma_rot},
          {"p_part_mislabel", p_part_mislabel}, {"kappa", kappa},
          {"vote_spread", vote_spread},   {"outlier_fraction", outlier_fraction},
          {"outlier_confidence", outlier_confidence}, {"seed", seed}};
}

NoiseModel NoiseModel::from_json(const nlohmann::json& j) {
  NoiseModel n;
  if (j.is_string()) {
    n = preset(j.get<std::string>());
  } else {
    try {
      if (j.contains("preset")) n = preset(j.at("preset").get<std::string>());
      n.sigma_coord = j.value("sigma_coord", n.sigma_coord);
      n.p_mask_flip = j.value("p_mask_flip", n.p_mask_flip);
      n.sigma_center = j.value("sigma_center", n.sigma_center);
      n.sigma_rot = j.value("sigma_rot", n.sigma_rot);
      n.p_part_mislabel = j.value("p_part_mislabel", n.p_part_mislabel);
      n.kappa = j.value("kappa", n.kappa);
      n.vote_spread = j.value("vote_spread", n.vote_spread);
      n.outlier_fraction = j.value("outlier_fraction", n.outlier_fraction);
      n.outlier_confidence = j.value("outlier_confidence", n.outlier_confidence);
      n.seed = j.value("seed", n.seed);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("noise model: ") + e.what());
    }
  }
  n.validate();
  return n;
}

MapBundle corrupt(const MapBundle& bundle, const NoiseModel& noise) {
  noise.validate();
  MapBundle out = bundle;
  if (noise.is_clean()) return out;

  std::mt19937_64 rng(derive_seed(noise.seed, {static_cast<std::uint64_t>(bundle.view_id)}));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t px = bundle.pixels();
  const std::size_t nj = bundle.num_joints;

  if (noise.p_mask_flip > 0.0) {
    const auto source = nearest_foreground(bundle);
    for (std::size_t p = 0; p < px; ++p) {
      if (uni(rng) >= noise.p_mask_flip) continue;
      if (bundle.mask[p]) {
        out.mask[p] = 0;
        clear_pixel(out, p);
      } else if (source[p] >= 0) {
        // Spurious foreground borrows its nearest true pixel, i.e. lands near the silhouette.
        out.mask[p] = 1;
        copy_pixel(out, p, bundle, static_cast<std::size_t>(source[p]));
      }
    }
  }

  const double spread = noise.vote_spread;
  const bool vote_noise = noise.sigma_center > 0.0 || noise.sigma_rot > 0.0;
  for (std::size_t p = 0; p < px; ++p) {
    if (!out.mask[p]) continue;
    if (noise.sigma_coord > 0.0) {
      for (int k = 0; k < 3; ++k) {
        const double v = out.coords[3 * p + k] + noise.sigma_coord * normal(rng);
        out.coords[3 * p + k] = std::clamp(static_cast<float>(v), kCoordMin, kCoordMax);
      }
    }
    if (noise.p_part_mislabel > 0.0 && uni(rng) < noise.p_part_mislabel) {
      out.part_labels[p] = static_cast<std::uint16_t>(
          std::min<std::size_t>(static_cast<std::size_t>(uni(rng) * bundle.num_parts), bundle.num_parts - 1));
    }
    const double scale = vote_noise ? std::exp(spread * normal(rng) - spread * spread) : 0.0;
    const bool outlier = noise.outlier_fraction > 0.0 && uni(rng) < noise.outlier_fraction;
    for (std::size_t j = 0; j < nj; ++j) {
      float* v = out.vote(p, j);
      double e2 = 0.0;
      if (outlier) {
        Vec3 c(uni(rng), uni(rng), uni(rng));
        Vec3 r;
        do {
          r = Vec3(2.0 * uni(rng) - 1.0, 2.0 * uni(rng) - 1.0, 2.0 * uni(rng) - 1.0);
        } while (r.norm() > 1.0);
        r *= std::numbers::pi;
        for (int k = 0; k < 3; ++k) {
          e2 += (c[k] - v[k]) * (c[k] - v[k]) + (r[k] - v[3 + k]) * (r[k] - v[3 + k]);
          v[k] = static_cast<float>(c[k]);
          v[3 + k] = static_cast<float>(r[k]);
        }
        out.confidences[p * nj + j] =
            static_cast<float>(std::min(std::exp(-noise.kappa * e2), noise.outlier_confidence));
        continue;
      }
      if (vote_noise) {
        for (int k = 0; k < 3; ++k) {
          const double dc = scale * noise.sigma_center * normal(rng);
          const double dr = scale * noise.sigma_rot * normal(rng);
          v[k] = static_cast<float>(v[k] + dc);
          v[3 + k] = static_cast<float>(v[3 + k] + dr);
          e2 += dc * dc + dr * dr;
        }
      }
      out.confidences[p * nj + j] = static_cast<float>(std::exp(-noise.kappa * e2));
    }
  }
  return out;
}

}  // namespace arecon
