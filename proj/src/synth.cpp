#include "arecon/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "arecon/fileio.hpp"
#include "arecon/nmap_io.hpp"
#include "arecon/seeding.hpp"

namespace arecon {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json camera_json(const Camera& c) {
  return {{"eye", vec_json(c.eye)},     {"target", vec_json(c.target)}, {"up", vec_json(c.up)},
          {"vfov", c.vfov},             {"width", c.width},             {"height", c.height}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.eye = json_vec(j.at("eye"));
  c.target = json_vec(j.at("target"));
  c.up = json_vec(j.at("up"));
  c.vfov = j.at("vfov").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

}  // namespace

// Checks vertices along a dense sweep of each joint; parts move independently.
bool sweep_fits_container(const ArticulatedModel& model) {
  constexpr int kSteps = 128;
  constexpr double kTol = 1e-9;
  auto inside = [](const Vec3& v) {
    return (v.array() >= -kTol).all() && (v.array() <= 1.0 + kTol).all();
  };
  for (const auto& part : model.parts) {
    for (const auto& s : part.shells) {
      for (const auto& v : s.vertices) {
        if (part.joint < 0) {
          if (!inside(v)) return false;
          continue;
        }
        const auto& j = model.joints[part.joint];
        for (int k = 0; k <= kSteps; ++k) {
          const double a = j.lower + (j.upper - j.lower) * k / kSteps;
          if (!inside(rotate_about(v, j.pivot, axis_angle_matrix(j.axis, a)))) return false;
        }
      }
    }
  }
  return true;
}

void Camera::validate() const {
  if ((eye - target).norm() == 0.0) throw Error("camera: eye equals target");
  if (!(vfov > 0.0 && vfov < 3.14159265358979)) throw Error("camera: vfov must be in (0, pi)");
  if (width < 8 || height < 8) throw Error("camera: image must be at least 8x8");
  if (up.norm() == 0.0) throw Error("camera: zero up vector");
}

Vec3 Camera::ray_direction(int col, int row) const {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) right = forward.cross(Vec3::UnitX());
  right.normalize();
  const Vec3 true_up = right.cross(forward);
  const double tan_half = std::tan(0.5 * vfov);
  const double aspect = static_cast<double>(width) / height;
  const double x = (2.0 * (col + 0.5) / width - 1.0) * tan_half * aspect;
  const double y = (1.0 - 2.0 * (row + 0.5) / height) * tan_half;
  return (forward + x * right + y * true_up).normalized();
}

std::vector<Camera> make_cameras(int count, double radius_min, double radius_max, std::uint64_t seed,
                                 const CameraIntrinsics& intrinsics) {
  if (count < 1) throw Error("make_cameras: count must be >= 1");
  if (!(radius_min > 0.0 && radius_min <= radius_max)) throw Error("make_cameras: bad radius range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(radius_min, radius_max);
  const Vec3 center = Vec3::Constant(0.5);
  std::vector<Camera> cams;
  for (int i = 0; i < count; ++i) {
    Vec3 dir;
    do {
      dir = Vec3(normal(rng), normal(rng), normal(rng));
    } while (dir.norm() < 1e-6);
    dir.normalize();
    const double r = uni(rng);
    Camera c;
    c.eye = center + r * dir;
    c.target = center;
    c.up = std::abs(dir.z()) > 0.99 ? Vec3::UnitY() : Vec3::UnitZ();
    c.vfov = intrinsics.vfov;
    c.width = intrinsics.width;
    c.height = intrinsics.height;
    cams.push_back(c);
  }
  return cams;
}

MapBundle MapBundle::blank(std::uint32_t h, std::uint32_t w, std::uint32_t nj, std::uint32_t np, std::uint32_t c) {
  MapBundle b;
  b.height = h;
  b.width = w;
  b.num_joints = nj;
  b.num_parts = np;
  b.channels = c;
  const std::size_t px = static_cast<std::size_t>(h) * w;
  b.pose.assign(nj, 0.0f);
  b.coords.assign(px * 3, 0.0f);
  b.mask.assign(px, 0);
  b.part_labels.assign(px, 0);
  b.votes.assign(px * nj * 6, 0.0f);
  b.confidences.assign(px * nj, 0.0f);
  b.features.assign(px * c, 0.0f);
  return b;
}

std::size_t MapBundle::foreground() const {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

bool MapBundle::same_content(const MapBundle& o) const {
  return height == o.height && width == o.width && num_joints == o.num_joints && num_parts == o.num_parts &&
         channels == o.channels && pose == o.pose && coords == o.coords && mask == o.mask &&
         part_labels == o.part_labels && votes == o.votes && confidences == o.confidences &&
         features == o.features;
}

RayHit RayCaster::cast(const Vec3& origin, const Vec3& dir) const {
  constexpr double kEps = 1e-12;
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
    const auto& tri = mesh_.faces[f];
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3 e1 = mesh_.vertices[tri[1]] - a;
    const Vec3 e2 = mesh_.vertices[tri[2]] - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < kEps) continue;
    const double inv = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(q) * inv;
    if (t > 1e-9 && t < best.t) {
      best = {true, t, static_cast<std::uint32_t>(f), u, v};
    }
  }
  return best;
}

MapBundle render_view(const ArticulatedModel& model, const Pose& pose, const Camera& camera,
                      const RenderOptions& options) {
  camera.validate();
  require_pose_in_limits(model, pose);
  const auto nj = static_cast<std::uint32_t>(model.num_joints());
  const auto np = static_cast<std::uint32_t>(model.num_parts());
  const auto C = options.channels;
  MapBundle b = MapBundle::blank(static_cast<std::uint32_t>(camera.height),
                                 static_cast<std::uint32_t>(camera.width), nj, np, C);
  for (std::size_t j = 0; j < nj; ++j) b.pose[j] = static_cast<float>(pose.angles[j]);

  const Vec3 eye = camera.eye;
  if (gt_occupancy(model, pose, std::span<const Vec3>(&eye, 1))[0]) {
    b.camera_inside = true;
    return b;
  }

  std::vector<int> face_parts;
  const RayCaster caster(posed_mesh(model, pose, &face_parts));
  const auto& mesh = caster.mesh();

  // Ground-truth joint state is shared by every pixel.
  std::vector<std::array<float, 6>> gt_votes(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& jt = model.joints[j];
    const Vec3 r = jt.axis * pose.angles[j];
    gt_votes[j] = {static_cast<float>(jt.pivot.x()), static_cast<float>(jt.pivot.y()),
                   static_cast<float>(jt.pivot.z()), static_cast<float>(r.x()),
                   static_cast<float>(r.y()),        static_cast<float>(r.z())};
  }

  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      const RayHit hit = caster.cast(eye, camera.ray_direction(col, row));
      if (!hit.hit) continue;
      const std::size_t px = static_cast<std::size_t>(row) * camera.width + col;
      const auto& tri = mesh.faces[hit.face];
      const Vec3 p = (1.0 - hit.u - hit.v) * mesh.vertices[tri[0]] + hit.u * mesh.vertices[tri[1]] +
                     hit.v * mesh.vertices[tri[2]];
      b.mask[px] = 1;
      for (int k = 0; k < 3; ++k) b.coords[3 * px + k] = static_cast<float>(p[k]);
      const int part = face_parts[hit.face];
      b.part_labels[px] = static_cast<std::uint16_t>(part);
      for (std::size_t j = 0; j < nj; ++j) {
        std::copy(gt_votes[j].begin(), gt_votes[j].end(), b.vote(px, j));
        b.confidences[px * nj + j] = 1.0f;
      }
      // Feature: surface normal followed by one-hot part, padded/truncated to C.
      std::vector<float> feat(3 + np, 0.0f);
      const Vec3 n = mesh.face_normal(hit.face);
      for (int k = 0; k < 3; ++k) feat[k] = static_cast<float>(n[k]);
      feat[3 + part] = 1.0f;
      for (std::size_t c = 0; c < C && c < feat.size(); ++c) b.features[px * C + c] = feat[c];
    }
  }
  return b;
}

std::size_t DatasetManifest::bundle_count() const {
  std::size_t n = 0;
  for (const auto& m : models) {
    for (const auto& p : m.poses) n += p.views.size();
  }
  return n;
}

std::string DatasetManifest::to_text() const {
  json doc;
  doc["format"] = "arecon-dataset";
  doc["version"] = 1;
  doc["seed"] = seed;
  doc["config"] = {{"poses_per_model", config.poses_per_model},
                   {"views_per_pose", config.views_per_pose},
                   {"radius", {config.radius_min, config.radius_max}},
                   {"vfov", config.intrinsics.vfov},
                   {"width", config.intrinsics.width},
                   {"height", config.intrinsics.height},
                   {"channels", config.channels},
                   {"augmentation",
                    {{"copies", config.augmentation.copies},
                     {"min_scale", config.augmentation.min_scale},
                     {"max_scale", config.augmentation.max_scale}}}};
  doc["models"] = json::array();
  for (const auto& m : models) {
    json mj{{"id", m.id}, {"category", m.category}, {"spec", m.spec_file}, {"scale", vec_json(m.scale)}};
    mj["poses"] = json::array();
    for (const auto& p : m.poses) {
      json pj{{"angles", p.angles}};
      pj["views"] = json::array();
      for (const auto& v : p.views) pj["views"].push_back({{"file", v.file}, {"camera", camera_json(v.camera)}});
      mj["poses"].push_back(pj);
    }
    doc["models"].push_back(mj);
  }
  return doc.dump(1) + "\n";
}

DatasetManifest DatasetManifest::from_text(const std::string& text) {
  DatasetManifest m;
  try {
    const json doc = json::parse(text);
    m.seed = doc.at("seed").get<std::uint64_t>();
    const auto& c = doc.at("config");
    m.config.poses_per_model = c.at("poses_per_model").get<int>();
    m.config.views_per_pose = c.at("views_per_pose").get<int>();
    m.config.radius_min = c.at("radius").at(0).get<double>();
    m.config.radius_max = c.at("radius").at(1).get<double>();
    m.config.intrinsics.vfov = c.at("vfov").get<double>();
    m.config.intrinsics.width = c.at("width").get<int>();
    m.config.intrinsics.height = c.at("height").get<int>();
    m.config.channels = c.at("channels").get<std::uint32_t>();
    m.config.augmentation.copies = c.at("augmentation").at("copies").get<int>();
    m.config.augmentation.min_scale = c.at("augmentation").at("min_scale").get<double>();
    m.config.augmentation.max_scale = c.at("augmentation").at("max_scale").get<double>();
    for (const auto& mj : doc.at("models")) {
      ModelRecord rec;
      rec.id = mj.at("id").get<std::string>();
      rec.category = mj.at("category").get<std::string>();
      rec.spec_file = mj.at("spec").get<std::string>();
      rec.scale = json_vec(mj.at("scale"));
      for (const auto& pj : mj.at("poses")) {
        PoseRecord pr;
        pr.angles = pj.at("angles").get<std::vector<double>>();
        for (const auto& vj : pj.at("views")) {
          pr.views.push_back({camera_from_json(vj.at("camera")), vj.at("file").get<std::string>()});
        }
        rec.poses.push_back(std::move(pr));
      }
      m.models.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("manifest: malformed: ") + e.what());
  }
  return m;
}

DatasetManifest generate_dataset(const std::vector<ModelSource>& models, const DatasetConfig& config,
                                 const std::filesystem::path& out_dir, std::uint64_t seed) {
  if (models.empty()) throw Error("generate_dataset: no models");
  if (config.poses_per_model < 1 || config.views_per_pose < 1) throw Error("generate_dataset: counts must be >= 1");
  const auto& aug = config.augmentation;
  if (aug.copies < 0 || !(aug.min_scale > 0.0 && aug.min_scale <= aug.max_scale)) {
    throw Error("generate_dataset: bad augmentation parameters");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "models", ec);
  if (ec) throw Error("generate_dataset: cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.config = config;

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const ArticulatedModel base = normalize_to_container(models[mi].model);
    for (int copy = 0; copy <= aug.copies; ++copy) {
      DatasetManifest::ModelRecord rec;
      rec.id = copy == 0 ? models[mi].id : models[mi].id + "_aug" + std::to_string(copy);
      rec.category = base.category;
      ArticulatedModel instance = base;
      if (copy > 0) {
        // Non-uniform scaling, redrawn until the articulated sweep fits the container.
        std::mt19937_64 rng(derive_seed(seed, {mi, static_cast<std::uint64_t>(copy), 0xa9u}));
        std::uniform_real_distribution<double> uni(aug.min_scale, aug.max_scale);
        bool found = false;
        for (int attempt = 0; attempt < 256 && !found; ++attempt) {
          const Vec3 s(uni(rng), uni(rng), uni(rng));
          ArticulatedModel candidate = normalize_to_container(scale_model(base, s));
          if (sweep_fits_container(candidate)) {
            instance = std::move(candidate);
            rec.scale = s;
            found = true;
          }
        }
        if (!found) throw Error("generate_dataset: no augmentation of '" + rec.id + "' fits the container");
      }
      rec.spec_file = "models/" + rec.id + ".json";
      write_file_atomic(out_dir / rec.spec_file, serialize_model(instance));
      std::filesystem::create_directories(out_dir / rec.id, ec);
      if (ec) throw Error("generate_dataset: cannot create model directory: " + ec.message());

      for (int pi = 0; pi < config.poses_per_model; ++pi) {
        const std::uint64_t pose_seed =
            derive_seed(seed, {mi, static_cast<std::uint64_t>(copy), static_cast<std::uint64_t>(pi)});
        std::mt19937_64 rng(pose_seed);
        Pose pose = Pose::zeros(instance.num_joints());
        for (std::size_t j = 0; j < pose.angles.size(); ++j) {
          std::uniform_real_distribution<double> uni(instance.joints[j].lower, instance.joints[j].upper);
          pose.angles[j] = uni(rng);
        }
        require_pose_in_limits(instance, pose);
        DatasetManifest::PoseRecord pr;
        pr.angles = pose.angles;
        const auto cams = make_cameras(config.views_per_pose, config.radius_min, config.radius_max,
                                       mix_seed(pose_seed), config.intrinsics);
        for (int vi = 0; vi < config.views_per_pose; ++vi) {
          MapBundle b = render_view(instance, pose, cams[vi], RenderOptions{config.channels});
          char name[64];
          std::snprintf(name, sizeof(name), "p%03d_v%02d.nmap", pi, vi);
          const std::string rel = rec.id + "/" + name;
          write_nmap(out_dir / rel, b);
          pr.views.push_back({cams[vi], rel});
        }
        rec.poses.push_back(std::move(pr));
      }
      manifest.models.push_back(std::move(rec));
    }
  }
  write_file_atomic(out_dir / "manifest.json", manifest.to_text());
  return manifest;
}

}  // namespace arecon
