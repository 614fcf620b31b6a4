#include "arecon/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>

#include "arecon/fileio.hpp"
#include "arecon/nmap_io.hpp"
#include "arecon/seeding.hpp"

#ifndef ARECON_DATA_DIR
#define ARECON_DATA_DIR "data"
#endif

namespace arecon {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& what) {
  if (!j.is_object()) throw Error(what + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(what + ": unknown key '" + key + "'");
  }
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

double mean_center_error(const std::vector<Vec3>& centers, const ArticulatedModel& model) {
  double sum = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) sum += (centers[j] - model.joints[j].pivot).norm();
  return sum / static_cast<double>(centers.size());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Nearest ancestor directory holding a dataset manifest.
fs::path find_manifest_dir(const fs::path& bundle) {
  fs::path dir = fs::weakly_canonical(fs::absolute(bundle)).parent_path();
  for (;;) {
    if (fs::exists(dir / "manifest.json")) return dir;
    if (dir == dir.parent_path()) break;
    dir = dir.parent_path();
  }
  throw Error("no dataset manifest found above " + bundle.string());
}

}  // namespace

json PipelineConfig::to_json() const {
  json noise_json = noise.to_json();
  noise_json["preset"] = noise_name;
  return {{"noise", noise_json},
          {"weighting", weighting == VoteWeighting::kConfidence ? "confidence" : "uniform"},
          {"center", combined_center ? "combined" : "per-view"},
          {"field",
           {{"resolution", field.resolution},
            {"tau", field.tau},
            {"beta", field.beta},
            {"shrink", field.shrink},
            {"min_neighbors", field.min_neighbors}}},
          {"voxel_resolution", voxel_resolution},
          {"loss_weights", loss_weights.to_json()}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  reject_unknown(j, {"noise", "weighting", "center", "field", "voxel_resolution", "loss_weights"}, "pipeline config");
  guarded("pipeline config", [&] {
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      // A preset name recorded next to explicit fields is only a label.
      if (n.is_string()) {
        c.noise_name = n.get<std::string>();
      } else if (n.is_object()) {
        c.noise_name = n.value("preset", "custom");
      } else {
        throw Error("pipeline config: noise must be a preset name or an object");
      }
      c.noise = NoiseModel::from_json(n);
    }
    if (j.contains("weighting")) {
      const auto w = j["weighting"].get<std::string>();
      if (w == "confidence") c.weighting = VoteWeighting::kConfidence;
      else if (w == "uniform") c.weighting = VoteWeighting::kUniform;
      else throw Error("pipeline config: weighting must be 'confidence' or 'uniform'");
    }
    if (j.contains("center")) {
      const auto m = j["center"].get<std::string>();
      if (m != "combined" && m != "per-view") throw Error("pipeline config: center must be 'combined' or 'per-view'");
      c.combined_center = m == "combined";
    }
    if (j.contains("field")) {
      const auto& f = j["field"];
      reject_unknown(f, {"resolution", "tau", "beta", "shrink", "min_neighbors"}, "field config");
      c.field = FieldParams::for_resolution(f.value("resolution", c.field.resolution));
      c.field.tau = f.value("tau", c.field.tau);
      c.field.beta = f.value("beta", c.field.beta);
      c.field.shrink = f.value("shrink", 0.75);
      c.field.min_neighbors = f.value("min_neighbors", c.field.min_neighbors);
    }
    c.voxel_resolution = j.value("voxel_resolution", c.voxel_resolution);
    if (j.contains("loss_weights")) c.loss_weights = LossWeights::from_json(j["loss_weights"]);
    return 0;
  });
  c.field.validate();
  if (c.voxel_resolution < 8) throw Error("pipeline config: voxel_resolution must be at least 8");
  return c;
}

std::vector<JointEstimate> estimate_joints(const std::vector<FeaturedPointCloud>& lifted, VoteWeighting weighting) {
  std::vector<FeaturedPointCloud> views;
  for (const auto& c : lifted) {
    if (!c.empty()) views.push_back(c);
  }
  if (views.empty()) throw Error("all views have empty foreground");
  return aggregate_joints(views, weighting);
}

std::vector<FeaturedPointCloud> canonicalize_views(const std::vector<FeaturedPointCloud>& lifted,
                                                   const std::vector<JointEstimate>& estimates,
                                                   const std::vector<int>& part_joints, bool combined_center) {
  std::vector<FeaturedPointCloud> out;
  for (const auto& c : lifted) {
    if (c.empty()) continue;
    const std::uint32_t view = c.view_ids.front();
    std::vector<JointEstimate> local;
    for (const auto& e : estimates) {
      JointEstimate v = e;
      for (const auto& pv : e.per_view) {
        if (pv.view_id != view) continue;
        v = e.view(view);
        if (combined_center) v.center = e.center;
      }
      local.push_back(std::move(v));
    }
    out.push_back(canonicalize_articulation(c, local, part_joints));
  }
  return out;
}

Reconstruction reconstruct(const ArticulatedModel& model, const std::vector<MapBundle>& observed,
                           const PipelineConfig& config) {
  Reconstruction r;
  std::set<int> ids;
  for (const auto& b : observed) {
    if (b.num_joints != model.num_joints() || b.num_parts != model.num_parts()) {
      throw Error("reconstruct: bundle joint/part counts do not match the model category");
    }
    if (!ids.insert(b.view_id).second) throw Error("reconstruct: duplicate view id " + std::to_string(b.view_id));
    FeaturedPointCloud c = lift(b);
    if (!c.empty()) r.lifted.push_back(std::move(c));
  }
  if (r.lifted.empty()) throw Error("reconstruct: all views have empty foreground");
  r.estimates = estimate_joints(r.lifted, config.weighting);
  r.canonical = canonicalize_views(r.lifted, r.estimates, model.part_joints(), config.combined_center);
  r.cloud = union_views(r.canonical);
  r.grid = voxelize(r.cloud, config.voxel_resolution);
  r.mesh = mesh_from_points(r.cloud.points, config.field);
  r.rig = make_rig(model, r.estimates);
  r.binding = bind_mesh(r.mesh, r.cloud);
  return r;
}

fs::path data_dir() {
  if (const char* env = std::getenv("ARECON_DATA_DIR"); env && *env) return env;
  return ARECON_DATA_DIR;
}

ArticulatedModel resolve_model(const std::string& name, const fs::path& base_dir) {
  fs::path p = name;
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  if (fs::is_regular_file(p)) return normalize_to_container(load_model(p));
  if (fs::is_regular_file(name)) return normalize_to_container(load_model(name));
  const fs::path builtin = data_dir() / "models" / (name + ".json");
  if (name.find('/') == std::string::npos && fs::is_regular_file(builtin)) {
    return normalize_to_container(load_model(builtin));
  }
  throw Error("model '" + name + "' is neither a spec file nor a built-in category");
}

DatasetManifest cmd_gen_data(const json& config, const fs::path& config_dir, const fs::path& out_dir,
                             std::uint64_t seed) {
  reject_unknown(config,
                 {"models", "poses_per_model", "views_per_pose", "radius", "vfov", "width", "height", "channels",
                  "augmentation", "seed"},
                 "gen-data config");
  DatasetConfig dc;
  std::vector<ModelSource> sources;
  guarded("gen-data config", [&] {
    if (!config.contains("models") || !config["models"].is_array() || config["models"].empty()) {
      throw Error("gen-data config: 'models' must be a non-empty array");
    }
    std::set<std::string> seen;
    for (const auto& m : config["models"]) {
      reject_unknown(m, {"id", "spec"}, "gen-data model entry");
      const auto spec = m.at("spec").get<std::string>();
      const auto id = m.value("id", fs::path(spec).stem().string());
      if (!seen.insert(id).second) throw Error("gen-data config: duplicate model id '" + id + "'");
      sources.push_back({id, resolve_model(spec, config_dir)});
    }
    dc.poses_per_model = config.value("poses_per_model", dc.poses_per_model);
    dc.views_per_pose = config.value("views_per_pose", dc.views_per_pose);
    if (config.contains("radius")) {
      dc.radius_min = config["radius"].at(0).get<double>();
      dc.radius_max = config["radius"].at(1).get<double>();
    }
    dc.intrinsics.vfov = config.value("vfov", dc.intrinsics.vfov);
    dc.intrinsics.width = config.value("width", dc.intrinsics.width);
    dc.intrinsics.height = config.value("height", dc.intrinsics.height);
    dc.channels = config.value("channels", dc.channels);
    if (config.contains("augmentation")) {
      const auto& a = config["augmentation"];
      reject_unknown(a, {"copies", "min_scale", "max_scale"}, "augmentation");
      dc.augmentation.copies = a.value("copies", dc.augmentation.copies);
      dc.augmentation.min_scale = a.value("min_scale", dc.augmentation.min_scale);
      dc.augmentation.max_scale = a.value("max_scale", dc.augmentation.max_scale);
    }
    return 0;
  });
  if (!(dc.radius_min > 0.0 && dc.radius_min <= dc.radius_max)) throw Error("gen-data config: bad radius range");
  Camera probe;
  probe.vfov = dc.intrinsics.vfov;
  probe.width = dc.intrinsics.width;
  probe.height = dc.intrinsics.height;
  probe.validate();
  if (dc.channels < 1) throw Error("gen-data config: channels must be positive");
  // Dataset generation is strict about limits: every sampled pose is checked.
  return generate_dataset(sources, dc, out_dir, seed);
}

Session cmd_reconstruct(const std::vector<fs::path>& bundles, const PipelineConfig& config, const fs::path& out_dir,
                        std::uint64_t seed) {
  if (bundles.empty()) throw Error("reconstruct: no bundles given");
  std::string category, model_id;
  fs::path spec_path;
  std::vector<MapBundle> truth;
  std::uint64_t digest = fnv1a64(config.to_json().dump()) ^ mix_seed(seed);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const fs::path dir = find_manifest_dir(bundles[i]);
    const auto manifest = DatasetManifest::from_text(read_file(dir / "manifest.json"));
    const fs::path target = fs::weakly_canonical(fs::absolute(bundles[i]));
    const DatasetManifest::ModelRecord* found = nullptr;
    for (const auto& m : manifest.models) {
      for (const auto& p : m.poses)
        for (const auto& v : p.views)
          if (fs::weakly_canonical(dir / v.file) == target) found = &m;
    }
    if (!found) throw Error("bundle " + bundles[i].string() + " is not listed in " + (dir / "manifest.json").string());
    if (i == 0) {
      category = found->category;
      model_id = found->id;
      spec_path = dir / found->spec_file;
    } else if (found->category != category) {
      throw Error("bundles mix categories: '" + category + "' and '" + found->category + "'");
    } else if (found->id != model_id) {
      throw Error("bundles come from different models: '" + model_id + "' and '" + found->id + "'");
    }
    const std::string bytes = read_file(bundles[i]);
    digest = mix_seed(digest ^ fnv1a64(bytes));
    MapBundle b = decode_nmap(bytes);
    b.view_id = static_cast<int>(i);
    truth.push_back(std::move(b));
  }
  const ArticulatedModel model = load_model(spec_path);

  NoiseModel noise = config.noise;
  noise.seed = derive_seed(seed, {0x5e55u});
  std::vector<MapBundle> observed;
  for (const auto& b : truth) observed.push_back(corrupt(b, noise));
  Reconstruction rec = reconstruct(model, observed, config);

  // Ground-truth canonical coordinates come from the clean votes.
  std::vector<FeaturedPointCloud> gt_lifted;
  for (const auto& b : truth) gt_lifted.push_back(lift(b));
  std::vector<FeaturedPointCloud> gt_canonical;
  bool any_gt = false;
  for (const auto& c : gt_lifted) any_gt = any_gt || !c.empty();
  if (any_gt) {
    gt_canonical = canonicalize_views(gt_lifted, estimate_joints(gt_lifted, VoteWeighting::kConfidence),
                                      model.part_joints(), false);
  }
  const LossTerms loss = losses(observed, truth, rec.canonical, gt_canonical, config.loss_weights);

  Session s;
  s.model_spec = serialize_model(model);
  digest = mix_seed(digest ^ fnv1a64(s.model_spec));
  s.id = hex64(digest);
  s.cloud = rec.cloud;
  s.estimates = rec.estimates;
  s.rig = rec.rig;
  s.mesh = rec.mesh;
  s.binding = rec.binding;
  s.field = config.field;
  json paths = json::array();
  for (const auto& b : bundles) paths.push_back(b.string());
  json loss_json;
  for (std::size_t i = 0; i < 7; ++i) loss_json["L" + std::to_string(i + 1)] = loss.terms[i];
  loss_json["total"] = loss.total;
  loss_json["single_view"] = loss.single_view;
  s.provenance = {{"category", category},     {"model_id", model_id},
                  {"bundles", paths},         {"views", bundles.size()},
                  {"seed", seed},             {"noise", config.noise_name},
                  {"pipeline", config.to_json()}, {"losses", loss_json}};
  save_session(s, out_dir);
  return s;
}

json ExperimentConfig::to_json() const {
  return {{"model", model},
          {"views", views},
          {"trials", trials},
          {"vfov", intrinsics.vfov},
          {"width", intrinsics.width},
          {"height", intrinsics.height},
          {"radius", {radius_min, radius_max}},
          {"channels", channels},
          {"samples", samples},
          {"iou_resolution", iou_resolution},
          {"ablate_switch", ablate_switch},
          {"pipeline", pipeline.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j,
                 {"model", "views", "trials", "vfov", "width", "height", "radius", "channels", "samples",
                  "iou_resolution", "ablate_switch", "pipeline", "noise"},
                 "experiment config");
  guarded("experiment config", [&] {
    c.model = j.value("model", c.model);
    if (j.contains("views")) c.views = j["views"].get<std::vector<int>>();
    c.trials = j.value("trials", c.trials);
    c.intrinsics.vfov = j.value("vfov", c.intrinsics.vfov);
    c.intrinsics.width = j.value("width", c.intrinsics.width);
    c.intrinsics.height = j.value("height", c.intrinsics.height);
    if (j.contains("radius")) {
      c.radius_min = j["radius"].at(0).get<double>();
      c.radius_max = j["radius"].at(1).get<double>();
    }
    c.channels = j.value("channels", c.channels);
    c.samples = j.value("samples", c.samples);
    c.iou_resolution = j.value("iou_resolution", c.iou_resolution);
    c.ablate_switch = j.value("ablate_switch", c.ablate_switch);
    if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j["pipeline"]);
    if (j.contains("noise")) {
      if (j.contains("pipeline") && j["pipeline"].contains("noise")) {
        throw Error("experiment config: noise given both at top level and in pipeline");
      }
      c.pipeline.noise = NoiseModel::from_json(j["noise"]);
      c.pipeline.noise_name = j["noise"].is_string() ? j["noise"].get<std::string>() : j["noise"].value("preset", "custom");
    }
    return 0;
  });
  if (c.views.empty()) throw Error("experiment config: views must not be empty");
  for (int v : c.views) {
    if (v < 1) throw Error("experiment config: view counts must be >= 1");
  }
  if (c.trials < 1) throw Error("experiment config: trials must be >= 1");
  if (c.samples < 1 || c.iou_resolution < 2) throw Error("experiment config: bad sample or lattice size");
  if (!(c.radius_min > 0.0 && c.radius_min <= c.radius_max)) throw Error("experiment config: bad radius range");
  if (c.ablate_switch != "weighting" && c.ablate_switch != "combination") {
    throw Error("experiment config: ablate_switch must be 'weighting' or 'combination'");
  }
  return c;
}

TrialViews make_trial_views(const ArticulatedModel& model, const ExperimentConfig& config, int count,
                            std::uint64_t trial_seed) {
  TrialViews tv;
  NoiseModel noise = config.pipeline.noise;
  noise.seed = derive_seed(trial_seed, {3});
  for (int q = 0; q < count; ++q) {
    const auto uq = static_cast<std::uint64_t>(q);
    std::mt19937_64 rng(derive_seed(trial_seed, {uq, 1}));
    Pose pose = Pose::zeros(model.num_joints());
    for (std::size_t j = 0; j < pose.angles.size(); ++j) {
      std::uniform_real_distribution<double> uni(model.joints[j].lower, model.joints[j].upper);
      pose.angles[j] = uni(rng);
    }
    const Camera cam =
        make_cameras(1, config.radius_min, config.radius_max, derive_seed(trial_seed, {uq, 2}), config.intrinsics)
            .front();
    MapBundle truth = render_view(model, pose, cam, RenderOptions{config.channels});
    truth.view_id = q;
    tv.observed.push_back(corrupt(truth, noise));
    tv.truth.push_back(std::move(truth));
    tv.poses.push_back(std::move(pose));
  }
  return tv;
}

EvalReport cmd_view_sweep(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.trials < 10) throw Error("view-sweep: at least 10 trials are required");
  const ArticulatedModel model = resolve_model(config.model);
  const TriangleMesh gt_mesh = posed_mesh(model, Pose::zeros(model.num_joints()));
  const auto gt_samples = sample_surface(gt_mesh, config.samples, derive_seed(seed, {0x67u}));
  const OccupancyGrid gt_grid = gt_occupancy_grid(model, Pose::zeros(model.num_joints()), config.iou_resolution);
  const int max_views = *std::max_element(config.views.begin(), config.views.end());

  EvalReport report;
  report.experiment = "view-sweep " + config.model;
  report.noise = config.pipeline.noise_name;
  report.seed = seed;
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t ts = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    const TrialViews tv = make_trial_views(model, config, max_views, ts);
    for (int q : config.views) {
      const std::vector<MapBundle> subset(tv.observed.begin(), tv.observed.begin() + q);
      TrialRecord rec{"sweep", q, t, ts};
      rec.cd = rec.iou = rec.center_error = rec.coverage = std::nan("");
      try {
        const Reconstruction r = reconstruct(model, subset, config.pipeline);
        std::vector<Vec3> centers;
        for (const auto& e : r.estimates) centers.push_back(e.center);
        rec.center_error = mean_center_error(centers, model);
        rec.coverage = coverage(r.cloud.points, gt_samples, 0.01);
        if (!r.mesh.empty() && r.mesh.area() > 0.0) {
          rec.cd = chamfer(sample_surface(r.mesh, config.samples, derive_seed(ts, {5, static_cast<std::uint64_t>(q)})),
                           gt_samples);
          rec.iou = iou(mesh_occupancy_grid(r.mesh, config.iou_resolution), gt_grid);
        }
      } catch (const Error&) {
        // every selected view empty: the trial keeps NaN metrics
      }
      report.trials.push_back(rec);
    }
  }
  return report;
}

TrendVerdict view_trend(const EvalReport& report) {
  TrendVerdict v;
  const SummaryRow *r1 = nullptr, *r2 = nullptr, *r4 = nullptr;
  const auto rows = report.summary();
  for (const auto& r : rows) {
    if (r.views == 1) r1 = &r;
    if (r.views == 2) r2 = &r;
    if (r.views == 4) r4 = &r;
  }
  if (!r1 || !r2 || !r4) {
    v.text = "trend needs view counts 1, 2 and 4";
    return v;
  }
  v.cd_drop = r2->cd_mean <= 0.9 * r1->cd_mean;
  v.cd_hold = r4->cd_mean <= 1.05 * r2->cd_mean;
  v.iou_rise = r2->iou_mean >= r1->iou_mean - 1.0 && r4->iou_mean >= r2->iou_mean - 1.0;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "CD 1->2: %.4f -> %.4f (%s, needs >= 10%% drop); CD 4 vs 2: %.4f vs %.4f (%s, needs <= +5%%); "
                "IoU 1->2->4: %.2f -> %.2f -> %.2f (%s, 1-point tolerance)",
                r1->cd_mean, r2->cd_mean, v.cd_drop ? "ok" : "FAIL", r4->cd_mean, r2->cd_mean,
                v.cd_hold ? "ok" : "FAIL", r1->iou_mean, r2->iou_mean, r4->iou_mean, v.iou_rise ? "ok" : "FAIL");
  v.text = buf;
  return v;
}

EvalReport cmd_ablate(const ExperimentConfig& config, std::uint64_t seed) {
  const ArticulatedModel model = resolve_model(config.model);
  const bool weighting = config.ablate_switch == "weighting";
  const int max_views = *std::max_element(config.views.begin(), config.views.end());
  EvalReport report;
  report.experiment = "ablate " + config.ablate_switch + " " + config.model;
  report.noise = config.pipeline.noise_name;
  report.seed = seed;
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t ts = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    const TrialViews tv = make_trial_views(model, config, max_views, ts);
    std::vector<FeaturedPointCloud> lifted;
    for (const auto& b : tv.observed) lifted.push_back(lift(b));
    for (int q : config.views) {
      const std::vector<FeaturedPointCloud> subset(lifted.begin(), lifted.begin() + q);
      for (int variant = 0; variant < 2; ++variant) {
        TrialRecord rec{"", q, t, ts};
        rec.cd = rec.iou = rec.coverage = std::nan("");
        rec.center_error = std::nan("");
        try {
          if (weighting) {
            rec.variant = variant == 0 ? "weighted" : "unweighted";
            const auto est =
                estimate_joints(subset, variant == 0 ? VoteWeighting::kConfidence : VoteWeighting::kUniform);
            std::vector<Vec3> centers;
            for (const auto& e : est) centers.push_back(e.center);
            rec.center_error = mean_center_error(centers, model);
          } else {
            // Error of the center each view is canonicalized about.
            rec.variant = variant == 0 ? "combined" : "per-view";
            const auto est = estimate_joints(subset, config.pipeline.weighting);
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t j = 0; j < est.size(); ++j) {
              for (const auto& pv : est[j].per_view) {
                sum += ((variant == 0 ? est[j].center : pv.center) - model.joints[j].pivot).norm();
                ++n;
              }
            }
            rec.center_error = sum / static_cast<double>(n);
          }
        } catch (const Error&) {
          if (rec.variant.empty()) rec.variant = weighting ? (variant == 0 ? "weighted" : "unweighted")
                                                           : (variant == 0 ? "combined" : "per-view");
        }
        report.trials.push_back(rec);
      }
    }
  }
  return report;
}

std::vector<AblationSummary> ablation_wins(const EvalReport& report) {
  std::vector<AblationSummary> out;
  for (std::size_t i = 0; i + 1 < report.trials.size(); i += 2) {
    const auto& a = report.trials[i];
    const auto& b = report.trials[i + 1];
    if (a.views != b.views || a.trial != b.trial) throw Error("ablation report rows are not paired");
    auto it = std::find_if(out.begin(), out.end(), [&](const AblationSummary& s) { return s.views == a.views; });
    if (it == out.end()) {
      out.push_back({a.variant, b.variant, a.views});
      it = out.end() - 1;
    }
    ++it->trials;
    if (a.center_error < b.center_error) ++it->baseline_wins;
    it->max_baseline_error = std::max(it->max_baseline_error, a.center_error);
  }
  return out;
}

}  // namespace arecon
