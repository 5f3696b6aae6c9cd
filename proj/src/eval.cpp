#include "occlureg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "occlureg/cloud.hpp"
#include "occlureg/io.hpp"
#include "occlureg/mesh.hpp"
#include "occlureg/parallel.hpp"
#include "occlureg/random.hpp"
#include "occlureg/render.hpp"

namespace occlureg {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownMethods{"ot", "softmax", "icp", "ransac"};

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (methods.empty()) throw ConfigError("config: at least one method required");
  for (const auto& m : methods)
    if (!kKnownMethods.count(m)) throw ConfigError("config: unknown method '" + m + "'");
  if (meshes.empty() && shapes < 1)
    throw ConfigError("config: need mesh paths or a positive shape count");
  if (shapes > shape_catalog_size())
    throw ConfigError("config: shape count exceeds the catalog (" +
                      std::to_string(shape_catalog_size()) + ")");
  if (mask_mode == MaskMode::noisy && (noise_p < 0.0 || noise_p > 1.0))
    throw ConfigError("config: noise_p outside [0,1]");
  if (descriptor == DescriptorKind::oracle && oracle_dim < 4)
    throw ConfigError("config: oracle_dim must be >= 4");
  if (oracle_sigma < 0.0) throw ConfigError("config: oracle_sigma must be >= 0");
  if (ransac_iters < 1 || icp_max_iter < 1)
    throw ConfigError("config: iteration counts must be >= 1");
  if (!(ransac_inlier_threshold > 0.0) || !(icp_tol > 0.0))
    throw ConfigError("config: thresholds must be positive");
  pipeline.validate();
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");

  check_keys(j, {"schema", "scene_mode", "mask_mode", "noise_p", "methods",
                 "descriptor", "oracle", "trials", "seed", "shapes", "meshes",
                 "pipeline", "ransac", "icp", "out_dir"},
             path);
  if (!j.contains("schema") || j.at("schema").get<int>() != 1)
    throw ConfigError("config " + path + " must declare \"schema\": 1");

  ExperimentConfig cfg;
  try {
    if (j.contains("scene_mode")) {
      const std::string mode = j.at("scene_mode");
      if (mode == "clean") cfg.scene_mode = SceneMode::clean;
      else if (mode == "context") cfg.scene_mode = SceneMode::context;
      else throw ConfigError("config: scene_mode must be clean or context");
    }
    if (j.contains("mask_mode")) {
      const std::string mode = j.at("mask_mode");
      if (mode == "gt") cfg.mask_mode = MaskMode::gt;
      else if (mode == "eroded") cfg.mask_mode = MaskMode::eroded;
      else if (mode == "dilated") cfg.mask_mode = MaskMode::dilated;
      else if (mode == "noisy") cfg.mask_mode = MaskMode::noisy;
      else throw ConfigError("config: unknown mask_mode '" + mode + "'");
    }
    read_into(j, "noise_p", cfg.noise_p);
    read_into(j, "methods", cfg.methods);
    if (j.contains("descriptor")) {
      const std::string d = j.at("descriptor");
      if (d == "fpfh") cfg.descriptor = DescriptorKind::fpfh;
      else if (d == "oracle") cfg.descriptor = DescriptorKind::oracle;
      else throw ConfigError("config: descriptor must be fpfh or oracle");
    }
    if (j.contains("oracle")) {
      check_keys(j["oracle"], {"dim", "sigma"}, path + " oracle");
      read_into(j["oracle"], "dim", cfg.oracle_dim);
      read_into(j["oracle"], "sigma", cfg.oracle_sigma);
    }
    read_into(j, "trials", cfg.trials);
    read_into(j, "seed", cfg.seed);
    read_into(j, "shapes", cfg.shapes);
    read_into(j, "meshes", cfg.meshes);
    if (j.contains("pipeline")) {
      const json& p = j["pipeline"];
      check_keys(p,
                 {"m_source", "n_target", "voxel", "lambda", "sinkhorn_k", "alpha",
                  "gt_threshold", "crop_radius", "matcher", "refine_icp"},
                 path + " pipeline");
      read_into(p, "m_source", cfg.pipeline.m_source);
      read_into(p, "n_target", cfg.pipeline.n_target);
      read_into(p, "voxel", cfg.pipeline.voxel);
      read_into(p, "lambda", cfg.pipeline.lambda);
      read_into(p, "sinkhorn_k", cfg.pipeline.sinkhorn_k);
      read_into(p, "alpha", cfg.pipeline.alpha);
      read_into(p, "gt_threshold", cfg.pipeline.gt_threshold);
      read_into(p, "crop_radius", cfg.pipeline.crop_radius);
      read_into(p, "refine_icp", cfg.pipeline.refine_icp);
      // The per-method loop overrides the matcher; a configured value only
      // matters for the register subcommand.
      if (p.contains("matcher")) {
        const std::string m = p.at("matcher");
        if (m == "ot") cfg.pipeline.matcher = Matcher::ot;
        else if (m == "softmax") cfg.pipeline.matcher = Matcher::softmax;
        else throw ConfigError("config: matcher must be ot or softmax");
      }
    }
    if (j.contains("ransac")) {
      check_keys(j["ransac"], {"iters", "inlier_threshold"}, path + " ransac");
      read_into(j["ransac"], "iters", cfg.ransac_iters);
      read_into(j["ransac"], "inlier_threshold", cfg.ransac_inlier_threshold);
    }
    if (j.contains("icp")) {
      check_keys(j["icp"], {"max_iter", "tol"}, path + " icp");
      read_into(j["icp"], "max_iter", cfg.icp_max_iter);
      read_into(j["icp"], "tol", cfg.icp_tol);
    }
    read_into(j, "out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_canonical_json(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = 1;
  j["scene_mode"] = cfg.scene_mode == SceneMode::clean ? "clean" : "context";
  switch (cfg.mask_mode) {
    case MaskMode::gt: j["mask_mode"] = "gt"; break;
    case MaskMode::eroded: j["mask_mode"] = "eroded"; break;
    case MaskMode::dilated: j["mask_mode"] = "dilated"; break;
    case MaskMode::noisy: j["mask_mode"] = "noisy"; break;
  }
  j["noise_p"] = cfg.noise_p;
  j["methods"] = cfg.methods;
  j["descriptor"] = cfg.descriptor == DescriptorKind::fpfh ? "fpfh" : "oracle";
  j["oracle"] = {{"dim", cfg.oracle_dim}, {"sigma", cfg.oracle_sigma}};
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["shapes"] = cfg.shapes;
  j["meshes"] = cfg.meshes;
  j["pipeline"] = {{"m_source", cfg.pipeline.m_source},
                   {"n_target", cfg.pipeline.n_target},
                   {"voxel", cfg.pipeline.voxel},
                   {"lambda", cfg.pipeline.lambda},
                   {"sinkhorn_k", cfg.pipeline.sinkhorn_k},
                   {"alpha", cfg.pipeline.alpha},
                   {"gt_threshold", cfg.pipeline.gt_threshold},
                   {"crop_radius", cfg.pipeline.crop_radius},
                   {"matcher", cfg.pipeline.matcher == Matcher::ot ? "ot" : "softmax"},
                   {"refine_icp", cfg.pipeline.refine_icp}};
  j["ransac"] = {{"iters", cfg.ransac_iters},
                 {"inlier_threshold", cfg.ransac_inlier_threshold}};
  j["icp"] = {{"max_iter", cfg.icp_max_iter}, {"tol", cfg.icp_tol}};
  return j.dump();  // nlohmann objects iterate sorted by key
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = config_canonical_json(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

namespace {

struct SceneObject {
  TriangleMesh mesh;
  std::string label;
};

std::vector<SceneObject> load_objects(const ExperimentConfig& cfg) {
  std::vector<SceneObject> objects;
  if (!cfg.meshes.empty()) {
    for (const auto& path : cfg.meshes) {
      objects.push_back({load_mesh(path), path});
    }
  } else {
    for (int i = 0; i < cfg.shapes; ++i)
      objects.push_back({make_catalog_shape(i), shape_catalog_label(i)});
  }
  return objects;
}

Vec3 centroid(const Points& points) {
  return points.colwise().mean().transpose();
}

MethodOutcome score_outcome(const RegistrationResult& result,
                            const RigidTransform& gt) {
  MethodOutcome out;
  out.method = result.method;
  out.rotation_error = rotation_error(result.pose, gt);
  out.translation_error = translation_error(result.pose.translation(), gt.translation());
  out.translation_distance =
      translation_distance(result.pose.translation(), gt.translation());
  out.wall_time = result.wall_time;
  out.diagnostics = result.diagnostics;
  return out;
}

MethodOutcome failed_outcome(const std::string& method) {
  MethodOutcome out;
  out.method = method;
  out.failed = true;
  return out;
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<SceneObject> objects = load_objects(cfg);  // may throw, fatal

  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
  const Background background =
      cfg.scene_mode == SceneMode::clean ? Background::none : Background::box_room;

  parallel_for(cfg.trials, [&](long begin, long end) {
    for (long t = begin; t < end; ++t) {
      TrialRecord& rec = records[static_cast<std::size_t>(t)];
      rec.trial = static_cast<int>(t);
      const std::uint64_t trial_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t));
      const SceneObject& object =
          objects[static_cast<std::size_t>(t) % objects.size()];
      rec.object_id = object.label;
      for (const auto& m : cfg.methods) rec.outcomes.push_back(failed_outcome(m));

      try {
        ComposedScene scene =
            compose_scene(object.mesh, background, trial_seed, object.label);
        SceneSample sample = render_scene(scene);
        if (cfg.scene_mode == SceneMode::context) rec.inlier_rate = sample.inlier_rate;

        PointCloud object_cloud =
            backproject(sample.depth, sample.mask, sample.intrinsics);
        rec.object_points = static_cast<int>(object_cloud.size());

        MaskImage mask = sample.mask;
        switch (cfg.mask_mode) {
          case MaskMode::gt:
            break;
          case MaskMode::eroded:
            mask = perturb_mask(mask, {MaskPerturbKind::erode3, 0.0}, 0);
            break;
          case MaskMode::dilated:
            mask = perturb_mask(mask, {MaskPerturbKind::dilate3, 0.0}, 0);
            break;
          case MaskMode::noisy:
            mask = perturb_mask(mask, {MaskPerturbKind::boundary_noise, cfg.noise_p},
                                mix_seed(trial_seed, 11));
            break;
        }

        PointCloud y = backproject(sample.depth, mask, sample.intrinsics);
        if (!y.empty())
          y = sphere_crop(y, centroid(y.points), cfg.pipeline.crop_radius);
        rec.target_points = static_cast<int>(y.size());

        // The first instance is the normalized object the sample was rendered
        // from; X is drawn dense and reduced by the shared preprocessing.
        const TriangleMesh& normalized = scene.instances.front().mesh;
        PointCloud x_dense = sample_surface(normalized, 4L * cfg.pipeline.m_source,
                                            mix_seed(trial_seed, 12));

        PipelineParams params = cfg.pipeline;
        params.seed = trial_seed;

        DescriptorPairFn descriptor;
        if (cfg.descriptor == DescriptorKind::oracle) {
          descriptor =
              make_oracle_descriptor(sample.gt_pose, cfg.oracle_dim, cfg.oracle_sigma,
                                     mix_seed(trial_seed, 4), oracle_horizon(params));
        } else {
          FpfhParams fp;
          fp.radius = 5.0 * params.voxel;
          descriptor = make_fpfh_descriptor(fp);
        }

        // Baselines consume exactly the clouds the pipeline builds internally.
        PointCloud xs = preprocess_cloud(x_dense, params.voxel, params.m_source,
                                         mix_seed(trial_seed, 1));
        PointCloud ys = preprocess_cloud(y, params.voxel, params.n_target,
                                         mix_seed(trial_seed, 2));

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
          const std::string& method = cfg.methods[mi];
          try {
            RegistrationResult result;
            if (method == "ot" || method == "softmax") {
              params.matcher = method == "ot" ? Matcher::ot : Matcher::softmax;
              result = register_ot(x_dense, y, descriptor, params);
            } else if (method == "icp") {
              result = register_icp(xs, ys, RigidTransform::Identity(),
                                    cfg.icp_max_iter, cfg.icp_tol);
            } else {
              result = register_ransac(xs, ys, descriptor, cfg.ransac_iters,
                                       cfg.ransac_inlier_threshold,
                                       mix_seed(trial_seed, 3));
            }
            rec.outcomes[mi] = score_outcome(result, sample.gt_pose);
          } catch (const Error&) {
            // recorded as an infinite-error outcome; the trial continues
          }
        }
      } catch (const std::exception&) {
        // degenerate scene; every outcome stays failed
      }
    }
  });
  return records;
}

MapReport compute_map(const std::vector<TrialRecord>& records,
                      const std::vector<double>& rot_thresholds_deg,
                      const std::vector<double>& trans_thresholds) {
  if (records.empty()) throw EmptyRecords("compute_map: no records");

  std::vector<std::string> methods;
  for (const auto& rec : records)
    for (const auto& out : rec.outcomes)
      if (std::find(methods.begin(), methods.end(), out.method) == methods.end())
        methods.push_back(out.method);

  MapReport report;
  report.trial_count = static_cast<int>(records.size());
  for (const auto& method : methods) {
    MethodMap mm;
    mm.method = method;
    long present = 0;
    std::vector<double> rot, trans2, trans1;
    for (const auto& rec : records)
      for (const auto& out : rec.outcomes)
        if (out.method == method) {
          ++present;
          rot.push_back(out.rotation_error * 180.0 / std::numbers::pi);
          trans2.push_back(out.translation_error);
          trans1.push_back(out.translation_distance);
        }
    auto curve = [&](const std::vector<double>& errors,
                     const std::vector<double>& thresholds) {
      MapCurve c;
      c.thresholds = thresholds;
      for (double tau : thresholds) {
        long hits = 0;
        for (double e : errors)
          if (e <= tau) ++hits;
        c.values.push_back(present > 0 ? static_cast<double>(hits) / present : 0.0);
      }
      return c;
    };
    mm.rotation = curve(rot, rot_thresholds_deg);
    mm.translation_squared = curve(trans2, trans_thresholds);
    mm.translation_unsquared = curve(trans1, trans_thresholds);
    report.methods.push_back(std::move(mm));
  }
  return report;
}

InlierRateStats inlier_rate_stats(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw EmptyRecords("inlier_rate_stats: no records");
  InlierRateStats stats;
  stats.min = std::numeric_limits<double>::infinity();
  stats.max = -std::numeric_limits<double>::infinity();
  long below = 0;
  for (const auto& rec : records) {
    if (!rec.inlier_rate)
      throw MissingField("inlier_rate_stats: record without inlier_rate (clean mode?)");
    const double r = *rec.inlier_rate;
    stats.min = std::min(stats.min, r);
    stats.max = std::max(stats.max, r);
    if (r < 0.05) ++below;
  }
  stats.fraction_below_5pct = static_cast<double>(below) / records.size();
  return stats;
}

namespace {

json curve_to_json(const MapCurve& c) {
  return json{{"thresholds", c.thresholds}, {"values", c.values}};
}

json method_map_to_json(const MethodMap& mm) {
  return json{{"method", mm.method},
              {"rotation", curve_to_json(mm.rotation)},
              {"translation_squared", curve_to_json(mm.translation_squared)},
              {"translation_unsquared", curve_to_json(mm.translation_unsquared)}};
}

std::string category_of(const std::string& object_id) {
  auto pos = object_id.rfind('_');
  return pos == std::string::npos ? object_id : object_id.substr(0, pos);
}

void write_csv_report(const MapReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "# config_hash=" << report.hash << "\n";
  out << "# seed=" << report.seed << "\n";
  out << "# trials=" << report.trial_count << "\n";
  out << "# convention=" << report.convention << "\n";
  out << "method,metric,threshold,value\n";
  for (const auto& mm : report.methods) {
    auto rows = [&](const char* metric, const MapCurve& c) {
      for (std::size_t k = 0; k < c.thresholds.size(); ++k)
        out << mm.method << ',' << metric << ',' << format_double(c.thresholds[k])
            << ',' << format_double(c.values[k]) << '\n';
    };
    rows("rotation_map", mm.rotation);
    rows("translation_map_squared", mm.translation_squared);
    rows("translation_map_unsquared", mm.translation_unsquared);
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

void write_json_report(const MapReport& report, const std::vector<TrialRecord>& records,
                       const std::string& path, bool include_timings) {
  json j;
  j["schema"] = 1;
  j["config_hash"] = report.hash;
  j["seed"] = report.seed;
  j["convention"] = report.convention;
  j["trial_count"] = report.trial_count;

  json methods = json::array();
  for (const auto& mm : report.methods) methods.push_back(method_map_to_json(mm));
  j["map"] = methods;

  // Pooled curves above; per-category curves here, keyed by the label prefix.
  std::map<std::string, std::vector<TrialRecord>> by_category;
  for (const auto& rec : records) by_category[category_of(rec.object_id)].push_back(rec);
  if (by_category.size() > 1) {
    json per_category = json::object();
    for (const auto& [cat, recs] : by_category) {
      MapReport sub = compute_map(recs, report.methods.empty()
                                            ? kRotationThresholdsDeg
                                            : report.methods.front().rotation.thresholds,
                                  report.methods.empty()
                                      ? kTranslationThresholds
                                      : report.methods.front().translation_squared.thresholds);
      json arr = json::array();
      for (const auto& mm : sub.methods) arr.push_back(method_map_to_json(mm));
      per_category[cat] = {{"trial_count", sub.trial_count}, {"map", arr}};
    }
    j["per_category"] = per_category;
  }

  json recs = json::array();
  for (const auto& rec : records) {
    json r{{"trial", rec.trial},
           {"object_id", rec.object_id},
           {"object_points", rec.object_points},
           {"target_points", rec.target_points}};
    if (rec.inlier_rate) r["inlier_rate"] = *rec.inlier_rate;
    json outs = json::array();
    for (const auto& out : rec.outcomes) {
      json o{{"method", out.method}, {"failed", out.failed}};
      if (!out.failed) {
        // infinities have no JSON representation; failures just omit errors
        o["rotation_error"] = out.rotation_error;
        o["translation_error"] = out.translation_error;
        o["translation_distance"] = out.translation_distance;
      }
      json diag = json::object();
      for (const auto& [key, value] : out.diagnostics) diag[key] = value;
      o["diagnostics"] = diag;
      if (include_timings) o["wall_time"] = out.wall_time;
      outs.push_back(o);
    }
    r["outcomes"] = outs;
    recs.push_back(r);
  }
  j["records"] = recs;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

void emit_report(const MapReport& report, const std::vector<TrialRecord>& records,
                 ReportFormat format, const std::string& path, bool include_timings) {
  if (records.empty()) throw EmptyRecords("emit_report: no records");
  if (format == ReportFormat::csv)
    write_csv_report(report, path);
  else
    write_json_report(report, records, path, include_timings);
}

MapReport parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  MapReport report;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "config_hash") report.hash = value;
      else if (key == "seed") report.seed = std::stoull(value);
      else if (key == "trials") report.trial_count = std::stoi(value);
      else if (key == "convention") report.convention = value;
      continue;
    }
    if (!header_seen) {
      if (line != "method,metric,threshold,value")
        throw ParseError(path, line_no, "unexpected CSV header");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string method, metric, threshold, value;
    if (!std::getline(row, method, ',') || !std::getline(row, metric, ',') ||
        !std::getline(row, threshold, ',') || !std::getline(row, value))
      throw ParseError(path, line_no, "malformed CSV row");

    auto it = std::find_if(report.methods.begin(), report.methods.end(),
                           [&](const MethodMap& mm) { return mm.method == method; });
    if (it == report.methods.end()) {
      report.methods.push_back(MethodMap{method, {}, {}, {}});
      it = std::prev(report.methods.end());
    }
    MapCurve* curve = nullptr;
    if (metric == "rotation_map") curve = &it->rotation;
    else if (metric == "translation_map_squared") curve = &it->translation_squared;
    else if (metric == "translation_map_unsquared") curve = &it->translation_unsquared;
    else throw ParseError(path, line_no, "unknown metric '" + metric + "'");
    curve->thresholds.push_back(std::stod(threshold));
    curve->values.push_back(std::stod(value));
  }
  if (!header_seen) throw ParseError(path, line_no, "missing CSV header");
  return report;
}

}  // namespace occlureg
