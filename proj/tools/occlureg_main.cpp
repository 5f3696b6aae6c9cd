#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "occlureg/cloud.hpp"
#include "occlureg/eval.hpp"
#include "occlureg/io.hpp"
#include "occlureg/mesh.hpp"
#include "occlureg/random.hpp"
#include "occlureg/render.hpp"

namespace fs = std::filesystem;
using namespace occlureg;

namespace {

std::string trial_stem(const std::string& dir, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%04d", trial);
  return (fs::path(dir) / buf).string();
}

int run_render(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
  if (dir.empty()) throw ConfigError("render: no output directory given");
  fs::create_directories(dir);

  std::vector<std::pair<TriangleMesh, std::string>> objects;
  if (!cfg.meshes.empty()) {
    for (const auto& path : cfg.meshes) objects.emplace_back(load_mesh(path), path);
  } else {
    for (int i = 0; i < cfg.shapes; ++i)
      objects.emplace_back(make_catalog_shape(i), shape_catalog_label(i));
  }

  const Background background =
      cfg.scene_mode == SceneMode::clean ? Background::none : Background::box_room;
  save_intrinsics((fs::path(dir) / "intrinsics.json").string(), CameraIntrinsics{});

  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t trial_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t));
    const auto& [mesh, label] = objects[static_cast<std::size_t>(t) % objects.size()];
    ComposedScene scene = compose_scene(mesh, background, trial_seed, label);
    SceneSample sample = render_scene(scene);

    const std::string stem = trial_stem(dir, t);
    save_scene_sample(stem, sample);
    PointCloud source = sample_surface(scene.instances.front().mesh,
                                       4L * cfg.pipeline.m_source,
                                       mix_seed(trial_seed, 12));
    save_ply(stem + "_source.ply", source);
  }
  std::cout << "wrote " << cfg.trials << " scene samples to " << dir << "\n";
  return 0;
}

int run_register(const std::string& source_path, const std::string& depth_path,
                 const std::string& mask_path, const std::string& intr_path,
                 const std::string& method, const std::string& out_path,
                 const std::string& config_path, std::uint64_t seed,
                 bool with_correspondences, bool with_timings) {
  PipelineParams params;
  DescriptorKind descriptor_kind = DescriptorKind::fpfh;
  int ransac_iters = 2000;
  double ransac_threshold = 0.05;
  int icp_max_iter = 50;
  double icp_tol = 1e-8;
  if (!config_path.empty()) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    params = cfg.pipeline;
    descriptor_kind = cfg.descriptor;
    ransac_iters = cfg.ransac_iters;
    ransac_threshold = cfg.ransac_inlier_threshold;
    icp_max_iter = cfg.icp_max_iter;
    icp_tol = cfg.icp_tol;
  }
  params.seed = seed;

  PointCloud source = load_cloud(source_path);
  CameraIntrinsics intr = load_intrinsics(intr_path);
  DepthMap depth = load_depth_raw(depth_path, intr.width, intr.height);
  MaskImage mask = load_pbm(mask_path);

  PointCloud target = backproject(depth, mask, intr);
  if (!target.empty()) {
    const Vec3 center = target.points.colwise().mean().transpose();
    target = sphere_crop(target, center, params.crop_radius);
  }

  // A rendered depth grid has a sidecar next to it; its GT pose, when
  // present, turns the output into a scored result.
  bool has_gt = false;
  RigidTransform gt = RigidTransform::Identity();
  const fs::path sidecar_path = fs::path(depth_path).replace_extension(".json");
  if (fs::exists(sidecar_path)) {
    DepthSidecar sidecar = load_depth_sidecar(sidecar_path.string());
    has_gt = sidecar.has_gt_pose;
    gt = sidecar.gt_pose;
  }

  DescriptorPairFn descriptor;
  if (descriptor_kind == DescriptorKind::oracle && has_gt) {
    descriptor = make_oracle_descriptor(gt, 16, 0.0, mix_seed(seed, 4),
                                        oracle_horizon(params));
  } else {
    FpfhParams fp;
    fp.radius = 5.0 * params.voxel;
    descriptor = make_fpfh_descriptor(fp);
  }

  RegistrationResult result;
  if (method == "ot" || method == "softmax") {
    params.matcher = method == "ot" ? Matcher::ot : Matcher::softmax;
    result = register_ot(source, target, descriptor, params);
  } else if (method == "icp" || method == "ransac") {
    PointCloud xs = preprocess_cloud(source, params.voxel, params.m_source,
                                     mix_seed(seed, 1));
    PointCloud ys = preprocess_cloud(target, params.voxel, params.n_target,
                                     mix_seed(seed, 2));
    result = method == "icp"
                 ? register_icp(xs, ys, RigidTransform::Identity(), icp_max_iter, icp_tol)
                 : register_ransac(xs, ys, descriptor, ransac_iters, ransac_threshold,
                                   mix_seed(seed, 3));
  } else {
    throw ConfigError("register: unknown method '" + method + "'");
  }

  if (has_gt) {
    result.rotation_error = rotation_error(result.pose, gt);
    result.translation_error =
        translation_error(result.pose.translation(), gt.translation());
  }
  save_registration_result(out_path, result, with_correspondences, with_timings);
  std::cout << "pose written to " << out_path;
  if (result.rotation_error)
    std::cout << " (rotation error " << format_double(*result.rotation_error) << " rad)";
  std::cout << "\n";
  return 0;
}

int run_evaluate(const std::string& config_path, const std::string& out_dir,
                 bool with_timings) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
  if (dir.empty()) throw ConfigError("evaluate: no output directory given");
  fs::create_directories(dir);

  std::vector<TrialRecord> records = run_experiment(cfg);
  MapReport report = compute_map(records);
  report.hash = config_hash(cfg);
  report.seed = cfg.seed;

  emit_report(report, records, ReportFormat::csv, (fs::path(dir) / "report.csv").string());
  emit_report(report, records, ReportFormat::json,
              (fs::path(dir) / "report.json").string(), with_timings);

  for (const auto& mm : report.methods) {
    std::cout << mm.method << " rotation mAP:";
    for (std::size_t k = 0; k < mm.rotation.thresholds.size(); ++k)
      std::cout << "  " << format_double(mm.rotation.thresholds[k]) << "deg="
                << format_double(mm.rotation.values[k]);
    std::cout << "\n";
  }
  if (cfg.scene_mode == SceneMode::context) {
    InlierRateStats stats = inlier_rate_stats(records);
    std::cout << "inlier rate: min=" << format_double(stats.min)
              << " max=" << format_double(stats.max)
              << " below5%=" << format_double(stats.fraction_below_5pct) << "\n";
  }
  std::cout << "report written to " << dir << "\n";
  return 0;
}

int run_bench(const std::string& sizes_arg, std::uint64_t seed) {
  std::vector<int> sizes;
  std::stringstream ss(sizes_arg);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const int s = std::stoi(token);
    if (s < 3) throw ConfigError("bench: sizes must be >= 3");
    sizes.push_back(s);
  }
  if (sizes.empty()) throw ConfigError("bench: no sizes given");

  // One fixed clean scene; only the point budgets change across rows.
  TriangleMesh mesh = make_catalog_shape(0);
  ComposedScene scene = compose_scene(mesh, Background::none, mix_seed(seed, 1),
                                      shape_catalog_label(0));
  SceneSample sample = render_scene(scene);
  PointCloud target = backproject(sample.depth, sample.mask, sample.intrinsics);

  std::cout << "size,m,n,method,seconds,correspondences\n";
  for (int size : sizes) {
    PipelineParams params;
    params.m_source = size;
    params.n_target = std::max(3, (3 * size) / 4);
    params.seed = mix_seed(seed, static_cast<std::uint64_t>(size));

    PointCloud y = sphere_crop(target, target.points.colwise().mean().transpose(),
                               params.crop_radius);
    PointCloud x_dense = sample_surface(scene.instances.front().mesh, 4L * size,
                                        mix_seed(params.seed, 12));
    DescriptorPairFn descriptor = make_oracle_descriptor(
        sample.gt_pose, 16, 0.0, mix_seed(params.seed, 4), oracle_horizon(params));

    RegistrationResult result = register_ot(x_dense, y, descriptor, params);
    std::cout << size << ',' << params.m_source << ',' << params.n_target << ",ot,"
              << format_double(result.wall_time) << ','
              << result.correspondences.size() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-occluded object registration toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::string source_path, depth_path, mask_path, intr_path, method = "ot";
  std::string sizes = "512,1024,2048";
  std::uint64_t seed = 0;
  bool with_correspondences = false, with_timings = false;

  CLI::App* render = app.add_subcommand("render", "generate synthetic scene samples");
  render->add_option("--config", config_path, "experiment config JSON")->required();
  render->add_option("--out", out_path, "output directory");

  CLI::App* reg = app.add_subcommand("register", "estimate a pose for one sample");
  reg->add_option("--source", source_path, "source cloud (.ply/.xyz)")->required();
  reg->add_option("--depth", depth_path, "raw f32 depth grid")->required();
  reg->add_option("--mask", mask_path, "PBM object mask")->required();
  reg->add_option("--intrinsics", intr_path, "intrinsics JSON")->required();
  reg->add_option("--method", method, "ot|softmax|icp|ransac");
  reg->add_option("--out", out_path, "result JSON path")->required();
  reg->add_option("--config", config_path, "optional experiment config");
  reg->add_option("--seed", seed, "sampling seed");
  reg->add_flag("--correspondences", with_correspondences, "include matches in JSON");
  reg->add_flag("--timings", with_timings, "include wall time in JSON");

  CLI::App* evaluate = app.add_subcommand("evaluate", "run the benchmark protocol");
  evaluate->add_option("--config", config_path, "experiment config JSON")->required();
  evaluate->add_option("--out", out_path, "report directory");
  evaluate->add_flag("--timings", with_timings, "include wall times in report JSON");

  CLI::App* bench = app.add_subcommand("bench", "time the pipeline across sizes");
  bench->add_option("--sizes", sizes, "comma-separated point budgets");
  bench->add_option("--seed", seed, "scene seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (render->parsed()) return run_render(config_path, out_path);
    if (reg->parsed())
      return run_register(source_path, depth_path, mask_path, intr_path, method,
                          out_path, config_path, seed, with_correspondences,
                          with_timings);
    if (evaluate->parsed()) return run_evaluate(config_path, out_path, with_timings);
    if (bench->parsed()) return run_bench(sizes, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
