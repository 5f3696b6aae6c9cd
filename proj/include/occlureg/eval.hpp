#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occlureg/registration.hpp"

namespace occlureg {

enum class SceneMode { clean, context };
enum class MaskMode { gt, eroded, dilated, noisy };
enum class DescriptorKind { fpfh, oracle };

struct ExperimentConfig {
  SceneMode scene_mode = SceneMode::clean;
  MaskMode mask_mode = MaskMode::gt;
  double noise_p = 0.1;  // boundary flip probability, mask_mode = noisy only
  std::vector<std::string> methods{"ot"};
  DescriptorKind descriptor = DescriptorKind::fpfh;
  int oracle_dim = 16;
  double oracle_sigma = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  /// Number of procedural catalog shapes to cycle through; ignored when
  /// explicit mesh paths are given.
  int shapes = 10;
  std::vector<std::string> meshes;
  PipelineParams pipeline;
  int ransac_iters = 2000;
  double ransac_inlier_threshold = 0.05;
  int icp_max_iter = 50;
  double icp_tol = 1e-8;
  std::string out_dir;  // the CLI --out flag takes precedence

  void validate() const;  // throws ConfigError
};

ExperimentConfig load_experiment_config(const std::string& path);

/// Rebuilds the config as sorted-key JSON, so hashes ignore formatting.
std::string config_canonical_json(const ExperimentConfig& config);
/// FNV-1a over the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct MethodOutcome {
  std::string method;
  bool failed = false;
  double rotation_error = std::numeric_limits<double>::infinity();  // radians
  double translation_error = std::numeric_limits<double>::infinity();  // squared
  double translation_distance = std::numeric_limits<double>::infinity();
  double wall_time = 0.0;
  std::map<std::string, double> diagnostics;
};

struct TrialRecord {
  int trial = 0;
  std::string object_id;
  std::optional<double> inlier_rate;  // context mode only
  int object_points = 0;  // mask-on valid pixels before perturbation
  int target_points = 0;  // cropped target cloud size
  std::vector<MethodOutcome> outcomes;
};

/// Renders, masks, backprojects, crops, and registers every configured
/// method on every trial. Per-method failures become infinite-error
/// outcomes; config and mesh problems throw before any trial runs.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

struct MapCurve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

struct MethodMap {
  std::string method;
  MapCurve rotation;  // thresholds in degrees
  MapCurve translation_squared;
  MapCurve translation_unsquared;
};

struct MapReport {
  std::vector<MethodMap> methods;
  int trial_count = 0;
  std::string convention = "squared";  // plotted translation norm
  std::string hash;  // config hash; filled by the caller
  std::uint64_t seed = 0;
};

inline const std::vector<double> kRotationThresholdsDeg{5.0, 10.0, 15.0};
inline const std::vector<double> kTranslationThresholds{1e-3, 5e-3, 1e-2};

/// Success fraction per threshold: share of trials with error <= tau.
MapReport compute_map(const std::vector<TrialRecord>& records,
                      const std::vector<double>& rot_thresholds_deg = kRotationThresholdsDeg,
                      const std::vector<double>& trans_thresholds = kTranslationThresholds);

struct InlierRateStats {
  double min = 0.0;
  double max = 0.0;
  double fraction_below_5pct = 0.0;
};

/// Order statistics over per-trial inlier rates. Throws MissingField when a
/// record carries none (clean-mode runs).
InlierRateStats inlier_rate_stats(const std::vector<TrialRecord>& records);

enum class ReportFormat { csv, json };

/// CSV: rows {method, metric, threshold, value} under config-hash and seed
/// comments. JSON: the report plus full records and per-category curves.
/// Timings are opt-in so that outputs stay byte-reproducible.
void emit_report(const MapReport& report, const std::vector<TrialRecord>& records,
                 ReportFormat format, const std::string& path,
                 bool include_timings = false);

/// Reads back what emit_report wrote; the round trip is asserted in tests.
MapReport parse_report_csv(const std::string& path);

}  // namespace occlureg
