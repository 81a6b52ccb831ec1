#pragma once

// End-to-end runs: calibrate with any strategy, evaluate on a test set, compare.

#include "kandinsky/conformal.hpp"
#include "kandinsky/fcc.hpp"
#include "kandinsky/genann.hpp"
#include "kandinsky/grid_io.hpp"
#include "kandinsky/kmeans.hpp"
#include "kandinsky/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace kandinsky {

enum class Method { pixelwise, imagewise, kmeans, genann, fcc };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct RunConfig {
  std::string name;  // report label; defaults to the method name
  std::filesystem::path calibration_manifest;
  std::filesystem::path test_manifest;
  Method method = Method::pixelwise;
  KMeansConfig kmeans;
  DEConfig genann;
  FCCConfig fcc;
  std::vector<double> quantiles = kDefaultQuantiles;
  int levels = 20;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
};

/// Parses a run config. Relative paths resolve against `base_dir`. A block named after
/// the method ("kmeans", "genann" or "fcc") is required for clustered methods and
/// blocks for other methods are rejected. The top-level seed is used by the strategy
/// unless its block sets one.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig read_run_config(const std::filesystem::path& path);

/// Overrides the seed of the config and of its strategy block.
void set_seed(RunConfig& config, std::uint64_t seed);

struct ClusteringRun {
  ClusterMap clusters;  // compacted: every id in use
  std::string details;  // JSON describing the fitted geometry
};

/// Clusters pixel locations from the pixelwise model (kmeans, genann or fcc).
ClusteringRun cluster_pixels(const RunConfig& config, const CalibrationModel& pixelwise);

struct CalibrationRun {
  CalibrationModel model;
  std::optional<ClusterMap> clusters;  // absent for pixelwise
  std::string details = "{}";
};

CalibrationRun calibrate(const RunConfig& config, const Dataset& calibration);

struct EvaluationReport {
  CeGrid ce;
  ReliabilityBins reliability;
};

EvaluationReport evaluate(const CalibrationModel& model, const Dataset& test, int levels,
                          CeMode mode = CeMode::absolute);

/// ce_grid.npy, summary.json, coverage.csv, reliability.csv and ce_grid.ppm.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir);

/// Writes model/ (the artifact), cluster_map.npy and cluster_map.ppm when clustered.
void write_calibration(const CalibrationRun& run, const std::filesystem::path& dir);

struct ComparisonRow {
  std::string name;
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);

}  // namespace kandinsky
