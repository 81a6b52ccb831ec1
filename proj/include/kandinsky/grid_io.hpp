#pragma once

#include "kandinsky/grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace kandinsky {

/// Reads a float32 (N, H, W) NPY file; every value must lie in [0, 1].
ScoreGrid read_score_grid(const std::filesystem::path& path);
/// Reads a uint8 (N, H, W) NPY file; every value must be 0 or 1.
LabelGrid read_label_grid(const std::filesystem::path& path);
/// Dispatches on the stored dtype.
std::variant<ScoreGrid, LabelGrid> read_grid(const std::filesystem::path& path);

void write_grid(const ScoreGrid& grid, const std::filesystem::path& path);
void write_grid(const LabelGrid& grid, const std::filesystem::path& path);

/// Shape and value checks shared by the reader and writer.
void validate(const ScoreGrid& grid);
void validate(const LabelGrid& grid);
void validate_pair(const ScoreGrid& scores, const LabelGrid& labels);

/// 2-D real grid stored as float64 NPY.
void write_pixel_array(const PixelArray& values, const std::filesystem::path& path);
PixelArray read_pixel_array(const std::filesystem::path& path);

/// Cluster maps are stored as uint8 (H, W) NPY; at most 256 clusters.
void write_cluster_map(const ClusterMap& map, const std::filesystem::path& path);
ClusterMap read_cluster_map(const std::filesystem::path& path);

enum class Split { calibration, test };

struct DatasetManifest {
  std::string name;
  std::filesystem::path score_path;  // relative to the manifest's directory
  std::filesystem::path label_path;
  Split split = Split::calibration;
  Index rows = 0;
  Index cols = 0;
  Index count = 0;
};

/// Parses the manifest JSON and checks that both grids exist with the declared shape.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct Dataset {
  ScoreGrid scores;
  LabelGrid labels;
};

/// Loads the grids a manifest points at, resolving paths against the manifest location.
Dataset load_dataset(const std::filesystem::path& manifest_path);

struct RgbImage {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::array<std::uint8_t, 3>> pixels;  // row-major

  const std::array<std::uint8_t, 3>& at(Index r, Index c) const {
    return pixels[static_cast<std::size_t>(r * cols + c)];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

enum class HeatmapMode {
  sequential,  // [min, max] -> black..white
  diverging,   // negative -> blue, zero -> white, positive -> red; symmetric scale
};

RgbImage render_heatmap(const PixelArray& values, HeatmapMode mode);
RgbImage render_clusters(const ClusterMap& map);

void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

inline void write_heatmap(const PixelArray& values, const std::filesystem::path& path,
                          HeatmapMode mode) {
  write_ppm(render_heatmap(values, mode), path);
}

}  // namespace kandinsky
