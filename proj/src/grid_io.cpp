#include "kandinsky/grid_io.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/npy.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kandinsky {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Scalar>
void validate_shape(const ImageStack<Scalar>& grid) {
  if (grid.images() < 1) throw ValidationError("grid must contain at least one image (N >= 1)");
  if (grid.rows() < 1 || grid.cols() < 1) throw ValidationError("grid images must be non-empty");
  if (grid.size() != grid.images() * grid.rows() * grid.cols())
    throw ValidationError("grid value count does not match its shape");
}

template <typename Scalar>
ImageStack<Scalar> read_stack(const fs::path& path) {
  auto typed = npy::read<Scalar>(path);
  if (typed.shape.size() != 3)
    throw FormatError(path.string() + ": expected a 3-D (N, H, W) array");
  const auto n = static_cast<Index>(typed.shape[0]);
  const auto h = static_cast<Index>(typed.shape[1]);
  const auto w = static_cast<Index>(typed.shape[2]);
  ImageStack<Scalar> grid(n, h, w, std::move(typed.values));
  validate(grid);
  return grid;
}

template <typename Scalar>
void write_stack(const ImageStack<Scalar>& grid, const fs::path& path) {
  validate(grid);
  const std::size_t shape[] = {static_cast<std::size_t>(grid.images()),
                               static_cast<std::size_t>(grid.rows()),
                               static_cast<std::size_t>(grid.cols())};
  npy::write<Scalar>(path, shape, grid.values());
}

std::string_view split_name(Split s) { return s == Split::calibration ? "calibration" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "calibration") return Split::calibration;
  if (s == "test") return Split::test;
  throw ValidationError("manifest split must be 'calibration' or 'test', got '" + s + "'");
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void validate(const ScoreGrid& grid) {
  validate_shape(grid);
  const auto values = grid.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValidationError("score grid value " + std::to_string(v) + " at flat index " +
                            std::to_string(i) + " is outside [0, 1]");
  }
}

void validate(const LabelGrid& grid) {
  validate_shape(grid);
  const auto values = grid.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 1)
      throw ValidationError("label grid value " + std::to_string(values[i]) + " at flat index " +
                            std::to_string(i) + " is not 0 or 1");
  }
}

void validate_pair(const ScoreGrid& scores, const LabelGrid& labels) {
  if (!scores.same_shape(labels)) {
    throw ValidationError("score grid shape (" + std::to_string(scores.images()) + ", " +
                          std::to_string(scores.rows()) + ", " + std::to_string(scores.cols()) +
                          ") does not match label grid shape (" +
                          std::to_string(labels.images()) + ", " + std::to_string(labels.rows()) +
                          ", " + std::to_string(labels.cols()) + ")");
  }
}

ScoreGrid read_score_grid(const fs::path& path) { return read_stack<float>(path); }
LabelGrid read_label_grid(const fs::path& path) { return read_stack<std::uint8_t>(path); }

std::variant<ScoreGrid, LabelGrid> read_grid(const fs::path& path) {
  const auto header = npy::read_file(path).header;
  switch (header.dtype) {
    case npy::DType::float32: return read_score_grid(path);
    case npy::DType::uint8: return read_label_grid(path);
    default:
      throw FormatError(path.string() + ": grids must be float32 scores or uint8 labels");
  }
}

void write_grid(const ScoreGrid& grid, const fs::path& path) { write_stack(grid, path); }
void write_grid(const LabelGrid& grid, const fs::path& path) { write_stack(grid, path); }

void write_pixel_array(const PixelArray& values, const fs::path& path) {
  const std::size_t shape[] = {static_cast<std::size_t>(values.rows()),
                               static_cast<std::size_t>(values.cols())};
  npy::write<double>(path, shape,
                     std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

PixelArray read_pixel_array(const fs::path& path) {
  auto typed = npy::read<double>(path);
  if (typed.shape.size() != 2) throw FormatError(path.string() + ": expected a 2-D array");
  PixelArray out(static_cast<Index>(typed.shape[0]), static_cast<Index>(typed.shape[1]));
  std::copy(typed.values.begin(), typed.values.end(), out.data());
  return out;
}

void write_cluster_map(const ClusterMap& map, const fs::path& path) {
  validate_cluster_map(map);
  if (map.n_clusters > 256) throw ValidationError("uint8 cluster maps hold at most 256 clusters");
  std::vector<std::uint8_t> ids(static_cast<std::size_t>(map.assignment.size()));
  for (Index i = 0; i < map.assignment.size(); ++i)
    ids[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(map.assignment.data()[i]);
  const std::size_t shape[] = {static_cast<std::size_t>(map.rows()),
                               static_cast<std::size_t>(map.cols())};
  npy::write<std::uint8_t>(path, shape, ids);
}

ClusterMap read_cluster_map(const fs::path& path) {
  auto typed = npy::read<std::uint8_t>(path);
  if (typed.shape.size() != 2) throw FormatError(path.string() + ": expected a 2-D array");
  ClusterMap map;
  map.assignment.resize(static_cast<Index>(typed.shape[0]), static_cast<Index>(typed.shape[1]));
  int max_id = -1;
  for (std::size_t i = 0; i < typed.values.size(); ++i) {
    map.assignment.data()[i] = typed.values[i];
    max_id = std::max<int>(max_id, typed.values[i]);
  }
  map.n_clusters = max_id + 1;
  validate_cluster_map(map);
  return map;
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    for (const char* key : {"name", "score_path", "label_path", "split", "image_shape", "count"}) {
      if (!j.contains(key)) throw ValidationError(path.string() + ": manifest is missing '" + key + "'");
    }
    if (j.size() != 6) throw ValidationError(path.string() + ": manifest has unexpected fields");
    m.name = j.at("name").get<std::string>();
    m.score_path = j.at("score_path").get<std::string>();
    m.label_path = j.at("label_path").get<std::string>();
    m.split = parse_split(j.at("split").get<std::string>());
    const auto shape = j.at("image_shape").get<std::vector<Index>>();
    if (shape.size() != 2) throw ValidationError(path.string() + ": image_shape must be [H, W]");
    m.rows = shape[0];
    m.cols = shape[1];
    m.count = j.at("count").get<Index>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  for (const auto& rel : {m.score_path, m.label_path}) {
    const fs::path full = base / rel;
    if (!fs::exists(full)) throw IoError("manifest references missing file '" + full.string() + "'");
    const auto header = npy::read_file(full).header;
    const std::vector<std::size_t> declared = {static_cast<std::size_t>(m.count),
                                               static_cast<std::size_t>(m.rows),
                                               static_cast<std::size_t>(m.cols)};
    if (header.shape != declared)
      throw ValidationError("'" + full.string() + "' does not have the manifest's declared shape");
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["name"] = m.name;
  j["score_path"] = m.score_path.generic_string();
  j["label_path"] = m.label_path.generic_string();
  j["split"] = split_name(m.split);
  j["image_shape"] = {m.rows, m.cols};
  j["count"] = m.count;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& manifest_path) {
  const auto m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  Dataset d{read_score_grid(base / m.score_path), read_label_grid(base / m.label_path)};
  validate_pair(d.scores, d.labels);
  return d;
}

RgbImage render_heatmap(const PixelArray& values, HeatmapMode mode) {
  if (!values.allFinite()) throw ValidationError("heatmap values must be finite");
  RgbImage img{values.rows(), values.cols(), {}};
  img.pixels.resize(static_cast<std::size_t>(values.size()));
  if (values.size() == 0) return img;
  if (mode == HeatmapMode::sequential) {
    const double lo = values.minCoeff();
    const double span = values.maxCoeff() - lo;
    for (Index i = 0; i < values.size(); ++i) {
      const auto g = span > 0 ? to_byte((values.data()[i] - lo) / span) : std::uint8_t{0};
      img.pixels[static_cast<std::size_t>(i)] = {g, g, g};
    }
  } else {
    const double scale = values.abs().maxCoeff();
    for (Index i = 0; i < values.size(); ++i) {
      const double v = scale > 0 ? values.data()[i] / scale : 0.0;
      const auto fade = to_byte(1.0 - std::abs(v));
      img.pixels[static_cast<std::size_t>(i)] =
          v > 0 ? std::array<std::uint8_t, 3>{255, fade, fade}
                : std::array<std::uint8_t, 3>{fade, fade, 255};
    }
  }
  return img;
}

RgbImage render_clusters(const ClusterMap& map) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kPalette = {{
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
      {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
      {188, 189, 34}, {23, 190, 207}, {174, 199, 232}, {255, 187, 120},
  }};
  RgbImage img{map.rows(), map.cols(), {}};
  img.pixels.resize(static_cast<std::size_t>(map.assignment.size()));
  for (Index i = 0; i < map.assignment.size(); ++i) {
    const auto id = static_cast<std::size_t>(std::max(0, map.assignment.data()[i]));
    img.pixels[static_cast<std::size_t>(i)] = kPalette[id % kPalette.size()];
  }
  return img;
}

void write_ppm(const RgbImage& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P6\n" << image.cols << ' ' << image.rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size() * 3));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

RgbImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string magic;
  Index cols = 0, rows = 0;
  int maxval = 0;
  in >> magic >> cols >> rows >> maxval;
  if (!in || magic != "P6" || maxval != 255 || cols < 0 || rows < 0)
    throw FormatError(path.string() + ": not an 8-bit binary PPM");
  in.get();
  RgbImage img{rows, cols, {}};
  img.pixels.resize(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size() * 3));
  if (!in) throw FormatError(path.string() + ": truncated PPM payload");
  return img;
}

}  // namespace kandinsky
