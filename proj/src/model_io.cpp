#include "kandinsky/model_io.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/npy.hpp"

#include "json.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace kandinsky {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
void write_assignment(const CalibrationModel& model, const fs::path& path) {
  const auto& a = model.assignment.assignment;
  std::vector<T> ids(static_cast<std::size_t>(a.size()));
  for (Index i = 0; i < a.size(); ++i) ids[static_cast<std::size_t>(i)] = static_cast<T>(a.data()[i]);
  const std::size_t shape[] = {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols())};
  npy::write<T>(path, shape, ids);
}

template <typename T>
std::vector<int> read_assignment(const fs::path& path, Index rows, Index cols) {
  const auto t = npy::read<T>(path);
  if (t.shape.size() != 2 || Index(t.shape[0]) != rows || Index(t.shape[1]) != cols)
    throw FormatError("assignment shape does not match model.json");
  return {t.values.begin(), t.values.end()};
}

}  // namespace

void write_model(const CalibrationModel& model, const fs::path& dir, const std::string& details) {
  validate(model);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory '" + dir.string() + "': " + ec.message());

  std::vector<float> scores;
  std::vector<std::int64_t> offsets{0};
  for (const auto& c : model.curves) {
    const auto s = c.sorted_scores();
    scores.insert(scores.end(), s.begin(), s.end());
    offsets.push_back(static_cast<std::int64_t>(scores.size()));
  }
  const std::size_t score_shape[] = {scores.size()};
  const std::size_t offset_shape[] = {offsets.size()};
  npy::write<float>(dir / "curves.npy", score_shape, scores);
  npy::write<std::int64_t>(dir / "curve_offsets.npy", offset_shape, offsets);
  const bool wide = model.curves.size() > std::numeric_limits<std::uint16_t>::max();
  if (wide)
    write_assignment<std::uint32_t>(model, dir / "assignment.npy");
  else
    write_assignment<std::uint16_t>(model, dir / "assignment.npy");

  json details_json;
  try {
    details_json = json::parse(details);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model details are not valid JSON: ") + e.what());
  }
  json j = {{"strategy", std::string(to_string(model.strategy))},
            {"rows", model.rows()},
            {"cols", model.cols()},
            {"n_curves", model.curves.size()},
            {"curves", "curves.npy"},
            {"curve_offsets", "curve_offsets.npy"},
            {"assignment", "assignment.npy"},
            {"details", details_json}};
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw IoError("cannot write '" + (dir / "model.json").string() + "'");
  out << j.dump(2) << '\n';
}

CalibrationModel read_model(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("cannot open '" + (dir / "model.json").string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  CalibrationModel model;
  Index rows = 0, cols = 0;
  std::size_t n_curves = 0;
  fs::path curves_path, offsets_path, assignment_path;
  try {
    const json j = json::parse(ss.str());
    model.strategy = parse_strategy(j.at("strategy").get<std::string>());
    rows = j.at("rows").get<Index>();
    cols = j.at("cols").get<Index>();
    n_curves = j.at("n_curves").get<std::size_t>();
    curves_path = dir / j.at("curves").get<std::string>();
    offsets_path = dir / j.at("curve_offsets").get<std::string>();
    assignment_path = dir / j.at("assignment").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("malformed model.json: " + std::string(e.what()));
  }

  const auto scores = npy::read<float>(curves_path);
  const auto offsets = npy::read<std::int64_t>(offsets_path);
  if (offsets.values.size() != n_curves + 1 || offsets.values.front() != 0 ||
      offsets.values.back() != static_cast<std::int64_t>(scores.values.size()))
    throw FormatError("curve offsets do not match curves.npy");
  for (std::size_t c = 0; c < n_curves; ++c) {
    const auto b = offsets.values[c], e = offsets.values[c + 1];
    if (!(b < e)) throw FormatError("curve " + std::to_string(c) + " is empty");
    model.curves.emplace_back(std::vector<float>(scores.values.begin() + b, scores.values.begin() + e));
  }

  const auto header = npy::read_file(assignment_path).header;
  const auto ids = header.dtype == npy::DType::uint16
                       ? read_assignment<std::uint16_t>(assignment_path, rows, cols)
                       : read_assignment<std::uint32_t>(assignment_path, rows, cols);
  model.assignment.assignment.resize(rows, cols);
  std::copy(ids.begin(), ids.end(), model.assignment.assignment.data());
  model.assignment.n_clusters = static_cast<int>(n_curves);
  validate(model);
  return model;
}

}  // namespace kandinsky
