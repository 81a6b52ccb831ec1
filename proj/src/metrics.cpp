#include "kandinsky/metrics.hpp"

#include "kandinsky/grid_io.hpp"
#include "kandinsky/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

namespace kandinsky {

double ece_from_bins(const ReliabilityBins& bins) {
  const Index n = bins.total();
  if (n == 0) throw ValidationError("reliability bins are empty");
  double sum = 0.0;
  for (std::size_t m = 0; m < bins.count.size(); ++m) {
    if (bins.count[m] == 0) continue;
    sum += static_cast<double>(bins.count[m]) * std::abs(bins.confidence[m] - bins.accuracy[m]);
  }
  return sum / static_cast<double>(n);
}

CeMode parse_ce_mode(const std::string& s) {
  if (s == "absolute") return CeMode::absolute;
  if (s == "signed-literal" || s == "signed_literal") return CeMode::signed_literal;
  throw ValidationError("unknown coverage-error mode '" + s + "'");
}

namespace {

void check_pixel(const ScoreGrid& grid, Pixel p) {
  if (p.row < 0 || p.row >= grid.rows() || p.col < 0 || p.col >= grid.cols())
    throw ValidationError("pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                          ") is outside the image");
}

// Sorted non-conformity scores of the true labels at one pixel across the test images.
std::vector<float> true_label_scores(const ScoreGrid& scores, const LabelGrid& labels, Pixel p) {
  std::vector<float> s(static_cast<std::size_t>(scores.images()));
  for (Index i = 0; i < scores.images(); ++i)
    s[static_cast<std::size_t>(i)] =
        nonconformity_score(scores(i, p.row, p.col), labels(i, p.row, p.col));
  std::sort(s.begin(), s.end());
  return s;
}

CoverageCurve coverage_from_sorted(std::span<const float> sorted_true,
                                   std::span<const float> thresholds) {
  const auto levels = static_cast<int>(thresholds.size());
  CoverageCurve curve;
  curve.levels.resize(thresholds.size());
  curve.empirical.resize(thresholds.size());
  const auto n = static_cast<double>(sorted_true.size());
  for (int m = 1; m <= levels; ++m) {
    const auto idx = static_cast<std::size_t>(m - 1);
    const auto covered =
        std::upper_bound(sorted_true.begin(), sorted_true.end(), thresholds[idx]) -
        sorted_true.begin();
    curve.levels[idx] = static_cast<double>(m) / levels;
    curve.empirical[idx] = static_cast<double>(covered) / n;
  }
  return curve;
}

void check_model_against(const CalibrationModel& model, const ScoreGrid& scores,
                         const LabelGrid& labels) {
  validate_pair(scores, labels);
  if (model.rows() != scores.rows() || model.cols() != scores.cols())
    throw ValidationError("model image shape does not match the test grids");
}

}  // namespace

CoverageCurve coverage_curve_from_thresholds(std::span<const float> thresholds,
                                             const ScoreGrid& test_scores,
                                             const LabelGrid& test_labels, Pixel pixel) {
  validate_pair(test_scores, test_labels);
  check_pixel(test_scores, pixel);
  if (thresholds.empty()) throw ValidationError("at least one coverage level is required");
  const auto sorted = true_label_scores(test_scores, test_labels, pixel);
  return coverage_from_sorted(sorted, thresholds);
}

std::vector<float> level_thresholds(const NonconformityCurve& curve, int levels) {
  if (levels < 1) throw ValidationError("level count must be at least 1");
  std::vector<float> t(static_cast<std::size_t>(levels));
  for (int m = 1; m <= levels; ++m)
    t[static_cast<std::size_t>(m - 1)] = curve_value_at_level(curve, m, levels);
  return t;
}

CoverageCurve coverage_curve(const CalibrationModel& model, const ScoreGrid& test_scores,
                             const LabelGrid& test_labels, Pixel pixel, int levels) {
  check_model_against(model, test_scores, test_labels);
  check_pixel(test_scores, pixel);
  const auto thresholds = level_thresholds(model.curve_at(pixel.row, pixel.col), levels);
  return coverage_curve_from_thresholds(thresholds, test_scores, test_labels, pixel);
}

double coverage_error(const CoverageCurve& curve, CeMode mode) {
  const auto levels = curve.levels.size();
  if (levels == 0 || curve.empirical.size() != levels)
    throw ValidationError("coverage curve is empty or inconsistent");
  double sum = 0.0;
  for (std::size_t m = 0; m < levels; ++m) {
    const double diff = curve.empirical[m] - curve.levels[m];
    sum += mode == CeMode::absolute ? std::abs(diff) : diff;
  }
  return mode == CeMode::absolute ? sum / static_cast<double>(levels) : sum;
}

double linear_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CeGrid ce_grid(const CalibrationModel& model, const ScoreGrid& test_scores,
               const LabelGrid& test_labels, int levels, CeMode mode) {
  check_model_against(model, test_scores, test_labels);
  if (levels < 1) throw ValidationError("level count must be at least 1");
  const Index h = test_scores.rows();
  const Index w = test_scores.cols();

  // Thresholds depend only on the curve, so compute them once per curve.
  std::vector<std::vector<float>> thresholds(model.curves.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(model.curves.size()), [&](std::ptrdiff_t c) {
    thresholds[static_cast<std::size_t>(c)] =
        level_thresholds(model.curves[static_cast<std::size_t>(c)], levels);
  });

  CeGrid out;
  out.values.resize(h, w);
  std::vector<std::vector<double>> coverage(static_cast<std::size_t>(h * w));
  parallel_for(0, h * w, [&](std::ptrdiff_t p) {
    const Pixel px{p / w, p % w};
    const auto sorted = true_label_scores(test_scores, test_labels, px);
    const auto& t = thresholds[static_cast<std::size_t>(model.assignment.assignment(px.row, px.col))];
    auto curve = coverage_from_sorted(sorted, t);
    out.values(px.row, px.col) = coverage_error(curve, mode);
    coverage[static_cast<std::size_t>(p)] = std::move(curve.empirical);
  });

  std::vector<double> flat(out.values.data(), out.values.data() + out.values.size());
  out.mean = out.values.mean();
  out.q05 = linear_quantile(flat, 0.05);
  out.q95 = linear_quantile(flat, 0.95);
  out.levels.resize(static_cast<std::size_t>(levels));
  out.mean_coverage.assign(static_cast<std::size_t>(levels), 0.0);
  for (int m = 0; m < levels; ++m) out.levels[static_cast<std::size_t>(m)] = double(m + 1) / levels;
  for (const auto& cov : coverage) {
    for (std::size_t m = 0; m < cov.size(); ++m) out.mean_coverage[m] += cov[m];
  }
  for (auto& v : out.mean_coverage) v /= static_cast<double>(h * w);
  return out;
}

namespace {
std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}
}  // namespace

void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "bin,lower,upper,confidence,accuracy,count\n";
  for (int m = 0; m < bins.bins; ++m) {
    const auto i = static_cast<std::size_t>(m);
    out << m << ',' << double(m) / bins.bins << ',' << double(m + 1) / bins.bins << ','
        << bins.confidence[i] << ',' << bins.accuracy[i] << ',' << bins.count[i] << '\n';
  }
}

void write_coverage_csv(const CeGrid& grid, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "level,mean_coverage\n";
  for (std::size_t m = 0; m < grid.levels.size(); ++m)
    out << grid.levels[m] << ',' << grid.mean_coverage[m] << '\n';
}

void write_coverage_csv(const CoverageCurve& curve, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "level,coverage\n";
  for (std::size_t m = 0; m < curve.levels.size(); ++m)
    out << curve.levels[m] << ',' << curve.empirical[m] << '\n';
}

void write_summary_json(const CeGrid& grid, const std::filesystem::path& path) {
  nlohmann::json j{{"mean", grid.mean}, {"q05", grid.q05}, {"q95", grid.q95}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace kandinsky
