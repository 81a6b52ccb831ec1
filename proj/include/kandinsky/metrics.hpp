#pragma once

#include "kandinsky/conformal.hpp"
#include "kandinsky/error.hpp"
#include "kandinsky/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kandinsky {

/// Equal-width bin of a score in [0, 1]: [m/M, (m+1)/M), the last bin closed at 1.
/// The edges are the doubles m/M, so membership agrees with an explicit interval test.
inline int score_bin(double score, int bins) {
  int m = static_cast<int>(std::floor(score * bins));
  m = std::clamp(m, 0, bins - 1);
  if (m > 0 && score < static_cast<double>(m) / bins) --m;
  if (m < bins - 1 && score >= static_cast<double>(m + 1) / bins) ++m;
  return m;
}

/// Reliability diagram data: per-bin mean score, positive fraction, and occupancy.
struct ReliabilityBins {
  int bins = 0;
  std::vector<double> confidence;
  std::vector<double> accuracy;
  std::vector<Index> count;

  Index total() const {
    Index n = 0;
    for (auto c : count) n += c;
    return n;
  }
};

template <typename Scalar>
ReliabilityBins reliability_bins(std::span<const Scalar> scores,
                                 std::span<const std::uint8_t> labels, int bins) {
  if (scores.size() != labels.size())
    throw ValidationError("scores and labels must have equal length");
  if (scores.empty()) throw ValidationError("reliability bins need at least one sample");
  if (bins < 1) throw ValidationError("bin count must be at least 1");
  ReliabilityBins out;
  out.bins = bins;
  out.confidence.assign(static_cast<std::size_t>(bins), 0.0);
  out.accuracy.assign(static_cast<std::size_t>(bins), 0.0);
  out.count.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = static_cast<double>(scores[i]);
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("scores must lie in [0, 1]");
    const auto m = static_cast<std::size_t>(score_bin(s, bins));
    out.confidence[m] += s;
    out.accuracy[m] += labels[i] ? 1.0 : 0.0;
    ++out.count[m];
  }
  for (std::size_t m = 0; m < out.count.size(); ++m) {
    if (out.count[m] == 0) continue;
    out.confidence[m] /= static_cast<double>(out.count[m]);
    out.accuracy[m] /= static_cast<double>(out.count[m]);
  }
  return out;
}

/// (1/N) sum_m |B_m| |conf(B_m) - acc(B_m)|; empty bins contribute nothing.
double ece_from_bins(const ReliabilityBins& bins);

template <typename Scalar>
double binned_ece(std::span<const Scalar> scores, std::span<const std::uint8_t> labels,
                  int bins) {
  return ece_from_bins(reliability_bins(scores, labels, bins));
}

/// Empirical coverage at the target levels m/M, m = 1..M.
struct CoverageCurve {
  std::vector<double> levels;
  std::vector<double> empirical;
};

enum class CeMode {
  absolute,        // (1/M) sum |cov_m - m/M|
  signed_literal,  // sum (cov_m - m/M), no absolute value or normalization
};

CeMode parse_ce_mode(const std::string& s);

/// Coverage at one pixel given one threshold per level (thresholds[m-1] for level m/M).
CoverageCurve coverage_curve_from_thresholds(std::span<const float> thresholds,
                                             const ScoreGrid& test_scores,
                                             const LabelGrid& test_labels, Pixel pixel);

/// Thresholds z(m/M) of the pixel's curve, i.e. conformal_quantile at alpha = 1 - m/M.
std::vector<float> level_thresholds(const NonconformityCurve& curve, int levels);

CoverageCurve coverage_curve(const CalibrationModel& model, const ScoreGrid& test_scores,
                             const LabelGrid& test_labels, Pixel pixel, int levels);

double coverage_error(const CoverageCurve& curve, CeMode mode = CeMode::absolute);

/// Linear-interpolation quantile (numpy's default) of the values.
double linear_quantile(std::vector<double> values, double q);

struct CeGrid {
  PixelArray values;                   // coverage error per pixel
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  std::vector<double> levels;          // m/M
  std::vector<double> mean_coverage;   // per level, averaged over pixels
};

CeGrid ce_grid(const CalibrationModel& model, const ScoreGrid& test_scores,
               const LabelGrid& test_labels, int levels, CeMode mode = CeMode::absolute);

void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path);
void write_coverage_csv(const CeGrid& grid, const std::filesystem::path& path);
void write_coverage_csv(const CoverageCurve& curve, const std::filesystem::path& path);
/// {"mean": .., "q05": .., "q95": ..}
void write_summary_json(const CeGrid& grid, const std::filesystem::path& path);

}  // namespace kandinsky
