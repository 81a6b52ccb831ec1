#pragma once

#include "kandinsky/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kandinsky {

/// s(x, y) = 1 - f(x)_y for a binary model that reports the foreground score f.
/// Label 0 uses the background score 1 - f, so s = f.
float nonconformity_score(float foreground_score, std::uint8_t label);

/// Quantile function of a multiset of non-conformity scores, kept as the sorted scores.
/// Ties are retained; the quantile rule indexes positions, not distinct values.
class NonconformityCurve {
 public:
  NonconformityCurve() = default;
  /// Sorts the scores. Requires at least one score, all in [0, 1].
  explicit NonconformityCurve(std::vector<float> scores);

  std::size_t size() const { return sorted_.size(); }
  std::span<const float> sorted_scores() const { return sorted_; }

  /// k-th smallest score (1-based); 1.0 when k exceeds the count.
  float order_statistic(std::size_t k) const;

  friend bool operator==(const NonconformityCurve&, const NonconformityCurve&) = default;

 private:
  std::vector<float> sorted_;
};

/// ceil((n + 1)(1 - alpha)), guarded against round-off at exact integers.
std::size_t quantile_rank(std::size_t n, double alpha);

/// Threshold q_alpha: the ceil((n+1)(1-alpha))-th smallest score, or 1.0 when that
/// rank exceeds n (the full prediction set). Requires 0 < alpha < 1.
float conformal_quantile(const NonconformityCurve& curve, double alpha);

/// z(q): the curve evaluated at quantile level q in [0, 1]. q = 0 gives the smallest
/// score and q = 1 gives 1.0.
float curve_value(const NonconformityCurve& curve, double qhat);

/// z(m / M) with the rank computed in integer arithmetic, used for coverage levels.
float curve_value_at_level(const NonconformityCurve& curve, int m, int levels);

struct PredictionSet {
  bool contains_background = false;
  bool contains_foreground = false;

  bool contains(std::uint8_t label) const {
    return label ? contains_foreground : contains_background;
  }
  bool empty() const { return !contains_background && !contains_foreground; }
  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Includes class y iff s(x, y) <= threshold.
PredictionSet prediction_set(float foreground_score, float threshold);

enum class Strategy { pixelwise, imagewise, clustered };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Per-pixel lookup from coordinate to the curve that forms its prediction sets.
struct CalibrationModel {
  Strategy strategy = Strategy::imagewise;
  std::vector<NonconformityCurve> curves;
  ClusterMap assignment;

  Index rows() const { return assignment.rows(); }
  Index cols() const { return assignment.cols(); }
  const NonconformityCurve& curve_at(Index row, Index col) const {
    return curves[static_cast<std::size_t>(assignment.assignment(row, col))];
  }

  friend bool operator==(const CalibrationModel&, const CalibrationModel&) = default;
};

/// Checks the assignment covers every pixel with a valid curve index and the
/// strategy-specific shape rules.
void validate(const CalibrationModel& model);

/// One curve per pixel from that pixel's N scores.
CalibrationModel calibrate_pixelwise(const ScoreGrid& scores, const LabelGrid& labels);
/// A single curve pooling all N*H*W scores.
CalibrationModel calibrate_imagewise(const ScoreGrid& scores, const LabelGrid& labels);
/// One curve per cluster, pooling the N*|C| scores of its pixels.
CalibrationModel calibrate_clustered(const ScoreGrid& scores, const LabelGrid& labels,
                                     const ClusterMap& clusters);

}  // namespace kandinsky
