#include "kandinsky/conformal.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/grid_io.hpp"
#include "kandinsky/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kandinsky {

float nonconformity_score(float foreground_score, std::uint8_t label) {
  if (!(foreground_score >= 0.0f && foreground_score <= 1.0f))
    throw ValidationError("foreground score " + std::to_string(foreground_score) +
                          " is outside [0, 1]");
  if (label > 1) throw ValidationError("label must be 0 or 1");
  return label ? 1.0f - foreground_score : foreground_score;
}

NonconformityCurve::NonconformityCurve(std::vector<float> scores) : sorted_(std::move(scores)) {
  if (sorted_.empty()) throw ValidationError("a non-conformity curve needs at least one score");
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    if (!(sorted_[i] >= 0.0f && sorted_[i] <= 1.0f))
      throw ValidationError("non-conformity score at index " + std::to_string(i) +
                            " is outside [0, 1]");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

float NonconformityCurve::order_statistic(std::size_t k) const {
  if (k == 0) k = 1;
  if (k > sorted_.size()) return 1.0f;
  return sorted_[k - 1];
}

std::size_t quantile_rank(std::size_t n, double alpha) {
  const double x = static_cast<double>(n + 1) * (1.0 - alpha);
  // 1 - alpha and the product each round once; an exact integer must not be pushed up.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n + 1);
  const double k = std::ceil(x - slack);
  return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

float conformal_quantile(const NonconformityCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  return curve.order_statistic(quantile_rank(curve.size(), alpha));
}

float curve_value(const NonconformityCurve& curve, double qhat) {
  if (!(qhat >= 0.0 && qhat <= 1.0))
    throw ValidationError("quantile level must lie in [0, 1], got " + std::to_string(qhat));
  if (qhat == 0.0) return curve.order_statistic(1);
  if (qhat == 1.0) return 1.0f;
  return conformal_quantile(curve, 1.0 - qhat);
}

float curve_value_at_level(const NonconformityCurve& curve, int m, int levels) {
  if (levels < 1 || m < 0 || m > levels)
    throw ValidationError("coverage level m/M requires 0 <= m <= M and M >= 1");
  const auto n1 = static_cast<std::size_t>(curve.size() + 1);
  const auto num = n1 * static_cast<std::size_t>(m);
  const auto den = static_cast<std::size_t>(levels);
  return curve.order_statistic((num + den - 1) / den);
}

PredictionSet prediction_set(float foreground_score, float threshold) {
  return PredictionSet{foreground_score <= threshold, 1.0f - foreground_score <= threshold};
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::pixelwise: return "pixelwise";
    case Strategy::imagewise: return "imagewise";
    case Strategy::clustered: return "clustered";
  }
  return "";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "pixelwise") return Strategy::pixelwise;
  if (s == "imagewise") return Strategy::imagewise;
  if (s == "clustered") return Strategy::clustered;
  throw ValidationError("unknown calibration strategy '" + std::string(s) + "'");
}

void validate(const CalibrationModel& model) {
  if (model.curves.empty()) throw ValidationError("calibration model has no curves");
  if (model.assignment.n_clusters != static_cast<int>(model.curves.size()))
    throw ValidationError("assignment cluster count does not match curve count");
  validate_cluster_map(model.assignment);
  for (const auto& c : model.curves) {
    if (c.size() == 0) throw ValidationError("calibration model contains an empty curve");
  }
  const Index pixels = model.rows() * model.cols();
  switch (model.strategy) {
    case Strategy::imagewise:
      if (model.curves.size() != 1) throw ValidationError("imagewise model must have one curve");
      break;
    case Strategy::pixelwise:
      if (static_cast<Index>(model.curves.size()) != pixels)
        throw ValidationError("pixelwise model must have one curve per pixel");
      for (Index i = 0; i < pixels; ++i) {
        if (model.assignment.assignment.data()[i] != i)
          throw ValidationError("pixelwise model must use the identity assignment");
      }
      break;
    case Strategy::clustered:
      break;
  }
}

CalibrationModel calibrate_pixelwise(const ScoreGrid& scores, const LabelGrid& labels) {
  validate_pair(scores, labels);
  const Index n = scores.images();
  const Index h = scores.rows();
  const Index w = scores.cols();
  CalibrationModel model;
  model.strategy = Strategy::pixelwise;
  model.curves.resize(static_cast<std::size_t>(h * w));
  model.assignment.assignment.resize(h, w);
  model.assignment.n_clusters = static_cast<int>(h * w);
  parallel_for(0, h * w, [&](std::ptrdiff_t p) {
    const Index r = p / w;
    const Index c = p % w;
    std::vector<float> s(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      s[static_cast<std::size_t>(i)] = nonconformity_score(scores(i, r, c), labels(i, r, c));
    model.curves[static_cast<std::size_t>(p)] = NonconformityCurve(std::move(s));
    model.assignment.assignment(r, c) = static_cast<int>(p);
  });
  return model;
}

CalibrationModel calibrate_imagewise(const ScoreGrid& scores, const LabelGrid& labels) {
  validate_pair(scores, labels);
  ClusterMap single;
  single.assignment.setZero(scores.rows(), scores.cols());
  single.n_clusters = 1;
  auto model = calibrate_clustered(scores, labels, single);
  model.strategy = Strategy::imagewise;
  return model;
}

CalibrationModel calibrate_clustered(const ScoreGrid& scores, const LabelGrid& labels,
                                     const ClusterMap& clusters) {
  validate_pair(scores, labels);
  if (clusters.rows() != scores.rows() || clusters.cols() != scores.cols())
    throw ValidationError("cluster map shape does not match the image shape");
  validate_cluster_map(clusters);

  const auto sizes = cluster_sizes(clusters);
  std::vector<std::vector<float>> pooled(sizes.size());
  for (std::size_t id = 0; id < sizes.size(); ++id)
    pooled[id].reserve(static_cast<std::size_t>(sizes[id] * scores.images()));
  // Pixel-major order within each image; the curve sorts anyway.
  for (Index i = 0; i < scores.images(); ++i) {
    for (Index r = 0; r < scores.rows(); ++r) {
      for (Index c = 0; c < scores.cols(); ++c) {
        pooled[static_cast<std::size_t>(clusters.assignment(r, c))].push_back(
            nonconformity_score(scores(i, r, c), labels(i, r, c)));
      }
    }
  }
  CalibrationModel model;
  model.strategy = Strategy::clustered;
  model.assignment = clusters;
  model.curves.resize(pooled.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(pooled.size()), [&](std::ptrdiff_t id) {
    model.curves[static_cast<std::size_t>(id)] =
        NonconformityCurve(std::move(pooled[static_cast<std::size_t>(id)]));
  });
  return model;
}

}  // namespace kandinsky
