#pragma once

#include "kandinsky/conformal.hpp"
#include "kandinsky/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace kandinsky {

/// Quantile levels at which non-conformity curves are compared.
inline const std::vector<double> kDefaultQuantiles = {0.6, 0.7, 0.8, 0.9};

/// Per-pixel curve values z(q_j). Row r * cols + c holds pixel (r, c).
struct QuantileFeatureGrid {
  std::vector<double> quantiles;
  Index rows = 0;
  Index cols = 0;
  Eigen::MatrixXd features;

  Index dims() const { return features.cols(); }
  auto pixel(Index r, Index c) const { return features.row(r * cols + c); }
};

/// Samples every pixel's curve of a pixelwise model at the given ascending levels in (0, 1).
QuantileFeatureGrid extract_features(const CalibrationModel& model,
                                     const std::vector<double>& quantiles = kDefaultQuantiles);

struct KMeansConfig {
  int n_clusters = 4;
  int max_iterations = 300;
  int n_init = 10;  // independent k-means++ starts; the lowest inertia wins
  std::uint64_t seed = 0;
};

struct KMeansResult {
  ClusterMap clusters;          // ids ordered by mean distance from the image midpoint
  Eigen::MatrixXd centroids;    // row per (relabelled) cluster
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step of the winning start
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding on the raw feature vectors.
KMeansResult kmeans(const QuantileFeatureGrid& features, const KMeansConfig& config);

/// Sum of squared distances from each row to its assigned centroid.
double inertia(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
               const Eigen::MatrixXd& centroids);

/// Number of distinct rows (exact comparison).
Index count_distinct_rows(const Eigen::MatrixXd& points);

}  // namespace kandinsky
