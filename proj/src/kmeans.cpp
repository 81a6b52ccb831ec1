#include "kandinsky/kmeans.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace kandinsky {

QuantileFeatureGrid extract_features(const CalibrationModel& model,
                                     const std::vector<double>& quantiles) {
  if (model.strategy != Strategy::pixelwise)
    throw ValidationError("quantile features require a pixelwise model");
  if (quantiles.empty()) throw ValidationError("at least one quantile level is required");
  for (std::size_t j = 0; j < quantiles.size(); ++j) {
    if (!(quantiles[j] > 0.0 && quantiles[j] < 1.0))
      throw ValidationError("feature quantiles must lie in (0, 1)");
    if (j > 0 && quantiles[j] <= quantiles[j - 1])
      throw ValidationError("feature quantiles must be strictly ascending");
  }
  QuantileFeatureGrid grid;
  grid.quantiles = quantiles;
  grid.rows = model.rows();
  grid.cols = model.cols();
  grid.features.resize(grid.rows * grid.cols, static_cast<Index>(quantiles.size()));
  parallel_for(0, grid.rows * grid.cols, [&](std::ptrdiff_t p) {
    const auto& curve = model.curve_at(p / grid.cols, p % grid.cols);
    for (std::size_t j = 0; j < quantiles.size(); ++j)
      grid.features(p, static_cast<Index>(j)) = curve_value(curve, quantiles[j]);
  });
  return grid;
}

double inertia(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
               const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

Index count_distinct_rows(const Eigen::MatrixXd& points) {
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index j = 0; j < points.cols(); ++j) {
      if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Index distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  Eigen::MatrixXd centroids(k, x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= d2(chosen);
        if (target < 0) break;
      }
      // Never pick a point coinciding with an existing centroid.
      while (d2(chosen) == 0) chosen = (chosen + 1) % n;
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

// Returns true if any assignment changed.
bool assign(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
  bool changed = false;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    if (labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
      changed = true;
    }
  }
  return changed;
}

void update(const Eigen::MatrixXd& x, std::vector<int>& labels, Eigen::MatrixXd& centroids) {
  const auto k = centroids.rows();
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      continue;
    }
    // Empty cluster: take the point of the largest cluster farthest from its centroid.
    const auto largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < x.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] != largest) continue;
      const double d = (x.row(i) - sums.row(largest) / double(counts[static_cast<std::size_t>(largest)])).squaredNorm();
      if (d > far_d) { far_d = d; far = i; }
    }
    labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
    --counts[static_cast<std::size_t>(largest)];
    sums.row(largest) -= x.row(far);
    counts[static_cast<std::size_t>(c)] = 1;
    sums.row(c) = x.row(far);
    centroids.row(c) = x.row(far);
    centroids.row(largest) = sums.row(largest) / double(counts[static_cast<std::size_t>(largest)]);
  }
}

}  // namespace

KMeansResult kmeans(const QuantileFeatureGrid& features, const KMeansConfig& config) {
  const Eigen::MatrixXd& x = features.features;
  const Index n = x.rows();
  const int k = config.n_clusters;
  if (k < 1 || k > n) throw ValidationError("n_clusters must lie in [1, H*W]");
  if (!x.allFinite()) throw ValidationError("feature vectors must be finite");
  if (count_distinct_rows(x) < k)
    throw ValidationError("n_clusters exceeds the number of distinct feature vectors");

  if (config.n_init < 1) throw ValidationError("n_init must be at least 1");

  std::mt19937_64 rng(config.seed);
  KMeansResult result;
  Eigen::MatrixXd centroids;
  std::vector<int> labels;
  double best = std::numeric_limits<double>::infinity();
  for (int start = 0; start < config.n_init; ++start) {
    Eigen::MatrixXd c = seed_plus_plus(x, k, rng);
    std::vector<int> l(static_cast<std::size_t>(n), -1);
    std::vector<double> history;
    int iterations = 0;
    for (int it = 0; it < config.max_iterations; ++it) {
      const bool changed = assign(x, c, l);
      history.push_back(inertia(x, l, c));
      iterations = it + 1;
      if (!changed && it > 0) break;
      update(x, l, c);
    }
    if (history.empty()) {
      assign(x, c, l);
      history.push_back(inertia(x, l, c));
    }
    if (history.back() < best) {
      best = history.back();
      centroids = std::move(c);
      labels = std::move(l);
      result.inertia_history = std::move(history);
      result.iterations = iterations;
    }
  }

  // Relabel by mean radius from the image midpoint.
  const double mid_r = 0.5 * double(features.rows - 1);
  const double mid_c = 0.5 * double(features.cols - 1);
  std::vector<double> radius_sum(static_cast<std::size_t>(k), 0.0);
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index p = 0; p < n; ++p) {
    const auto id = static_cast<std::size_t>(labels[static_cast<std::size_t>(p)]);
    radius_sum[id] += std::hypot(double(p / features.cols) - mid_r, double(p % features.cols) - mid_c);
    ++counts[id];
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return radius_sum[static_cast<std::size_t>(a)] / double(counts[static_cast<std::size_t>(a)]) <
           radius_sum[static_cast<std::size_t>(b)] / double(counts[static_cast<std::size_t>(b)]);
  });
  std::vector<int> new_id(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) new_id[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

  result.clusters.n_clusters = k;
  result.clusters.assignment.resize(features.rows, features.cols);
  result.centroids.resize(k, x.cols());
  for (int c = 0; c < k; ++c) result.centroids.row(new_id[static_cast<std::size_t>(c)]) = centroids.row(c);
  for (Index p = 0; p < n; ++p) {
    labels[static_cast<std::size_t>(p)] = new_id[static_cast<std::size_t>(labels[static_cast<std::size_t>(p)])];
    result.clusters.assignment.data()[p] = labels[static_cast<std::size_t>(p)];
  }
  result.inertia = inertia(x, labels, result.centroids);
  return result;
}

}  // namespace kandinsky
