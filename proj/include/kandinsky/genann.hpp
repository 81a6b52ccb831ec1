#pragma once

#include "kandinsky/grid.hpp"
#include "kandinsky/kmeans.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kandinsky {

/// A disk plus nested annuli around a center offset from the image midpoint.
/// Cluster 0 is r <= radii[0], cluster j is radii[j-1] < r <= radii[j], and
/// cluster R is everything beyond the last radius.
struct AnnuliGeometry {
  double cx = 0.0;  // column offset from the midpoint, pixels
  double cy = 0.0;  // row offset from the midpoint, pixels
  std::vector<double> radii;

  /// Genes laid out as [cx, cy, r_0, ..., r_{R-1}].
  Eigen::VectorXd to_genes() const;
  static AnnuliGeometry from_genes(const Eigen::VectorXd& genes);
};

/// Assigns every pixel to its annulus; ids with no pixels are kept (n_clusters = R + 1).
/// `aspect` scales row distances so circles become axis-aligned ellipses.
ClusterMap rasterize_annuli(const AnnuliGeometry& geometry, Index rows, Index cols,
                            double aspect = 1.0);

struct DEConfig {
  int population_size = 32;
  int generations = 200;
  double mutation_factor = 0.8;
  double crossover_prob = 0.7;
  int n_radii = 3;
  /// Per-gene (low, high); empty selects the image-relative defaults.
  std::vector<std::pair<double, double>> bounds;
  std::vector<double> fitness_quantiles = kDefaultQuantiles;
  double aspect = 1.0;
  /// Use sum of squared distances (closed form per cluster) instead of distances.
  bool squared_distance = false;
  std::uint64_t seed = 0;
};

void validate(const DEConfig& config);

/// Center offsets within +-floor(H/16); inner radii in [0, 0.47 min(H, W)]; the
/// outermost radius in [0, 0.94 min(H, W)].
std::vector<std::pair<double, double>> default_annuli_bounds(Index rows, Index cols, int n_radii);

/// I_C: sum over ordered pairs (p, q) of the Euclidean distance between feature rows.
double internal_distance(std::span<const Index> pixels, const Eigen::MatrixXd& features);

/// Fitness evaluator that caches per-grid work. For grids with few distinct feature
/// vectors it reduces each cluster to a histogram over the distinct vectors.
class AnnuliFitness {
 public:
  AnnuliFitness(const QuantileFeatureGrid& features, double aspect = 1.0,
                bool squared_distance = false);

  /// Sum of I_C over the clusters the candidate induces. Empty clusters contribute 0.
  double operator()(const AnnuliGeometry& candidate) const;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

 private:
  double cluster_term(std::span<const Index> members) const;
  double pairwise_term(std::span<const Index> members) const;

  Index rows_ = 0;
  Index cols_ = 0;
  double aspect_ = 1.0;
  bool squared_ = false;
  Eigen::MatrixXd features_;             // pixels x dims
  Eigen::MatrixXd features_t_;           // dims x pixels
  std::vector<Index> distinct_id_;       // per pixel, when deduplicated
  Eigen::MatrixXd distinct_distance_;    // distinct x distinct; empty when not deduplicated
  // Pairwise terms keyed by a hash of the member list; candidates late in a run
  // often rasterize to the same pixel sets.
  mutable std::unordered_map<std::uint64_t, double> term_cache_;
  mutable std::mutex cache_mutex_;
};

double fitness(const AnnuliGeometry& candidate, const QuantileFeatureGrid& features,
               double aspect = 1.0);

/// Rand/1 mutant a + C_M (b - c), elementwise.
Eigen::VectorXd de_mutate(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, double mutation_factor);

struct EvolutionResult {
  AnnuliGeometry best;
  double best_fitness = 0.0;
  /// Minimum population fitness after initialization (index 0) and after each generation.
  std::vector<double> best_fitness_history;
};

/// Called after initialization (generation 0) and after each generation.
using GenerationObserver =
    std::function<void(int generation, std::span<const Eigen::VectorXd> population,
                       std::span<const double> fitness)>;

/// Differential evolution over annuli geometries minimizing the fitness.
EvolutionResult evolve(const QuantileFeatureGrid& features, const DEConfig& config,
                       const GenerationObserver& observer = {});

}  // namespace kandinsky
