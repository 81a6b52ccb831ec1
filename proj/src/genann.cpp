#include "kandinsky/genann.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace kandinsky {

Eigen::VectorXd AnnuliGeometry::to_genes() const {
  Eigen::VectorXd g(2 + static_cast<Index>(radii.size()));
  g(0) = cx;
  g(1) = cy;
  for (std::size_t j = 0; j < radii.size(); ++j) g(2 + static_cast<Index>(j)) = radii[j];
  return g;
}

AnnuliGeometry AnnuliGeometry::from_genes(const Eigen::VectorXd& genes) {
  if (genes.size() < 3) throw ValidationError("annuli genes need a center and at least one radius");
  AnnuliGeometry a;
  a.cx = genes(0);
  a.cy = genes(1);
  a.radii.assign(genes.data() + 2, genes.data() + genes.size());
  return a;
}

namespace {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename Fn>
void for_each_ring(const AnnuliGeometry& g, Index rows, Index cols, double aspect, Fn&& fn) {
  const double px = 0.5 * double(cols - 1) + g.cx;
  const double py = 0.5 * double(rows - 1) + g.cy;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double d = std::hypot(double(c) - px, (double(r) - py) * aspect);
      int id = 0;
      while (id < static_cast<int>(g.radii.size()) && g.radii[static_cast<std::size_t>(id)] < d) ++id;
      fn(r * cols + c, id);
    }
  }
}

}  // namespace

ClusterMap rasterize_annuli(const AnnuliGeometry& geometry, Index rows, Index cols, double aspect) {
  ClusterMap map;
  map.assignment.resize(rows, cols);
  map.n_clusters = static_cast<int>(geometry.radii.size()) + 1;
  for_each_ring(geometry, rows, cols, aspect,
                [&](Index p, int id) { map.assignment.data()[p] = id; });
  return map;
}

void validate(const DEConfig& config) {
  if (config.population_size < 4)
    throw ValidationError("differential evolution needs a population of at least 4");
  if (config.generations < 0) throw ValidationError("generation count must be non-negative");
  if (!(config.mutation_factor > 0)) throw ValidationError("mutation factor must be positive");
  if (!(config.crossover_prob >= 0 && config.crossover_prob <= 1))
    throw ValidationError("crossover probability must lie in [0, 1]");
  if (config.n_radii < 1) throw ValidationError("at least one radius is required");
  if (!(config.aspect > 0)) throw ValidationError("aspect must be positive");
  if (!config.bounds.empty()) {
    if (config.bounds.size() != static_cast<std::size_t>(2 + config.n_radii))
      throw ValidationError("bounds must list (low, high) for cx, cy and every radius");
    for (const auto& [lo, hi] : config.bounds) {
      if (!(lo < hi)) throw ValidationError("every bound must satisfy low < high");
    }
  }
}

std::vector<std::pair<double, double>> default_annuli_bounds(Index rows, Index cols, int n_radii) {
  const double shift = std::floor(double(rows) / 16.0);
  const double size = double(std::min(rows, cols));
  std::vector<std::pair<double, double>> b;
  b.emplace_back(-shift, shift);
  b.emplace_back(-shift, shift);
  for (int j = 0; j < n_radii; ++j)
    b.emplace_back(0.0, (j + 1 == n_radii ? 0.94 : 0.47) * size);
  return b;
}

double internal_distance(std::span<const Index> pixels, const Eigen::MatrixXd& features) {
  double total = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (std::size_t j = i + 1; j < pixels.size(); ++j)
      total += (features.row(pixels[i]) - features.row(pixels[j])).norm();
  }
  return 2.0 * total;
}

AnnuliFitness::AnnuliFitness(const QuantileFeatureGrid& features, double aspect,
                             bool squared_distance)
    : rows_(features.rows), cols_(features.cols), aspect_(aspect), squared_(squared_distance),
      features_(features.features), features_t_(features.features.transpose()) {
  if (features_.rows() != rows_ * cols_) throw ValidationError("feature grid is inconsistent");
  if (!features_.allFinite()) throw ValidationError("feature vectors must be finite");
  if (squared_) return;

  // Deduplicate exact feature vectors; worthwhile when few distinct values exist.
  const Index n = features_.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index j = 0; j < features_.cols(); ++j) {
      if (features_(a, j) != features_(b, j)) return features_(a, j) < features_(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::vector<Index> representative;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || less(order[i - 1], order[i])) representative.push_back(order[i]);
    ids[static_cast<std::size_t>(order[i])] = static_cast<Index>(representative.size()) - 1;
  }
  const auto u = static_cast<Index>(representative.size());
  if (u * u * 16 > n * n || u > 2048) return;
  distinct_id_ = std::move(ids);
  distinct_distance_.resize(u, u);
  for (Index a = 0; a < u; ++a) {
    for (Index b = 0; b < u; ++b)
      distinct_distance_(a, b) = (features_.row(representative[static_cast<std::size_t>(a)]) -
                                  features_.row(representative[static_cast<std::size_t>(b)])).norm();
  }
}

double AnnuliFitness::cluster_term(std::span<const Index> members) const {
  const auto size = static_cast<Index>(members.size());
  if (size < 2) return 0.0;
  const Index dims = features_t_.rows();

  if (squared_) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dims);
    for (Index p : members) mean += features_t_.col(p);
    mean /= double(size);
    double ss = 0.0;
    for (Index p : members) ss += (features_t_.col(p) - mean).squaredNorm();
    return 2.0 * double(size) * ss;
  }

  if (distinct_distance_.size() > 0) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(distinct_distance_.rows());
    for (Index p : members) counts(distinct_id_[static_cast<std::size_t>(p)]) += 1.0;
    return counts.dot(distinct_distance_ * counts);
  }

  std::uint64_t key = static_cast<std::uint64_t>(size);
  for (Index p : members) key = mix64(key ^ static_cast<std::uint64_t>(p));
  {
    const std::lock_guard lock(cache_mutex_);
    if (const auto it = term_cache_.find(key); it != term_cache_.end()) return it->second;
  }
  const double value = pairwise_term(members);
  const std::lock_guard lock(cache_mutex_);
  if (term_cache_.size() >= 1u << 16) term_cache_.clear();
  term_cache_.emplace(key, value);
  return value;
}

double AnnuliFitness::pairwise_term(std::span<const Index> members) const {
  const auto size = static_cast<Index>(members.size());
  const Index dims = features_t_.rows();
  // Gather into dims x size so the inner loop streams contiguous memory.
  Eigen::MatrixXd x(dims, size);
  for (Index i = 0; i < size; ++i) x.col(i) = features_t_.col(members[static_cast<std::size_t>(i)]);
  double total = 0.0;
  Eigen::ArrayXd d2(size);
  for (Index i = 0; i + 1 < size; ++i) {
    const Index rest = size - i - 1;
    auto acc = d2.head(rest);
    acc.setZero();
    for (Index k = 0; k < dims; ++k) {
      const auto diff = x.row(k).segment(i + 1, rest).array() - x(k, i);
      acc += diff.square();
    }
    total += acc.sqrt().sum();
  }
  return 2.0 * total;
}

double AnnuliFitness::operator()(const AnnuliGeometry& candidate) const {
  std::vector<std::vector<Index>> members(candidate.radii.size() + 1);
  for_each_ring(candidate, rows_, cols_, aspect_,
                [&](Index p, int id) { members[static_cast<std::size_t>(id)].push_back(p); });
  double total = 0.0;
  for (const auto& m : members) total += cluster_term(m);
  return total;
}

double fitness(const AnnuliGeometry& candidate, const QuantileFeatureGrid& features, double aspect) {
  return AnnuliFitness(features, aspect)(candidate);
}

Eigen::VectorXd de_mutate(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, double mutation_factor) {
  return a + mutation_factor * (b - c);
}

namespace {

// Clip to bounds, then sort the radii. Sorting keeps every radius within bounds when
// the radius bounds share a lower limit and have ascending upper limits.
void canonicalize(Eigen::VectorXd& genes, const std::vector<std::pair<double, double>>& bounds) {
  for (Index j = 0; j < genes.size(); ++j) {
    const auto& [lo, hi] = bounds[static_cast<std::size_t>(j)];
    genes(j) = std::clamp(genes(j), lo, hi);
  }
  std::sort(genes.data() + 2, genes.data() + genes.size());
  for (Index j = 2; j < genes.size(); ++j) {
    const auto& [lo, hi] = bounds[static_cast<std::size_t>(j)];
    genes(j) = std::clamp(genes(j), lo, hi);
  }
}

std::mt19937_64 candidate_rng(std::uint64_t seed, int generation, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

}  // namespace

EvolutionResult evolve(const QuantileFeatureGrid& features, const DEConfig& config,
                       const GenerationObserver& observer) {
  validate(config);
  const auto bounds = config.bounds.empty()
                          ? default_annuli_bounds(features.rows, features.cols, config.n_radii)
                          : config.bounds;
  const auto genes = static_cast<Index>(bounds.size());
  const int pop = config.population_size;
  const AnnuliFitness fit(features, config.aspect, config.squared_distance);

  std::vector<Eigen::VectorXd> population(static_cast<std::size_t>(pop));
  std::vector<double> scores(static_cast<std::size_t>(pop));
  parallel_for(0, pop, [&](std::ptrdiff_t i) {
    auto rng = candidate_rng(config.seed, 0, static_cast<int>(i));
    Eigen::VectorXd x(genes);
    for (Index j = 0; j < genes; ++j) {
      std::uniform_real_distribution<double> u(bounds[static_cast<std::size_t>(j)].first,
                                               bounds[static_cast<std::size_t>(j)].second);
      x(j) = u(rng);
    }
    canonicalize(x, bounds);
    scores[static_cast<std::size_t>(i)] = fit(AnnuliGeometry::from_genes(x));
    population[static_cast<std::size_t>(i)] = std::move(x);
  });

  EvolutionResult result;
  result.best_fitness_history.push_back(*std::min_element(scores.begin(), scores.end()));
  if (observer) observer(0, population, scores);

  std::vector<Eigen::VectorXd> trials(static_cast<std::size_t>(pop));
  std::vector<double> trial_scores(static_cast<std::size_t>(pop));
  for (int t = 1; t <= config.generations; ++t) {
    parallel_for(0, pop, [&](std::ptrdiff_t ii) {
      const int i = static_cast<int>(ii);
      auto rng = candidate_rng(config.seed, t, i);
      // Three distinct donors, all different from the target.
      std::uniform_int_distribution<int> pick(0, pop - 2);
      int donors[3];
      for (int d = 0; d < 3; ++d) {
        int k;
        do {
          k = pick(rng);
          if (k >= i) ++k;
        } while (std::find(donors, donors + d, k) != donors + d);
        donors[d] = k;
      }
      const auto mutant = de_mutate(population[static_cast<std::size_t>(donors[0])],
                                    population[static_cast<std::size_t>(donors[1])],
                                    population[static_cast<std::size_t>(donors[2])],
                                    config.mutation_factor);
      Eigen::VectorXd trial = population[static_cast<std::size_t>(i)];
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Index j = 0; j < genes; ++j) {
        if (u(rng) > config.crossover_prob) trial(j) = mutant(j);
      }
      canonicalize(trial, bounds);
      trial_scores[static_cast<std::size_t>(i)] = fit(AnnuliGeometry::from_genes(trial));
      trials[static_cast<std::size_t>(i)] = std::move(trial);
    });
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (trial_scores[i] < scores[i]) {
        population[i] = trials[i];
        scores[i] = trial_scores[i];
      }
    }
    result.best_fitness_history.push_back(*std::min_element(scores.begin(), scores.end()));
    if (observer) observer(t, population, scores);
  }

  const auto best = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
  result.best = AnnuliGeometry::from_genes(population[best]);
  result.best_fitness = scores[best];
  return result;
}

}  // namespace kandinsky
