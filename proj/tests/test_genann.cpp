#include "kandinsky/error.hpp"
#include "kandinsky/genann.hpp"
#include "kandinsky/synth.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <algorithm>
#include <numeric>

using namespace kandinsky;

namespace {

QuantileFeatureGrid random_features(std::mt19937_64& rng, Index rows, Index cols, Index dims) {
  QuantileFeatureGrid g;
  g.rows = rows;
  g.cols = cols;
  g.quantiles.assign(static_cast<std::size_t>(dims), 0.5);
  g.features.resize(rows * cols, dims);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < g.features.size(); ++i) g.features.data()[i] = u(rng);
  return g;
}

// Sum of brute-force internal distances over the rasterized clusters.
double brute_fitness(const AnnuliGeometry& g, const QuantileFeatureGrid& f, double aspect = 1.0) {
  const auto map = rasterize_annuli(g, f.rows, f.cols, aspect);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(map.n_clusters));
  for (Index p = 0; p < map.assignment.size(); ++p)
    members[static_cast<std::size_t>(map.assignment.data()[p])].push_back(p);
  double total = 0.0;
  for (const auto& m : members) total += internal_distance(m, f.features);
  return total;
}

SynthSpec ring_spec(Index size, std::vector<double> radii, double cx, double cy) {
  SynthSpec s;
  s.rows = s.cols = size;
  s.center_col = cx;
  s.center_row = cy;
  s.ring_radii = std::move(radii);
  const std::size_t n = s.ring_radii.size() + 1;
  const double p[] = {0.05, 0.3, 0.45, 0.85, 0.6};
  s.prevalence.assign(p, p + n);
  s.bias.assign(n, 0.0);
  s.temperature.assign(n, 1.0);
  return s;
}

}  // namespace

TEST_CASE("internal distance examples") {
  Eigen::MatrixXd f(2, 2);
  f << 0.2, 0.4, 0.4, 0.6;
  const Index both[] = {0, 1};
  CHECK(internal_distance(both, f) == doctest::Approx(2 * std::sqrt(0.08)).epsilon(1e-14));
  CHECK(internal_distance(both, f) == doctest::Approx(0.565685).epsilon(1e-6));
  const Index one[] = {1};
  CHECK(internal_distance(one, f) == 0.0);
  CHECK(internal_distance({}, f) == 0.0);
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 0.7);
  const Index all[] = {0, 1, 2, 3, 4};
  CHECK(internal_distance(all, same) == 0.0);
}

TEST_CASE("rasterization follows the disk/annulus/exterior rule") {
  const AnnuliGeometry g{0, 0, {1.0, 2.0}};
  const auto m = rasterize_annuli(g, 5, 5);  // midpoint (2, 2)
  CHECK(m.n_clusters == 3);
  CHECK(m.assignment(2, 2) == 0);
  CHECK(m.assignment(2, 3) == 0);  // r = 1 is inside the disk
  CHECK(m.assignment(3, 3) == 1);  // r = sqrt 2
  CHECK(m.assignment(2, 4) == 1);  // r = 2 is inside the annulus
  CHECK(m.assignment(0, 0) == 2);

  const auto shifted = rasterize_annuli({1, -1, {0.5}}, 5, 5);
  CHECK(shifted.assignment(1, 3) == 0);
  CHECK(shifted.assignment(2, 2) == 1);

  // Off-grid inner disk: the id is kept but unused.
  const auto off = rasterize_annuli({0.5, 0.5, {0.1, 10}}, 5, 5);
  CHECK(off.n_clusters == 3);
  CHECK((off.assignment != 0).all());
}

TEST_CASE("aspect scales row distances") {
  const auto m = rasterize_annuli({0, 0, {2.0}}, 9, 9, 2.0);
  CHECK(m.assignment(4, 6) == 0);  // two columns away
  CHECK(m.assignment(6, 4) == 1);  // two rows away counts as four
}

TEST_CASE("genes round trip") {
  const AnnuliGeometry g{1.5, -2, {3, 4, 9}};
  const auto back = AnnuliGeometry::from_genes(g.to_genes());
  CHECK(back.cx == 1.5);
  CHECK(back.cy == -2);
  CHECK(back.radii == g.radii);
}

TEST_CASE("fitness of a single cluster is the internal distance of every pixel") {
  std::mt19937_64 rng(40);
  const auto f = random_features(rng, 6, 7, 3);
  std::vector<Index> all(42);
  std::iota(all.begin(), all.end(), Index{0});
  const double expected = internal_distance(all, f.features);
  CHECK(fitness({0, 0, {100.0}}, f) == doctest::Approx(expected).epsilon(1e-12));
  std::shuffle(all.begin(), all.end(), rng);
  CHECK(internal_distance(all, f.features) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("blockwise and deduplicated fitness agree with brute force") {
  std::mt19937_64 rng(41);
  const auto noisy = random_features(rng, 20, 18, 4);
  const auto clean = ring_feature_field(ring_spec(20, {3, 6, 9}, 0.5, -0.5));
  const AnnuliFitness fn(noisy), fc(clean);
  std::uniform_real_distribution<double> c(-2, 2), r(0, 12);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> radii{r(rng), r(rng), r(rng)};
    std::sort(radii.begin(), radii.end());
    const AnnuliGeometry g{c(rng), c(rng), radii};
    CHECK(fn(g) == doctest::Approx(brute_fitness(g, noisy)).epsilon(1e-10));
    CHECK(fc(g) == doctest::Approx(brute_fitness(g, clean)).epsilon(1e-10));
    CHECK(fn(g) == fn(g));  // cached and fresh evaluations agree
  }
}

TEST_CASE("squared variant matches its closed form") {
  std::mt19937_64 rng(42);
  const auto f = random_features(rng, 10, 10, 4);
  const AnnuliFitness sq(f, 1.0, true);
  const AnnuliGeometry g{0.3, 0.1, {2.5, 4.0}};
  const auto map = rasterize_annuli(g, 10, 10);
  double brute = 0.0;
  for (Index p = 0; p < 100; ++p)
    for (Index q = 0; q < 100; ++q)
      if (map.assignment.data()[p] == map.assignment.data()[q])
        brute += (f.features.row(p) - f.features.row(q)).squaredNorm();
  CHECK(sq(g) == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("the true geometry beats every geometry shifted by 3 or more pixels") {
  const auto spec = ring_spec(32, {5, 10}, 0, 0);
  const auto f = ring_feature_field(spec);
  const AnnuliFitness fit(f);
  const double truth = fit({0, 0, {5, 10}});
  for (double dx = -6; dx <= 6; dx += 1)
    for (double dy = -6; dy <= 6; dy += 1)
      for (double d0 : {-3.0, 0.0, 3.0})
        for (double d1 : {-3.0, 0.0, 3.0}) {
          const double shift = std::max({std::abs(dx), std::abs(dy), std::abs(d0), std::abs(d1)});
          if (shift < 3) continue;
          CHECK(fit({dx, dy, {5 + d0, 10 + d1}}) > truth);
        }
}

TEST_CASE("rand/1 mutation") {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 1, 1;
  b << 2, 2;
  c << 0, 0;
  const auto m = de_mutate(a, b, c, 0.8);
  CHECK(m(0) == doctest::Approx(2.6));
  CHECK(m(1) == doctest::Approx(2.6));
  CHECK(de_mutate(a, b, b, 0.8) == a);
}

TEST_CASE("config validation and default bounds") {
  DEConfig c;
  c.population_size = 3;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.population_size = 4;
  CHECK_NOTHROW(validate(c));
  c.crossover_prob = 1.5;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.crossover_prob = 0.7;
  c.mutation_factor = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.mutation_factor = 0.8;
  c.bounds = {{-1, 1}, {-1, 1}, {0, 5}};
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.bounds = {{-1, 1}, {1, 1}, {0, 5}, {0, 5}, {0, 9}};
  CHECK_THROWS_AS(validate(c), ValidationError);

  const auto b = default_annuli_bounds(240, 320, 3);
  REQUIRE(b.size() == 5);
  CHECK(b[0] == std::pair<double, double>{-15, 15});
  CHECK(b[2].second == doctest::Approx(0.47 * 240));
  CHECK(b[4].second == doctest::Approx(0.94 * 240));
}

TEST_CASE("evolution: monotone best fitness, bounds, sorted radii, determinism") {
  std::mt19937_64 rng(43);
  const auto f = random_features(rng, 16, 16, 4);
  DEConfig c;
  c.population_size = 8;
  c.generations = 15;
  c.n_radii = 2;
  c.seed = 5;
  const auto bounds = default_annuli_bounds(16, 16, 2);
  int calls = 0;
  const auto r = evolve(f, c, [&](int gen, std::span<const Eigen::VectorXd> pop, std::span<const double> fit) {
    CHECK(gen == calls++);
    CHECK(pop.size() == 8);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      for (Index j = 0; j < pop[i].size(); ++j) {
        CHECK(pop[i](j) >= bounds[static_cast<std::size_t>(j)].first);
        CHECK(pop[i](j) <= bounds[static_cast<std::size_t>(j)].second);
      }
      CHECK(std::is_sorted(pop[i].data() + 2, pop[i].data() + pop[i].size()));
      CHECK(fit[i] == doctest::Approx(fitness(AnnuliGeometry::from_genes(pop[i]), f)));
    }
  });
  CHECK(calls == 16);
  REQUIRE(r.best_fitness_history.size() == 16);
  for (std::size_t t = 1; t < r.best_fitness_history.size(); ++t)
    CHECK(r.best_fitness_history[t] <= r.best_fitness_history[t - 1]);
  CHECK(r.best_fitness == r.best_fitness_history.back());
  CHECK(r.best_fitness == doctest::Approx(fitness(r.best, f)));

  const auto again = evolve(f, c);
  CHECK(again.best.to_genes() == r.best.to_genes());
  CHECK(again.best_fitness_history == r.best_fitness_history);
}
