// Acceptance checks: one PASS/FAIL line per criterion. Optional arguments select criteria.

#include "kandinsky/conformal.hpp"
#include "kandinsky/fcc.hpp"
#include "kandinsky/genann.hpp"
#include "kandinsky/grid_io.hpp"
#include "kandinsky/metrics.hpp"
#include "kandinsky/model_io.hpp"
#include "kandinsky/pipeline.hpp"
#include "kandinsky/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace kandinsky;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScoreGrid random_scores(std::mt19937_64& rng, Index n, Index h, Index w) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ScoreGrid g(n, h, w);
  for (auto& v : g.values()) v = rng() % 16 == 0 ? float(rng() % 21) / 20.0f : u(rng);
  return g;
}

LabelGrid random_labels(std::mt19937_64& rng, Index n, Index h, Index w) {
  LabelGrid g(n, h, w);
  for (auto& v : g.values()) v = rng() % 2;
  return g;
}

template <typename A, typename B>
bool same_bits(const A& a, const B& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(*a.data())) == 0;
}

// 1. Conformal quantile against sort-and-index with the rank in integer percent.
Outcome quantile_exactness() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  long checked = 0, wrong = 0;
  for (std::size_t n = 1; n <= 50; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<float> s(n);
      for (auto& v : s) v = rep == 3 ? float(rng() % 5) / 4.0f : u(rng);
      const NonconformityCurve curve(s);
      std::vector<float> sorted = s;
      std::sort(sorted.begin(), sorted.end());
      for (int a = 1; a <= 99; ++a) {
        const std::size_t k = ((n + 1) * std::size_t(100 - a) + 99) / 100;
        const float expected = k > n ? 1.0f : sorted[k - 1];
        wrong += conformal_quantile(curve, a / 100.0) != expected;
        ++checked;
      }
    }
  }
  return {wrong == 0, fmt("%ld/%ld quantiles exact", checked - wrong, checked)};
}

// 2. Binned ECE against an explicit interval partition.
double oracle_ece(const std::vector<double>& s, const std::vector<std::uint8_t>& y, int bins) {
  double weighted = 0.0;
  for (int m = 0; m < bins; ++m) {
    const double lo = double(m) / bins, hi = double(m + 1) / bins;
    double conf = 0.0, acc = 0.0;
    Index count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!((s[i] >= lo && s[i] < hi) || (m == bins - 1 && s[i] == 1.0))) continue;
      conf += s[i];
      acc += y[i];
      ++count;
    }
    if (count > 0) weighted += double(count) * std::abs(conf / double(count) - acc / double(count));
  }
  return weighted / double(s.size());
}

Outcome ece_oracle() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int wrong = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto kind = rng() % 8;
      s[i] = kind == 0 ? double(rng() % 21) / 20 : kind == 1 ? double(rng() % 11) / 10 : u(rng);
      y[i] = rng() % 2;
    }
    for (int bins : {1, 10, 20}) wrong += binned_ece<double>(s, y, bins) != oracle_ece(s, y, bins);
  }
  return {wrong == 0, fmt("%d/3000 ECE values exact", 3000 - wrong)};
}

// 3. Always-cover and never-cover coverage errors.
Outcome ce_closed_forms() {
  std::mt19937_64 rng(3);
  const auto s = random_scores(rng, 30, 4, 5);
  const auto l = random_labels(rng, 30, 4, 5);
  CalibrationModel always;
  always.curves.emplace_back(std::vector<float>{1.0f});
  always.assignment.n_clusters = 1;
  always.assignment.assignment.setZero(4, 5);
  const auto g = ce_grid(always, s, l, 20);
  const std::vector<float> never(20, -1.0f);
  double worst_always = (g.values - 0.475).abs().maxCoeff(), worst_never = 0.0;
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 5; ++c)
      worst_never = std::max(worst_never,
                             std::abs(coverage_error(coverage_curve_from_thresholds(never, s, l, {r, c})) - 0.525));
  return {worst_always <= 1e-12 && worst_never <= 1e-12,
          fmt("always-cover max |CE-0.475| = %.1e, never-cover max |CE-0.525| = %.1e", worst_always,
              worst_never)};
}

// 4. Pooled coverage of imagewise calibration.
Outcome marginal_coverage() {
  const double alphas[] = {0.05, 0.1, 0.2};
  int good_seeds = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec s;
    s.rows = s.cols = 16;
    s.ring_radii = {5};
    s.prevalence = {0.3, 0.7};
    s.bias = {0.8, -0.5};
    s.temperature = {1.5, 0.7};
    s.n_images = 200;
    s.seed = 1000 + 2 * seed;
    const auto cal = generate(s);
    s.n_images = 2000;
    s.seed = 1001 + 2 * seed;
    const auto test = generate(s);
    const auto model = calibrate_imagewise(cal.scores, cal.labels);
    bool ok = true;
    for (double a : alphas) {
      const float q = conformal_quantile(model.curves[0], a);
      std::size_t covered = 0;
      const auto sv = test.scores.values();
      const auto lv = test.labels.values();
      for (std::size_t i = 0; i < sv.size(); ++i) covered += prediction_set(sv[i], q).contains(lv[i]);
      const double cov = double(covered) / double(sv.size());
      worst = std::min(worst, cov - (1 - a));
      ok = ok && cov >= (1 - a) - 0.02;
    }
    good_seeds += ok;
  }
  return {good_seeds >= 19, fmt("%d/20 seeds covered; worst coverage minus target %.4f", good_seeds, worst)};
}

FourierFiltration random_valid_filtration(std::mt19937_64& rng, Index rows, Index cols, int m,
                                          int order, double r_max) {
  std::normal_distribution<double> n(0.0, 0.2);
  for (;;) {
    Eigen::VectorXd p(FourierFiltration::parameter_count(m, order));
    Index i = 0;
    for (int l = 0; l < m; ++l) {
      p(i++) = std::sqrt(r_max * (l + 1) / (m + 1));
      for (int k = 1; k < order; ++k) {
        p(i++) = n(rng) / k;
        p(i++) = n(rng) / k;
      }
    }
    const auto f = FourierFiltration::from_parameters(p, m, order, rows, cols);
    const auto terms = penalty_terms(f, r_max, 256);
    if (std::all_of(terms.begin(), terms.end(), [](double t) { return std::isfinite(t); })) return f;
  }
}

// 5. Closed-form areas, odd symmetry and the area partition.
Outcome fcc_quadrature() {
  const auto circles = FourierFiltration::circles(128, 128, 6, {20.0, 45.0});
  const auto one = [](double, double) { return 1.0; };
  const double disk = integrate_domain(circles, 0, one, 64, 32);
  const double ring = integrate_domain(circles, 1, one, 64, 32);
  const double disk_err = std::abs(disk - pi * 400) / (pi * 400);
  const double ring_err = std::abs(ring - pi * (2025 - 400)) / (pi * 1625);
  const double p1 = circles.midpoint(0);
  const double odd = std::abs(integrate_domain(circles, 0, [&](double x, double) { return x - p1; }, 64, 32));

  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index rows = 40 + Index(rng() % 60), cols = 40 + Index(rng() % 60);
    const double r_max = 0.45 * double(std::min(rows, cols));
    const auto f = random_valid_filtration(rng, rows, cols, 1 + int(rng() % 4), 2 + int(rng() % 6), r_max);
    const double rect = f.rectangle_area();
    double spectral = 0, quadrature = 0;
    for (int l = 0; l <= f.levels(); ++l) {
      const double area = domain_area(f, l), quad = integrate_domain(f, l, one, 64, 32);
      spectral += area;
      quadrature += quad;
      worst = std::max(worst, std::abs(area - quad) / rect);
    }
    worst = std::max({worst, std::abs(spectral - rect) / rect, std::abs(quadrature - rect) / rect});
  }
  return {disk_err < 1e-10 && ring_err < 1e-10 && odd < 1e-8 && worst < 1e-8,
          fmt("circle %.1e, annulus %.1e relative; odd %.1e; partition worst %.1e", disk_err, ring_err,
              odd, worst)};
}

// 6. Descent on random fields and recovery of a two-step radial field.
Outcome fcc_optimization() {
  std::mt19937_64 rng(6);
  int descents = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 32;
    std::uniform_real_distribution<double> u(-1, 1);
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    Eigen::MatrixXd v(n * n, 2);
    for (Index r = 0; r < n; ++r)
      for (Index col = 0; col < n; ++col) {
        v(r * n + col, 0) = std::sin(a + 0.2 * double(col) * b) + 0.1 * u(rng);
        v(r * n + col, 1) = std::cos(c + 0.15 * double(r) * d) + 0.1 * u(rng);
      }
    FCCConfig cfg;
    cfg.m = 2;
    cfg.order = 4;
    cfg.max_iterations = 20;
    cfg.seed = std::uint64_t(trial);
    const auto res = fcc_optimize(FieldJ(n, n, v), n, n, cfg);
    bool ok = res.objective <= res.initial_objective;
    for (std::size_t i = 1; i < res.history.size(); ++i) ok = ok && res.history[i] <= res.history[i - 1];
    descents += ok;
  }

  const Index size = 128;
  PixelArray step(size, size);
  const double mid = 0.5 * double(size - 1);
  for (Index r = 0; r < size; ++r)
    for (Index c = 0; c < size; ++c) {
      const double rho = std::hypot(double(r) - mid, double(c) - mid);
      step(r, c) = rho <= 30 ? 0.0 : rho <= 60 ? 1.0 : 2.0;
    }
  const FieldJ field(step);
  int recovered = 0;
  std::string radii;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FCCConfig cfg;
    cfg.m = 3;
    cfg.r_max = 63;
    cfg.seed = seed;
    const auto res = fcc_optimize(field, size, size, cfg);
    std::vector<double> means;
    for (int l = 0; l < 3; ++l) means.push_back(res.filtration.mean_radius(l));
    auto nearest = [&](double target) {
      double best = 1e9;
      for (double m : means) best = std::min(best, std::abs(m - target));
      return best;
    };
    recovered += nearest(30) <= 2 && nearest(60) <= 2;
    radii += fmt(" [%.1f %.1f %.1f]", means[0], means[1], means[2]);
  }
  return {descents == 10 && recovered >= 4,
          fmt("descent %d/10; step radii recovered %d/5;%s", descents, recovered, radii.c_str())};
}

// 7. GenAnn on noise-free ring features.
Outcome genann_recovery() {
  SynthSpec s;
  s.rows = s.cols = 96;
  s.center_col = 2;
  s.center_row = -3;
  s.ring_radii = {20, 40};
  s.prevalence = {0.05, 0.4, 0.8};
  s.bias = {0, 0, 0};
  s.temperature = {1, 1, 1};
  const auto features = ring_feature_field(s);
  int recovered = 0;
  bool monotone = true;
  std::string found;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DEConfig cfg;
    cfg.n_radii = 2;
    cfg.population_size = 20;
    cfg.generations = 150;
    cfg.seed = seed;
    double best_so_far = std::numeric_limits<double>::infinity();
    const auto res = evolve(features, cfg, [&](int, std::span<const Eigen::VectorXd>, std::span<const double> fit) {
      const double best = *std::min_element(fit.begin(), fit.end());
      monotone = monotone && best <= best_so_far;
      best_so_far = best;
    });
    for (std::size_t t = 1; t < res.best_fitness_history.size(); ++t)
      monotone = monotone && res.best_fitness_history[t] <= res.best_fitness_history[t - 1];
    const auto& g = res.best;
    recovered += std::abs(g.cx - 2) <= 2 && std::abs(g.cy + 3) <= 2 && std::abs(g.radii[0] - 20) <= 2 &&
                 std::abs(g.radii[1] - 40) <= 2;
    found += fmt(" (%.1f,%.1f;%.1f,%.1f)", g.cx, g.cy, g.radii[0], g.radii[1]);
  }
  return {recovered >= 4 && monotone,
          fmt("%d/5 recovered; monotone %s;%s", recovered, monotone ? "yes" : "no", found.c_str())};
}

// 8. Low-data and high-data comparison of the five strategies.
SynthSpec comparison_spec() {
  SynthSpec s;
  s.rows = s.cols = 64;
  s.ring_radii = {8, 16, 24};
  s.prevalence = {0.3, 0.02, 0.35, 0.6};
  s.bias = {-1.253, -3.045, -2.816, 1.504};
  s.temperature = {1, 1, 1, 1};
  s.angular_variation = 0.002;
  return s;
}

std::vector<double> strategy_means(Index n_cal, std::uint64_t seed) {
  auto s = comparison_spec();
  s.n_images = n_cal;
  s.seed = 2 * seed + 1;
  auto cal = generate(s);
  s.n_images = 2000;
  s.seed = 2 * seed + 2;
  auto test = generate(s);
  const Dataset dc{std::move(cal.scores), std::move(cal.labels)};
  const Dataset dt{std::move(test.scores), std::move(test.labels)};
  std::vector<double> means;
  for (auto m : {Method::pixelwise, Method::imagewise, Method::kmeans, Method::genann, Method::fcc}) {
    RunConfig c;
    c.method = m;
    set_seed(c, seed);
    c.genann.population_size = 20;
    c.genann.generations = 150;
    c.fcc.m = 4;
    means.push_back(evaluate(calibrate(c, dc).model, dt, 20).ce.mean);
  }
  return means;
}

Outcome strategy_comparison() {
  int low_ok = 0, high_ok = 0;
  std::string low, high;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = strategy_means(100, seed);
    const double baseline = std::min(a[0], a[1]);
    low_ok += a[2] < baseline && a[3] < baseline && a[4] < baseline;
    low += fmt(" [%.4f %.4f %.4f %.4f %.4f]", a[0], a[1], a[2], a[3], a[4]);
    const auto b = strategy_means(5000, seed);
    high_ok += b[0] < *std::min_element(b.begin() + 1, b.end());
    high += fmt(" [%.4f %.4f %.4f %.4f %.4f]", b[0], b[1], b[2], b[3], b[4]);
  }
  return {low_ok >= 4 && high_ok >= 4,
          fmt("low data %d/5, high data %d/5; CE (pixelwise imagewise kmeans genann fcc) n=100:%s n=5000:%s",
              low_ok, high_ok, low.c_str(), high.c_str())};
}

// 9. One cluster is imagewise and singleton clusters are pixelwise, bit for bit.
Outcome reduction_identities() {
  std::mt19937_64 rng(9);
  int exact = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index h = 3 + Index(rng() % 10), w = 3 + Index(rng() % 10);
    const auto cs = random_scores(rng, 20 + Index(rng() % 40), h, w);
    const auto cl = random_labels(rng, cs.images(), h, w);
    const auto ts = random_scores(rng, 50, h, w);
    const auto tl = random_labels(rng, 50, h, w);
    ClusterMap one, singletons;
    one.n_clusters = 1;
    one.assignment.setZero(h, w);
    singletons.n_clusters = int(h * w);
    singletons.assignment.resize(h, w);
    for (Index p = 0; p < h * w; ++p) singletons.assignment.data()[p] = int(p);
    const auto a = ce_grid(calibrate_clustered(cs, cl, one), ts, tl, 20).values;
    const auto b = ce_grid(calibrate_imagewise(cs, cl), ts, tl, 20).values;
    const auto c = ce_grid(calibrate_clustered(cs, cl, singletons), ts, tl, 20).values;
    const auto d = ce_grid(calibrate_pixelwise(cs, cl), ts, tl, 20).values;
    exact += same_bits(a, b) && same_bits(c, d);
  }
  return {exact == 10, fmt("%d/10 datasets bit-exact for both identities", exact)};
}

// 10. Grids and model artifacts survive a write/read cycle.
Outcome round_trip(const fs::path& dir) {
  std::mt19937_64 rng(10);
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    const Index n = 1 + Index(rng() % 6), h = 1 + Index(rng() % 12), w = 1 + Index(rng() % 12);
    const auto s = random_scores(rng, n, h, w);
    const auto l = random_labels(rng, n, h, w);
    write_grid(s, dir / "s.npy");
    write_grid(l, dir / "l.npy");
    const auto s2 = read_score_grid(dir / "s.npy");
    const auto l2 = read_label_grid(dir / "l.npy");
    bool ok = s2.images() == n && s2.rows() == h && s2.cols() == w && same_bits(s.values(), s2.values()) &&
              same_bits(l.values(), l2.values());

    CalibrationModel model;
    switch (i % 3) {
      case 0: model = calibrate_pixelwise(s, l); break;
      case 1: model = calibrate_imagewise(s, l); break;
      default: {
        ClusterMap map;
        map.n_clusters = 1 + int(rng() % std::min<Index>(5, h * w));
        map.assignment.resize(h, w);
        for (Index p = 0; p < h * w; ++p) map.assignment.data()[p] = int(p % map.n_clusters);
        model = calibrate_clustered(s, l, map);
      }
    }
    write_model(model, dir / "model");
    const auto back = read_model(dir / "model");
    ok = ok && back == model;
    for (std::size_t k = 0; ok && k < model.curves.size(); ++k)
      ok = same_bits(model.curves[k].sorted_scores(), back.curves[k].sorted_scores());
    exact += ok;
  }
  return {exact == 100, fmt("%d/100 grid pairs and models bit-exact", exact)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = fs::temp_directory_path() / ("kandinsky_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"quantile exactness", quantile_exactness},
      {"ECE oracle", ece_oracle},
      {"CE closed forms", ce_closed_forms},
      {"marginal coverage", marginal_coverage},
      {"FCC quadrature", fcc_quadrature},
      {"FCC optimization", fcc_optimization},
      {"GenAnn recovery", genann_recovery},
      {"strategy comparison", strategy_comparison},
      {"reduction identities", reduction_identities},
      {"round-trip I/O", [&] { return round_trip(dir); }},
  };
  const double budget[] = {5, 10, 10, 60, 30, 300, 300, 900, 60, 10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec < budget[i];
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %d %s: %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), sec, budget[i]);
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return failures == 0 ? 0 : 1;
}
