#include "kandinsky/synth.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/genann.hpp"
#include "kandinsky/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace kandinsky {
namespace {

using json = nlohmann::json;

std::size_t region_of(const SynthSpec& spec, double distance) {
  std::size_t id = 0;
  while (id < spec.ring_radii.size() && distance > spec.ring_radii[id]) ++id;
  return id;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw ValidationError("grid must be at least 1 x 1");
  if (spec.n_images < 1) throw ValidationError("n_images must be at least 1");
  for (std::size_t i = 0; i < spec.ring_radii.size(); ++i) {
    if (!(spec.ring_radii[i] >= 0)) throw ValidationError("ring radii must be non-negative");
    if (i > 0 && !(spec.ring_radii[i] > spec.ring_radii[i - 1]))
      throw ValidationError("ring radii must be strictly ascending");
  }
  const std::size_t n = spec.regions();
  if (spec.prevalence.size() != n || spec.bias.size() != n || spec.temperature.size() != n)
    throw ValidationError("prevalence, bias and temperature need one entry per region (" +
                          std::to_string(n) + ")");
  if (!(spec.angular_variation >= 0)) throw ValidationError("angular_variation must be >= 0");
  for (std::size_t i = 0; i < n; ++i) {
    const double p = spec.prevalence[i];
    if (!(p - spec.angular_variation >= 0 && p + spec.angular_variation <= 1))
      throw ValidationError("prevalence +- angular_variation must stay in [0, 1]");
    if (!(spec.temperature[i] > 0)) throw ValidationError("temperature must be positive");
    if (!std::isfinite(spec.bias[i])) throw ValidationError("bias must be finite");
  }
  if (!(spec.score_noise >= 0)) throw ValidationError("score_noise must be >= 0");
  if (!std::isfinite(spec.center_col) || !std::isfinite(spec.center_row))
    throw ValidationError("center offsets must be finite");
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  SynthSpec s;
  try {
    s.rows = j.at("rows").get<Index>();
    s.cols = j.at("cols").get<Index>();
    if (j.contains("center")) {
      s.center_col = j["center"].at(0).get<double>();
      s.center_row = j["center"].at(1).get<double>();
    }
    s.ring_radii = j.value("ring_radii", std::vector<double>{});
    s.prevalence = j.at("prevalence").get<std::vector<double>>();
    s.bias = j.value("bias", std::vector<double>(s.prevalence.size(), 0.0));
    s.temperature = j.value("temperature", std::vector<double>(s.prevalence.size(), 1.0));
    s.angular_variation = j.value("angular_variation", 0.0);
    s.score_noise = j.value("score_noise", 0.05);
    s.n_images = j.at("n_images").get<Index>();
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

std::string to_json(const SynthSpec& s) {
  json j = {{"rows", s.rows},
            {"cols", s.cols},
            {"center", {s.center_col, s.center_row}},
            {"ring_radii", s.ring_radii},
            {"prevalence", s.prevalence},
            {"bias", s.bias},
            {"temperature", s.temperature},
            {"angular_variation", s.angular_variation},
            {"score_noise", s.score_noise},
            {"n_images", s.n_images},
            {"seed", s.seed}};
  return j.dump(2);
}

double logistic_distortion(double p, double bias, double temperature) {
  if (p <= 0) return 0.0;
  if (p >= 1) return 1.0;
  const double logit = std::log(p / (1 - p));
  return 1.0 / (1.0 + std::exp(-(logit - bias) / temperature));
}

double true_probability(const SynthSpec& spec, Index row, Index col) {
  const double dx = double(col) - (0.5 * double(spec.cols - 1) + spec.center_col);
  const double dy = double(row) - (0.5 * double(spec.rows - 1) + spec.center_row);
  const double p = spec.prevalence[region_of(spec, std::hypot(dx, dy))];
  if (spec.angular_variation == 0) return p;
  const double r = std::hypot(dx, dy);
  return std::clamp(p + spec.angular_variation * (r > 0 ? dx / r : 0.0), 0.0, 1.0);
}

SynthData generate(const SynthSpec& spec) {
  validate(spec);
  const Index hw = spec.rows * spec.cols;
  std::vector<double> prob(static_cast<std::size_t>(hw));
  std::vector<double> clean(static_cast<std::size_t>(hw));
  for (Index r = 0; r < spec.rows; ++r) {
    for (Index c = 0; c < spec.cols; ++c) {
      const auto i = static_cast<std::size_t>(r * spec.cols + c);
      const double dx = double(c) - (0.5 * double(spec.cols - 1) + spec.center_col);
      const double dy = double(r) - (0.5 * double(spec.rows - 1) + spec.center_row);
      const std::size_t g = region_of(spec, std::hypot(dx, dy));
      prob[i] = true_probability(spec, r, c);
      clean[i] = logistic_distortion(prob[i], spec.bias[g], spec.temperature[g]);
    }
  }
  SynthData out{ScoreGrid(spec.n_images, spec.rows, spec.cols),
                LabelGrid(spec.n_images, spec.rows, spec.cols)};
  auto scores = out.scores.values();
  auto labels = out.labels.values();
  parallel_for(0, spec.n_images, [&](Index n) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Index i = 0; i < hw; ++i) {
      const auto k = static_cast<std::size_t>(n * hw + i);
      const auto p = static_cast<std::size_t>(i);
      labels[k] = unit(rng) < prob[p] ? 1 : 0;
      const double f = clean[p] + spec.score_noise * noise(rng);
      scores[k] = static_cast<float>(std::clamp(f, 0.0, 1.0));
    }
  });
  return out;
}

ClusterMap oracle_cluster_map(const SynthSpec& spec) {
  validate(spec);
  AnnuliGeometry g{spec.center_col, spec.center_row, spec.ring_radii};
  return rasterize_annuli(g, spec.rows, spec.cols);
}

QuantileFeatureGrid ring_feature_field(const SynthSpec& spec, const std::vector<double>& quantiles) {
  validate(spec);
  QuantileFeatureGrid grid;
  grid.quantiles = quantiles;
  grid.rows = spec.rows;
  grid.cols = spec.cols;
  grid.features.resize(spec.rows * spec.cols, static_cast<Index>(quantiles.size()));
  for (Index r = 0; r < spec.rows; ++r) {
    for (Index c = 0; c < spec.cols; ++c) {
      const double dx = double(c) - (0.5 * double(spec.cols - 1) + spec.center_col);
      const double dy = double(r) - (0.5 * double(spec.rows - 1) + spec.center_row);
      const std::size_t g = region_of(spec, std::hypot(dx, dy));
      const double p = true_probability(spec, r, c);
      const double f = logistic_distortion(p, spec.bias[g], spec.temperature[g]);
      // Score 1 - f with probability p, f with probability 1 - p.
      const double lo = std::min(f, 1 - f);
      const double hi = std::max(f, 1 - f);
      const double p_lo = f == 1 - f ? 1.0 : (1 - f < f ? p : 1 - p);
      for (std::size_t j = 0; j < quantiles.size(); ++j)
        grid.features(r * spec.cols + c, static_cast<Index>(j)) = quantiles[j] <= p_lo ? lo : hi;
    }
  }
  return grid;
}

}  // namespace kandinsky
