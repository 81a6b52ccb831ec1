#pragma once

// Synthetic score/label stacks with concentric ring structure.

#include "kandinsky/grid.hpp"
#include "kandinsky/kmeans.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kandinsky {

/// Ring j is distance <= ring_radii[j] (after ring j - 1); the last region is everything
/// beyond the outermost radius, so the per-region vectors have ring_radii.size() + 1 entries.
struct SynthSpec {
  Index rows = 64;
  Index cols = 64;
  double center_col = 0.0;  // offset from the image midpoint, pixels
  double center_row = 0.0;
  std::vector<double> ring_radii;
  std::vector<double> prevalence = {0.5};
  std::vector<double> bias = {0.0};         // logistic shift b
  std::vector<double> temperature = {1.0};  // logistic temperature t
  /// Prevalence varies around each ring as p + angular_variation * cos(theta).
  double angular_variation = 0.0;
  double score_noise = 0.05;
  Index n_images = 100;
  std::uint64_t seed = 0;

  std::size_t regions() const { return ring_radii.size() + 1; }
};

void validate(const SynthSpec& spec);

SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec read_synth_spec(const std::filesystem::path& path);
std::string to_json(const SynthSpec& spec);

/// 1 / (1 + exp(-(logit(p) - b) / t)); maps 0 and 1 to themselves.
double logistic_distortion(double p, double bias, double temperature);

/// True foreground probability of pixel (r, c).
double true_probability(const SynthSpec& spec, Index row, Index col);

struct SynthData {
  ScoreGrid scores;
  LabelGrid labels;
};

/// Labels ~ Bernoulli(p) and scores = distortion(p) + N(0, score_noise) clipped to [0, 1],
/// independently per pixel and image. Each image draws from its own seeded stream.
SynthData generate(const SynthSpec& spec);

/// Region id of every pixel; ids beyond the grid are kept.
ClusterMap oracle_cluster_map(const SynthSpec& spec);

/// Population quantiles of the noise-free non-conformity score at every pixel
/// (a two-point distribution at f and 1 - f).
QuantileFeatureGrid ring_feature_field(const SynthSpec& spec,
                                       const std::vector<double>& quantiles = kDefaultQuantiles);

}  // namespace kandinsky
