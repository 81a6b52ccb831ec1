#include "kandinsky/pipeline.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/model_io.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace kandinsky {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_keys(const json& block, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!block.is_object()) throw ValidationError("'" + where + "' must be a JSON object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : block.items()) {
    if (!names.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& block, const char* key, T& target) {
  if (block.contains(key)) target = block.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

json filtration_json(const FourierFiltration& f) {
  json curves = json::array();
  json radii = json::array();
  for (int l = 0; l < f.levels(); ++l) {
    json c = json::array();
    for (Index k = 0; k < f.coeffs[l].size(); ++k) c.push_back({f.coeffs[l](k).real(), f.coeffs[l](k).imag()});
    curves.push_back(c);
    radii.push_back(f.mean_radius(l));
  }
  return {{"m", f.levels()},
          {"order", f.order},
          {"midpoint", {f.midpoint(0), f.midpoint(1)}},
          {"extent", {f.extent(0), f.extent(1)}},
          {"coeffs", curves},
          {"mean_radii", radii}};
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::pixelwise: return "pixelwise";
    case Method::imagewise: return "imagewise";
    case Method::kmeans: return "kmeans";
    case Method::genann: return "genann";
    case Method::fcc: return "fcc";
  }
  return "unknown";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::pixelwise, Method::imagewise, Method::kmeans, Method::genann, Method::fcc}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown strategy '" + std::string(s) +
                        "' (expected pixelwise, imagewise, kmeans, genann or fcc)");
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j, "run config",
               {"name", "calibration", "test", "strategy", "kmeans", "genann", "fcc", "quantiles",
                "levels", "output_dir", "seed"});
    c.method = parse_method(j.at("strategy").get<std::string>());
    c.name = j.value("name", std::string(to_string(c.method)));
    if (j.contains("calibration")) c.calibration_manifest = resolve(base_dir, j["calibration"].get<std::string>());
    if (j.contains("test")) c.test_manifest = resolve(base_dir, j["test"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    read_opt(j, "quantiles", c.quantiles);
    read_opt(j, "levels", c.levels);
    read_opt(j, "seed", c.seed);
    c.kmeans.seed = c.genann.seed = c.fcc.seed = c.seed;

    for (Method m : {Method::kmeans, Method::genann, Method::fcc}) {
      const std::string key(to_string(m));
      if (m == c.method && !j.contains(key))
        throw ValidationError("strategy '" + key + "' needs a '" + key + "' config block");
      if (m != c.method && j.contains(key))
        throw ValidationError("config block '" + key + "' does not match strategy '" +
                              std::string(to_string(c.method)) + "'");
    }
    if (c.method == Method::kmeans) {
      const auto& b = j["kmeans"];
      check_keys(b, "kmeans", {"n_clusters", "max_iterations", "n_init", "seed"});
      read_opt(b, "n_clusters", c.kmeans.n_clusters);
      read_opt(b, "max_iterations", c.kmeans.max_iterations);
      read_opt(b, "n_init", c.kmeans.n_init);
      read_opt(b, "seed", c.kmeans.seed);
    } else if (c.method == Method::genann) {
      const auto& b = j["genann"];
      check_keys(b, "genann", {"population_size", "generations", "mutation_factor", "crossover_prob",
                               "n_radii", "bounds", "aspect", "squared_distance", "seed"});
      read_opt(b, "population_size", c.genann.population_size);
      read_opt(b, "generations", c.genann.generations);
      read_opt(b, "mutation_factor", c.genann.mutation_factor);
      read_opt(b, "crossover_prob", c.genann.crossover_prob);
      read_opt(b, "n_radii", c.genann.n_radii);
      read_opt(b, "bounds", c.genann.bounds);
      read_opt(b, "aspect", c.genann.aspect);
      read_opt(b, "squared_distance", c.genann.squared_distance);
      read_opt(b, "seed", c.genann.seed);
      validate(c.genann);
    } else if (c.method == Method::fcc) {
      const auto& b = j["fcc"];
      check_keys(b, "fcc", {"m", "order", "angular_nodes", "gauss_order", "penalty_nodes", "sigma",
                            "penalty_weight", "r_max", "max_iterations", "gradient_step", "seed"});
      read_opt(b, "m", c.fcc.m);
      read_opt(b, "order", c.fcc.order);
      read_opt(b, "angular_nodes", c.fcc.angular_nodes);
      read_opt(b, "gauss_order", c.fcc.gauss_order);
      read_opt(b, "penalty_nodes", c.fcc.penalty_nodes);
      read_opt(b, "sigma", c.fcc.sigma);
      read_opt(b, "penalty_weight", c.fcc.penalty_weight);
      read_opt(b, "r_max", c.fcc.r_max);
      read_opt(b, "max_iterations", c.fcc.max_iterations);
      read_opt(b, "gradient_step", c.fcc.gradient_step);
      read_opt(b, "seed", c.fcc.seed);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid run config: ") + e.what());
  }
  c.genann.fitness_quantiles = c.quantiles;
  if (c.levels < 1) throw ValidationError("levels must be at least 1");
  if (c.kmeans.n_clusters < 1) throw ValidationError("kmeans n_clusters must be at least 1");
  return c;
}

RunConfig read_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

void set_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = config.kmeans.seed = config.genann.seed = config.fcc.seed = seed;
}

ClusteringRun cluster_pixels(const RunConfig& config, const CalibrationModel& pixelwise) {
  const auto features = extract_features(pixelwise, config.quantiles);
  ClusteringRun run;
  switch (config.method) {
    case Method::kmeans: {
      const auto r = kmeans(features, config.kmeans);
      run.clusters = r.clusters;
      json centroids = json::array();
      for (Index i = 0; i < r.centroids.rows(); ++i) {
        json row = json::array();
        for (Index k = 0; k < r.centroids.cols(); ++k) row.push_back(r.centroids(i, k));
        centroids.push_back(row);
      }
      run.details = json{{"method", "kmeans"}, {"inertia", r.inertia}, {"iterations", r.iterations},
                         {"centroids", centroids}}.dump();
      break;
    }
    case Method::genann: {
      const auto r = evolve(features, config.genann);
      run.clusters = rasterize_annuli(r.best, features.rows, features.cols, config.genann.aspect);
      run.details = json{{"method", "genann"}, {"cx", r.best.cx}, {"cy", r.best.cy},
                         {"radii", r.best.radii}, {"fitness", r.best_fitness}}.dump();
      break;
    }
    case Method::fcc: {
      const FieldJ field(features);
      const auto r = fcc_optimize(field, features.rows, features.cols, config.fcc);
      run.clusters = filtration_to_clusters(r.filtration, features.rows, features.cols);
      json d = filtration_json(r.filtration);
      d["method"] = "fcc";
      d["objective"] = r.objective;
      d["initial_objective"] = r.initial_objective;
      d["iterations"] = r.iterations;
      run.details = d.dump();
      break;
    }
    default:
      throw ValidationError("strategy '" + std::string(to_string(config.method)) +
                            "' does not cluster pixels");
  }
  run.clusters = compact_cluster_ids(run.clusters);
  return run;
}

CalibrationRun calibrate(const RunConfig& config, const Dataset& calibration) {
  validate_pair(calibration.scores, calibration.labels);
  CalibrationRun run;
  switch (config.method) {
    case Method::pixelwise:
      run.model = calibrate_pixelwise(calibration.scores, calibration.labels);
      break;
    case Method::imagewise:
      run.model = calibrate_imagewise(calibration.scores, calibration.labels);
      run.clusters = run.model.assignment;
      break;
    default: {
      const auto pixelwise = calibrate_pixelwise(calibration.scores, calibration.labels);
      auto clustering = cluster_pixels(config, pixelwise);
      run.model = calibrate_clustered(calibration.scores, calibration.labels, clustering.clusters);
      run.clusters = std::move(clustering.clusters);
      run.details = std::move(clustering.details);
    }
  }
  return run;
}

EvaluationReport evaluate(const CalibrationModel& model, const Dataset& test, int levels, CeMode mode) {
  validate_pair(test.scores, test.labels);
  if (test.scores.rows() != model.rows() || test.scores.cols() != model.cols())
    throw ValidationError("test grid is " + std::to_string(test.scores.rows()) + "x" +
                          std::to_string(test.scores.cols()) + " but the model is " +
                          std::to_string(model.rows()) + "x" + std::to_string(model.cols()));
  return {ce_grid(model, test.scores, test.labels, levels, mode),
          reliability_bins(test.scores.values(), test.labels.values(), levels)};
}

void write_report(const EvaluationReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_pixel_array(report.ce.values, dir / "ce_grid.npy");
  write_summary_json(report.ce, dir / "summary.json");
  write_coverage_csv(report.ce, dir / "coverage.csv");
  write_reliability_csv(report.reliability, dir / "reliability.csv");
  write_heatmap(report.ce.values, dir / "ce_grid.ppm", HeatmapMode::sequential);
}

void write_calibration(const CalibrationRun& run, const fs::path& dir) {
  write_model(run.model, dir / "model", run.details);
  if (run.clusters) {
    write_cluster_map(*run.clusters, dir / "cluster_map.npy");
    write_ppm(render_clusters(*run.clusters), dir / "cluster_map.ppm");
  }
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "strategy,mean,q05,q95\n";
  for (const auto& r : rows) out << r.name << ',' << r.mean << ',' << r.q05 << ',' << r.q95 << '\n';
}

}  // namespace kandinsky
