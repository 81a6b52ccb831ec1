// kandinsky: generate synthetic data, calibrate, evaluate and compare strategies.

#include "kandinsky/error.hpp"
#include "kandinsky/grid_io.hpp"
#include "kandinsky/model_io.hpp"
#include "kandinsky/parallel.hpp"
#include "kandinsky/pipeline.hpp"
#include "kandinsky/synth.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace kandinsky;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void prepare_output(const fs::path& dir, bool force) {
  if (dir.empty()) throw ValidationError("an output directory is required (--out)");
  std::error_code ec;
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ValidationError("output directory '" + dir.string() + "' is not empty (use --force)");
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

RunConfig load_config(const fs::path& path, const Common& common) {
  auto config = read_run_config(path);
  if (common.seed) set_seed(config, *common.seed);
  return config;
}

void generate(const fs::path& spec_path, const fs::path& out, const std::string& split,
              const Common& common, bool force) {
  auto spec = read_synth_spec(spec_path);
  if (common.seed) spec.seed = *common.seed;
  const Split s = split == "test" ? Split::test : Split::calibration;
  if (split != "test" && split != "calibration")
    throw ValidationError("--split must be 'calibration' or 'test'");
  prepare_output(out, force);
  const auto data = generate(spec);
  write_grid(data.scores, out / "scores.npy");
  write_grid(data.labels, out / "labels.npy");
  write_cluster_map(oracle_cluster_map(spec), out / "oracle_clusters.npy");
  write_manifest({spec_path.stem().string(), "scores.npy", "labels.npy", s, spec.rows, spec.cols,
                  spec.n_images},
                 out / "manifest.json");
  std::cout << "wrote " << spec.n_images << " images of " << spec.rows << "x" << spec.cols
            << " to " << out.string() << '\n';
}

void calibrate_cmd(const fs::path& config_path, fs::path out, const Common& common) {
  const auto config = load_config(config_path, common);
  if (out.empty()) out = config.output_dir;
  if (out.empty()) throw ValidationError("an output directory is required (--out or output_dir)");
  if (config.calibration_manifest.empty())
    throw ValidationError("run config has no calibration manifest");
  const auto run = calibrate(config, load_dataset(config.calibration_manifest));
  write_calibration(run, out);
  std::cout << config.name << ": " << run.model.curves.size() << " curve(s) written to "
            << (out / "model").string() << '\n';
}

void evaluate_cmd(const fs::path& model_dir, const fs::path& test, int levels, const std::string& mode,
                  const fs::path& subtract, const fs::path& out) {
  if (out.empty()) throw ValidationError("an output directory is required (--out)");
  const auto model = read_model(model_dir);
  const auto report = evaluate(model, load_dataset(test), levels, parse_ce_mode(mode));
  write_report(report, out);
  if (!subtract.empty()) {
    const auto other = read_pixel_array(subtract);
    if (other.rows() != report.ce.values.rows() || other.cols() != report.ce.values.cols())
      throw ValidationError("--subtract grid shape does not match the model grid");
    // Positive (red) where this model has the lower coverage error.
    const PixelArray diff = other - report.ce.values;
    write_pixel_array(diff, out / "ce_difference.npy");
    write_heatmap(diff, out / "ce_difference.ppm", HeatmapMode::diverging);
  }
  std::cout << "mean " << report.ce.mean << " q05 " << report.ce.q05 << " q95 " << report.ce.q95
            << '\n';
}

void compare_cmd(const std::vector<fs::path>& configs, const fs::path& test_override,
                 const std::string& mode, const Common& common, const fs::path& out, bool force) {
  prepare_output(out, force);
  std::vector<ComparisonRow> rows;
  for (const auto& path : configs) {
    try {
      const auto config = load_config(path, common);
      const fs::path test = test_override.empty() ? config.test_manifest : test_override;
      if (test.empty()) throw ValidationError("no test manifest (use --test or 'test')");
      const auto run = calibrate(config, load_dataset(config.calibration_manifest));
      const auto report = evaluate(run.model, load_dataset(test), config.levels, parse_ce_mode(mode));
      write_calibration(run, out / config.name);
      write_report(report, out / config.name);
      rows.push_back({config.name, report.ce.mean, report.ce.q05, report.ce.q95});
      std::cout << config.name << ": mean " << report.ce.mean << '\n';
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  write_comparison_csv(rows, out / "comparison.csv");
}

void cluster_map_cmd(const fs::path& config_path, const fs::path& out, const Common& common, bool force) {
  const auto config = load_config(config_path, common);
  prepare_output(out, force);
  const auto data = load_dataset(config.calibration_manifest);
  const auto clustering = cluster_pixels(config, calibrate_pixelwise(data.scores, data.labels));
  write_cluster_map(clustering.clusters, out / "cluster_map.npy");
  write_ppm(render_clusters(clustering.clusters), out / "cluster_map.ppm");
  std::cout << clustering.details << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kandinsky conformal calibration for per-pixel predictions"};
  app.require_subcommand(1);
  Common common;
  bool force = false;
  fs::path config, out, model, test, subtract;
  std::vector<fs::path> configs;
  std::string split = "calibration", mode = "absolute";
  int levels = 20;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", common.seed, "Override the seed");
    cmd->add_option("--threads", common.threads, "Worker thread cap (0 = all cores)");
  };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset from a spec");
  gen->add_option("--config,--spec", config, "Synth spec JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--split", split, "Manifest split: calibration or test");
  gen->add_flag("--force", force, "Write into a non-empty directory");
  add_common(gen);

  auto* cal = app.add_subcommand("calibrate", "Calibrate a model from a run config");
  cal->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  cal->add_option("--out", out, "Output directory (default: output_dir from the config)");
  add_common(cal);

  auto* ev = app.add_subcommand("evaluate", "Evaluate a model artifact on a test set");
  ev->add_option("--model", model, "Model directory")->required();
  ev->add_option("--test", test, "Test manifest")->required();
  ev->add_option("--levels", levels, "Number of coverage levels M");
  ev->add_option("--ce-mode", mode, "absolute or signed-literal");
  ev->add_option("--subtract", subtract, "CE grid (.npy) to subtract from");
  ev->add_option("--out", out, "Report directory")->required();
  add_common(ev);

  auto* cmp = app.add_subcommand("compare", "Calibrate and evaluate several configs");
  cmp->add_option("--config", configs, "Run config JSON (repeatable)")->required();
  cmp->add_option("--test", test, "Test manifest overriding the configs");
  cmp->add_option("--ce-mode", mode, "absolute or signed-literal");
  cmp->add_option("--out", out, "Output directory")->required();
  cmp->add_flag("--force", force, "Write into a non-empty directory");
  add_common(cmp);

  auto* cm = app.add_subcommand("cluster-map", "Run only the clustering step");
  cm->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  cm->add_option("--out", out, "Output directory")->required();
  cm->add_flag("--force", force, "Write into a non-empty directory");
  add_common(cm);

  CLI11_PARSE(app, argc, argv);

  try {
    set_max_threads(common.threads);
    if (gen->parsed()) generate(config, out, split, common, force);
    if (cal->parsed()) calibrate_cmd(config, out, common);
    if (ev->parsed()) evaluate_cmd(model, test, levels, mode, subtract, out);
    if (cmp->parsed()) compare_cmd(configs, test, mode, common, out, force);
    if (cm->parsed()) cluster_map_cmd(config, out, common, force);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
