// jsat: simulate seeded PDC scans, reconstruct the complex JSA, compare
// against ground truth, and render heatmaps.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>

#include "jsat/errors.hpp"
#include "jsat/io.hpp"
#include "jsat/log.hpp"
#include "jsat/render.hpp"

namespace fs = std::filesystem;
using namespace jsat;

namespace {

int exit_code_for(const Error& e) {
  const std::string& c = e.category();
  if (c == "ParseError" || c == "ValidationError" || c == "UnknownKey" || c == "IoError") return 1;
  return 2;  // domain/contract errors (GridMismatch, OffGridSeed, ...)
}

ReconstructionResult run_reconstruction(const ScanDataset& dataset, Estimator estimator) {
  ContrastMap map = build_contrast_map(dataset, estimator);
  std::vector<StripeDescriptor> stripes;
  std::vector<StripeSigns> signs;
  try {
    stripes = find_stationary_stripes(map, dataset.dazzler);
    const int pulse = choose_pulse_index(dataset, stripes);
    for (std::size_t k = 0; k < stripes.size(); ++k) {
      try {
        StripeSigns s = retrieve_phase_along_stripe(dataset, stripes[k], pulse);
        s.stripe_index = static_cast<int>(k);
        signs.push_back(std::move(s));
      } catch (const Error& e) {
        log_info("stripe " + std::to_string(k) + " skipped: " + std::string(e.what()));
      }
    }
  } catch (const Error& e) {
    log_info("phase retrieval unavailable: " + std::string(e.what()));
  }
  ReconstructionResult result = assemble_complex_jsa(map, signs, stripes, dataset.pdc);
  result.estimator = estimator_name(estimator);
  if (signs.empty()) result.flags.emplace_back("ModulusOnly");
  if (dataset.ground_truth.has_value()) result.metrics = score(result, *dataset.ground_truth);
  return result;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir_flag,
                 const std::string& stem_flag, bool binary_flag) {
  RunConfig cfg = load_config(config_path);
  if (!out_dir_flag.empty()) cfg.output_dir = out_dir_flag;
  if (!stem_flag.empty()) cfg.output_stem = stem_flag;
  if (binary_flag) cfg.binary_traces = true;

  const auto t0 = std::chrono::steady_clock::now();
  const SpectralGrid grid = cfg.make_grid();
  const ComplexJsa jsa = build_jsa(grid, cfg.pdc);
  const ScanDataset dataset = simulate_scan(jsa, cfg.seeds, cfg.dazzler, cfg.detector);
  const fs::path dir = resolve_output_dir(cfg);
  const fs::path meta = save_dataset(dataset, dir, cfg.output_stem, cfg.binary_traces);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const int saturated =
      static_cast<int>(std::count(dataset.saturated.begin(), dataset.saturated.end(), 1));
  if (saturated > 0)
    std::cerr << "warning: SaturationWarning: " << saturated << " trace(s) clipped\n";
  log_info("simulate: " + std::to_string(grid.node_count()) + " nodes in " +
           std::to_string(dt) + " s");
  std::cout << meta.string() << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& dataset_path, const std::string& estimator,
                    const std::string& out_dir_flag) {
  const ScanDataset dataset = load_dataset(dataset_path);
  const ReconstructionResult result = run_reconstruction(dataset, estimator_from_name(estimator));

  fs::path dir = fs::path(dataset_path).parent_path();
  if (const char* env = std::getenv("JSAT_OUTPUT_DIR")) dir = env;
  if (!out_dir_flag.empty()) dir = out_dir_flag;
  std::string stem = fs::path(dataset_path).filename().string();
  if (const auto pos = stem.find(".meta.json"); pos != std::string::npos) stem.resize(pos);

  const fs::path out = save_result(result, dir, stem);
  if (result.metrics.has_value()) {
    log_info("modulus_rel_l2_error=" + std::to_string(result.metrics->modulus_rel_l2_error) +
             " phase_agreement=" + std::to_string(result.metrics->phase_agreement_fraction));
  }
  for (const std::string& f : result.flags) log_info("flag: " + f);
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_compare(const std::string& result_path, const std::string& truth_path,
                const std::string& out_flag) {
  const ReconstructionResult result = load_result(result_path);
  const ScanDataset truth_ds = load_dataset(truth_path);
  if (!truth_ds.ground_truth.has_value())
    throw validation_error("truth dataset carries no ground-truth JSA");
  const Metrics metrics = score(result, *truth_ds.ground_truth);

  fs::path out = out_flag.empty()
                     ? fs::path(result_path).parent_path() /
                           (fs::path(result_path).filename().stem().stem().string() + ".metrics.json")
                     : fs::path(out_flag);
  write_metrics_json(out, metrics);
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_render(const std::string& matrix_path, std::string out_flag, const std::string& colormap) {
  const MatrixCsv matrix = read_matrix_csv(matrix_path);
  if (out_flag.empty()) out_flag = matrix_path + ".png";
  RenderOptions opt;
  opt.colormap = colormap;
  render_heatmap(matrix, out_flag, opt);
  std::cout << out_flag << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-sensitive time-frequency tomography of parametric down-conversion"};
  app.require_subcommand(1);

  std::string config_path, out_dir, stem;
  bool binary = false;
  auto* sim = app.add_subcommand("simulate", "Synthesize a seeded scan dataset from a config");
  sim->add_option("config", config_path, "run config JSON")->required();
  sim->add_option("--out", out_dir, "output directory (overrides config)");
  sim->add_option("--stem", stem, "output file stem (overrides config)");
  sim->add_flag("--binary-traces", binary, "store traces as little-endian u16 binary");

  std::string dataset_path, estimator = "dft", rec_out;
  auto* rec = app.add_subcommand("reconstruct", "Recover the complex JSA from a dataset");
  rec->add_option("dataset", dataset_path, "dataset .meta.json path")->required();
  rec->add_option("--estimator", estimator, "contrast estimator: dft | fit")
      ->check(CLI::IsMember({"dft", "fit"}));
  rec->add_option("--out", rec_out, "output directory (default: next to the dataset)");

  std::string result_path, truth_path, cmp_out;
  auto* cmp = app.add_subcommand("compare", "Score a result against a dataset's ground truth");
  cmp->add_option("result", result_path, "reconstruction .result.json path")->required();
  cmp->add_option("truth", truth_path, "dataset .meta.json with embedded ground truth")->required();
  cmp->add_option("--out", cmp_out, "metrics JSON path");

  std::string matrix_path, png_out, colormap = "auto";
  auto* ren = app.add_subcommand("render", "Render a matrix CSV as a PNG heatmap");
  ren->add_option("matrix", matrix_path, "matrix .csv path")->required();
  ren->add_option("--out", png_out, "output PNG path");
  ren->add_option("--colormap", colormap, "auto | viridis | coolwarm")
      ->check(CLI::IsMember({"auto", "viridis", "coolwarm"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, stem, binary);
    if (rec->parsed()) return cmd_reconstruct(dataset_path, estimator, rec_out);
    if (cmp->parsed()) return cmd_compare(result_path, truth_path, cmp_out);
    if (ren->parsed()) return cmd_render(matrix_path, png_out, colormap);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
