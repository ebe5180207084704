#pragma once

#include <filesystem>
#include <string>

#include "jsat/instrument.hpp"
#include "jsat/tomography.hpp"

namespace jsat {

inline constexpr const char* kSchemaVersion = "jsat/1";

/// Fully validated run configuration. JSON parsing is strict: unknown keys are
/// rejected, omitted optional fields take documented defaults (echoed to the
/// log), and every sub-config passes its own validation.
struct RunConfig {
  std::string schema_version = kSchemaVersion;

  double grid_center_signal_nm = 796.0;
  double grid_center_idler_nm = 796.0;
  double grid_span_nm = 10.0;
  double grid_step_nm = 0.1;

  PdcModel pdc{};
  DazzlerModel dazzler{};
  DetectorModel detector{};
  SeedPair seeds{};

  IntensityNoise intensity_noise{};
  int intensity_samples_per_point = 100;

  std::string output_dir = ".";
  std::string output_stem;
  std::string estimator = "dft";
  bool binary_traces = false;

  SpectralGrid make_grid() const {
    return SpectralGrid(grid_center_signal_nm, grid_center_idler_nm, grid_span_nm, grid_step_nm);
  }
};

/// Loads and validates a config file. The stem defaults to the file name.
RunConfig load_config(const std::filesystem::path& path);

/// Output directory resolution: JSAT_OUTPUT_DIR overrides the config value.
std::filesystem::path resolve_output_dir(const RunConfig& config);

/// Dataset persistence: <stem>.meta.json plus the trace matrix
/// (<stem>.traces.csv with one row per node, row-major signal outer, or
/// <stem>.traces.bin as little-endian u16) and the ground-truth CSV pair.
/// Returns the meta file path. All writes are atomic (temp + rename).
std::filesystem::path save_dataset(const ScanDataset& dataset, const std::filesystem::path& dir,
                                   const std::string& stem, bool binary_traces = false);
ScanDataset load_dataset(const std::filesystem::path& meta_path);

/// Result persistence: <stem>.result.json plus CSV matrices for modulus,
/// phase class (0 / pi / nan), real and imaginary parts, and the interpolated
/// mask. Returns the result JSON path.
std::filesystem::path save_result(const ReconstructionResult& result,
                                  const std::filesystem::path& dir, const std::string& stem);
ReconstructionResult load_result(const std::filesystem::path& result_json_path);

/// Numeric matrix CSV with two leading axis comment lines (wavelengths in nm).
void write_matrix_csv(const std::filesystem::path& path, const ArrayXXd& matrix,
                      const SpectralGrid& grid);

struct MatrixCsv {
  ArrayXXd values;
  double row_start_nm = 0.0, row_step_nm = 0.0;
  double col_start_nm = 0.0, col_step_nm = 0.0;
  bool has_axes = false;
};
MatrixCsv read_matrix_csv(const std::filesystem::path& path);

void write_metrics_json(const std::filesystem::path& path, const Metrics& metrics);

/// Atomic text-file write (write temp, then rename into place).
void atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace jsat
