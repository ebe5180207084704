#include "jsat/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jsat/errors.hpp"
#include "jsat/log.hpp"

namespace jsat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Strict object reader: every access is recorded, leftovers are rejected.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw validation_error(path_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw validation_error(path_ + "." + key + " is missing");
    seen_.insert(key);
    return get_as<T>(key);
  }

  template <typename T>
  T optional(const std::string& key, T fallback, std::vector<std::string>* defaulted = nullptr) {
    if (!j_.contains(key)) {
      if (defaulted != nullptr) defaulted->push_back(path_ + "." + key);
      return fallback;
    }
    seen_.insert(key);
    return get_as<T>(key);
  }

  const json& child(const std::string& key) {
    if (!j_.contains(key)) throw validation_error(path_ + "." + key + " is missing");
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0)
        throw unknown_key(path_ + "." + it.key() + " is not a recognized field");
    }
  }

 private:
  template <typename T>
  T get_as(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw validation_error(path_ + "." + key + " has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
  return j;
}

json grid_to_json(const SpectralGrid& g) {
  return json{{"center_signal_nm", g.center_signal_nm()},
              {"center_idler_nm", g.center_idler_nm()},
              {"span_nm", g.span_nm()},
              {"step_nm", g.step_nm()}};
}

SpectralGrid grid_from_json(const json& j, const std::string& path) {
  StrictObject o(j, path);
  const double cs = o.require<double>("center_signal_nm");
  const double ci = o.require<double>("center_idler_nm");
  const double span = o.require<double>("span_nm");
  const double step = o.require<double>("step_nm");
  o.finish();
  return SpectralGrid(cs, ci, span, step);
}

json pdc_to_json(const PdcModel& m) {
  return json{{"sigma_p_rad_per_ps", m.sigma_p},
              {"length_mm", m.length_mm},
              {"kappa_s_ps_per_mm", m.kappa_s},
              {"kappa_i_ps_per_mm", m.kappa_i},
              {"gain_scale", m.gain_scale}};
}

PdcModel pdc_from_json(const json& j, const std::string& path) {
  StrictObject o(j, path);
  PdcModel m{};
  m.sigma_p = o.require<double>("sigma_p_rad_per_ps");
  m.length_mm = o.require<double>("length_mm");
  m.kappa_s = o.require<double>("kappa_s_ps_per_mm");
  m.kappa_i = o.require<double>("kappa_i_ps_per_mm");
  m.gain_scale = o.require<double>("gain_scale");
  o.finish();
  m.validate();
  return m;
}

json dazzler_to_json(const DazzlerModel& m) {
  return json{{"dphi0_rad", m.dphi0},
              {"dphi_slope_s", m.dphi_slope_s},
              {"dphi_slope_i", m.dphi_slope_i},
              {"pulses_per_burst", m.pulses_per_burst}};
}

DazzlerModel dazzler_from_json(const json& j, const std::string& path,
                               std::vector<std::string>* defaulted) {
  StrictObject o(j, path);
  DazzlerModel m{};
  m.dphi0 = o.optional<double>("dphi0_rad", m.dphi0, defaulted);
  m.dphi_slope_s = o.optional<double>("dphi_slope_s", m.dphi_slope_s, defaulted);
  m.dphi_slope_i = o.optional<double>("dphi_slope_i", m.dphi_slope_i, defaulted);
  m.pulses_per_burst = o.optional<int>("pulses_per_burst", m.pulses_per_burst, defaulted);
  o.finish();
  m.validate();
  return m;
}

json detector_to_json(const DetectorModel& m) {
  return json{{"gaussian_noise_sigma", m.gaussian_noise_sigma},
              {"adc_bits", m.adc_bits},
              {"full_scale", m.full_scale},
              {"dc_offset", m.dc_offset},
              {"rng_seed", m.rng_seed}};
}

DetectorModel detector_from_json(const json& j, const std::string& path,
                                 std::vector<std::string>* defaulted) {
  StrictObject o(j, path);
  DetectorModel m{};
  m.gaussian_noise_sigma = o.optional<double>("gaussian_noise_sigma", m.gaussian_noise_sigma, defaulted);
  m.adc_bits = o.optional<int>("adc_bits", m.adc_bits, defaulted);
  m.full_scale = o.optional<double>("full_scale", m.full_scale, defaulted);
  m.dc_offset = o.optional<double>("dc_offset", m.dc_offset, defaulted);
  m.rng_seed = o.optional<std::uint64_t>("rng_seed", m.rng_seed, defaulted);
  o.finish();
  if (j.contains("adc_bits") && (m.adc_bits < 1 || m.adc_bits > 24))
    throw validation_error(path + ".adc_bits must be in [1, 24]");
  m.validate();
  return m;
}

json seeds_to_json(const SeedPair& s) {
  return json{{"amp_alpha", s.amp_alpha},   {"amp_beta", s.amp_beta},
              {"phi_alpha0", s.phi_alpha0}, {"phi_beta0", s.phi_beta0},
              {"width_nm", s.width_nm}};
}

SeedPair seeds_from_json(const json& j, const std::string& path,
                         std::vector<std::string>* defaulted) {
  StrictObject o(j, path);
  SeedPair s{};
  s.amp_alpha = o.optional<double>("amp_alpha", s.amp_alpha, defaulted);
  s.amp_beta = o.optional<double>("amp_beta", s.amp_beta, defaulted);
  s.phi_alpha0 = o.optional<double>("phi_alpha0", s.phi_alpha0, defaulted);
  s.phi_beta0 = o.optional<double>("phi_beta0", s.phi_beta0, defaulted);
  s.width_nm = o.optional<double>("width_nm", s.width_nm, defaulted);
  o.finish();
  s.validate();
  return s;
}

void write_matrix_body(std::ostringstream& out, const ArrayXXd& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

ArrayXXcd read_complex_pair(const fs::path& real_path, const fs::path& imag_path) {
  const MatrixCsv re = read_matrix_csv(real_path);
  const MatrixCsv im = read_matrix_csv(imag_path);
  if (re.values.rows() != im.values.rows() || re.values.cols() != im.values.cols())
    throw parse_error("real/imag matrices disagree in shape");
  ArrayXXcd out(re.values.rows(), re.values.cols());
  for (Index r = 0; r < out.rows(); ++r)
    for (Index c = 0; c < out.cols(); ++c) out(r, c) = Complex(re.values(r, c), im.values(r, c));
  return out;
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io_error("cannot write " + tmp.string());
    out << contents;
    if (!out.good()) throw io_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string());
}

RunConfig load_config(const fs::path& path) {
  const json j = parse_file(path);
  std::vector<std::string> defaulted;
  StrictObject root(j, "config");

  RunConfig cfg;
  cfg.schema_version = root.optional<std::string>("schema_version", kSchemaVersion, &defaulted);
  if (cfg.schema_version != kSchemaVersion)
    throw validation_error("unsupported schema_version '" + cfg.schema_version + "'");

  {
    StrictObject g(root.child("grid"), "config.grid");
    cfg.grid_center_signal_nm = g.require<double>("center_signal_nm");
    cfg.grid_center_idler_nm = g.require<double>("center_idler_nm");
    cfg.grid_span_nm = g.require<double>("span_nm");
    cfg.grid_step_nm = g.require<double>("step_nm");
    g.finish();
  }
  cfg.pdc = pdc_from_json(root.child("pdc"), "config.pdc");
  cfg.dazzler = root.has("dazzler")
                    ? dazzler_from_json(root.child("dazzler"), "config.dazzler", &defaulted)
                    : DazzlerModel{};
  if (!root.has("dazzler")) defaulted.emplace_back("config.dazzler");
  cfg.detector = root.has("detector")
                     ? detector_from_json(root.child("detector"), "config.detector", &defaulted)
                     : DetectorModel{};
  if (!root.has("detector")) defaulted.emplace_back("config.detector");
  cfg.seeds = root.has("seeds") ? seeds_from_json(root.child("seeds"), "config.seeds", &defaulted)
                                : SeedPair{};
  if (!root.has("seeds")) defaulted.emplace_back("config.seeds");

  if (root.has("intensity_baseline")) {
    StrictObject b(root.child("intensity_baseline"), "config.intensity_baseline");
    cfg.intensity_noise.floor_frac_of_peak =
        b.optional<double>("floor_frac_of_peak", 0.0, &defaulted);
    cfg.intensity_noise.shot_scale = b.optional<double>("shot_scale", 1.0, &defaulted);
    cfg.intensity_samples_per_point = b.optional<int>("samples_per_point", 100, &defaulted);
    b.finish();
  } else {
    defaulted.emplace_back("config.intensity_baseline");
  }

  if (root.has("output")) {
    StrictObject o(root.child("output"), "config.output");
    cfg.output_dir = o.optional<std::string>("dir", ".", &defaulted);
    cfg.output_stem = o.optional<std::string>("stem", "", &defaulted);
    o.finish();
  } else {
    defaulted.emplace_back("config.output");
  }
  cfg.estimator = root.optional<std::string>("estimator", "dft", &defaulted);
  estimator_from_name(cfg.estimator);
  cfg.binary_traces = root.optional<bool>("binary_traces", false, &defaulted);
  root.finish();

  cfg.make_grid();  // run grid validation now, not at first use
  if (cfg.output_stem.empty()) cfg.output_stem = path.stem().string();
  for (const std::string& d : defaulted) log_debug("config: " + d + " defaulted");
  if (!defaulted.empty())
    log_info("config: " + std::to_string(defaulted.size()) + " field(s) took defaults");
  return cfg;
}

fs::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv("JSAT_OUTPUT_DIR")) return fs::path(env);
  return fs::path(config.output_dir);
}

std::filesystem::path save_dataset(const ScanDataset& dataset, const fs::path& dir,
                                   const std::string& stem, bool binary_traces) {
  if (!dir.empty()) fs::create_directories(dir);
  const std::string traces_name = stem + (binary_traces ? ".traces.bin" : ".traces.csv");
  const std::string truth_real = stem + ".truth_real.csv";
  const std::string truth_imag = stem + ".truth_imag.csv";

  json meta{{"schema_version", kSchemaVersion},
            {"kind", "scan_dataset"},
            {"grid", grid_to_json(dataset.grid)},
            {"pdc", pdc_to_json(dataset.pdc)},
            {"dazzler", dazzler_to_json(dataset.dazzler)},
            {"detector", detector_to_json(dataset.detector)},
            {"seeds", seeds_to_json(dataset.seed_template)},
            {"resolved_dc_offset", dataset.resolved_dc_offset},
            {"node_order", "row-major: signal index outer, idler index inner"},
            {"trace_encoding", binary_traces ? "bin-u16le" : "csv"},
            {"files", json{{"traces", traces_name}}},
            {"saturated_node_count",
             static_cast<int>(std::count(dataset.saturated.begin(), dataset.saturated.end(), 1))}};

  if (dataset.ground_truth.has_value()) {
    meta["files"]["truth_real"] = truth_real;
    meta["files"]["truth_imag"] = truth_imag;
    meta["truth_norm_constant"] = dataset.ground_truth->norm_constant;
    write_matrix_csv(dir / truth_real, dataset.ground_truth->values.real(), dataset.grid);
    write_matrix_csv(dir / truth_imag, dataset.ground_truth->values.imag(), dataset.grid);
  }

  if (binary_traces) {
    std::string blob;
    blob.reserve(static_cast<std::size_t>(dataset.traces.size()) * 2);
    for (Index r = 0; r < dataset.traces.rows(); ++r) {
      for (Index c = 0; c < dataset.traces.cols(); ++c) {
        const auto v = static_cast<std::uint16_t>(dataset.traces(r, c));
        blob.push_back(static_cast<char>(v & 0xff));
        blob.push_back(static_cast<char>((v >> 8) & 0xff));
      }
    }
    atomic_write(dir / traces_name, blob);
  } else {
    std::ostringstream out;
    out << "# traces: one row per grid node (signal outer, idler inner), one column per pulse\n";
    for (Index r = 0; r < dataset.traces.rows(); ++r) {
      for (Index c = 0; c < dataset.traces.cols(); ++c) {
        if (c > 0) out << ',';
        out << dataset.traces(r, c);
      }
      out << '\n';
    }
    atomic_write(dir / traces_name, out.str());
  }

  const fs::path meta_path = dir / (stem + ".meta.json");
  atomic_write(meta_path, meta.dump(2) + "\n");
  return meta_path;
}

ScanDataset load_dataset(const fs::path& meta_path) {
  const json j = parse_file(meta_path);
  StrictObject root(j, "meta");
  const std::string schema = root.require<std::string>("schema_version");
  if (schema != kSchemaVersion) throw validation_error("unsupported schema_version '" + schema + "'");
  const std::string kind = root.require<std::string>("kind");
  if (kind != "scan_dataset") throw validation_error("expected kind scan_dataset, got " + kind);

  SpectralGrid grid = grid_from_json(root.child("grid"), "meta.grid");
  PdcModel pdc = pdc_from_json(root.child("pdc"), "meta.pdc");
  DazzlerModel dazzler = dazzler_from_json(root.child("dazzler"), "meta.dazzler", nullptr);
  DetectorModel detector = detector_from_json(root.child("detector"), "meta.detector", nullptr);
  SeedPair seeds = seeds_from_json(root.child("seeds"), "meta.seeds", nullptr);

  ScanDataset ds{std::move(grid), pdc, dazzler, detector, seeds, 0.0, {}, {}, {}};
  ds.resolved_dc_offset = root.require<double>("resolved_dc_offset");
  root.optional<std::string>("node_order", "");
  root.optional<int>("saturated_node_count", 0);
  const std::string encoding = root.require<std::string>("trace_encoding");

  StrictObject files(root.child("files"), "meta.files");
  const std::string traces_name = files.require<std::string>("traces");
  const bool has_truth = files.has("truth_real");
  std::string truth_real, truth_imag;
  double truth_norm = 0.0;
  if (has_truth) {
    truth_real = files.require<std::string>("truth_real");
    truth_imag = files.require<std::string>("truth_imag");
    truth_norm = root.require<double>("truth_norm_constant");
  }
  files.finish();
  root.finish();

  const fs::path dir = meta_path.parent_path();
  const Index nodes = ds.grid.node_count();
  const int pulses = ds.dazzler.pulses_per_burst;
  ds.traces.resize(nodes, pulses);
  ds.saturated.assign(static_cast<std::size_t>(nodes), 0);

  if (encoding == "bin-u16le") {
    std::ifstream in(dir / traces_name, std::ios::binary);
    if (!in) throw io_error("cannot open " + (dir / traces_name).string());
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (blob.size() != static_cast<std::size_t>(nodes) * pulses * 2)
      throw parse_error("trace blob size does not match grid and burst length");
    std::size_t pos = 0;
    for (Index r = 0; r < nodes; ++r) {
      for (int c = 0; c < pulses; ++c) {
        const auto lo = static_cast<std::uint8_t>(blob[pos]);
        const auto hi = static_cast<std::uint8_t>(blob[pos + 1]);
        ds.traces(r, c) = static_cast<int>(lo | (hi << 8));
        pos += 2;
      }
    }
  } else if (encoding == "csv") {
    std::ifstream in(dir / traces_name);
    if (!in) throw io_error("cannot open " + (dir / traces_name).string());
    std::string line;
    Index r = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (r >= nodes) throw parse_error("too many trace rows");
      std::stringstream ss(line);
      std::string cell;
      int c = 0;
      while (std::getline(ss, cell, ',')) {
        if (c >= pulses) throw parse_error("too many pulse columns in trace row");
        ds.traces(r, c) = std::stoi(cell);
        ++c;
      }
      if (c != pulses) throw parse_error("trace row has wrong column count");
      ++r;
    }
    if (r != nodes) throw parse_error("trace file has wrong row count");
  } else {
    throw validation_error("unknown trace_encoding '" + encoding + "'");
  }

  if (has_truth) {
    ComplexJsa truth{ds.grid, read_complex_pair(dir / truth_real, dir / truth_imag), truth_norm,
                     ds.pdc};
    if (truth.values.rows() != ds.grid.count_signal() ||
        truth.values.cols() != ds.grid.count_idler())
      throw parse_error("ground-truth matrix does not match the grid");
    ds.ground_truth = std::move(truth);
  }
  return ds;
}

void write_matrix_csv(const fs::path& path, const ArrayXXd& matrix, const SpectralGrid& grid) {
  std::ostringstream out;
  out << "# rows signal_nm start=" << format_double(grid.signal_nm()[0])
      << " step=" << format_double(grid.step_nm()) << " count=" << grid.count_signal() << "\n";
  out << "# cols idler_nm start=" << format_double(grid.idler_nm()[0])
      << " step=" << format_double(grid.step_nm()) << " count=" << grid.count_idler() << "\n";
  write_matrix_body(out, matrix);
  atomic_write(path, out.str());
}

MatrixCsv read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  MatrixCsv out;
  std::vector<std::vector<double>> rows;
  std::string line;
  int axis_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      double start = 0, step = 0;
      long count = 0;
      if (std::sscanf(line.c_str(), "# rows %*s start=%lf step=%lf count=%ld", &start, &step,
                      &count) == 3) {
        out.row_start_nm = start;
        out.row_step_nm = step;
        ++axis_lines;
      } else if (std::sscanf(line.c_str(), "# cols %*s start=%lf step=%lf count=%ld", &start,
                             &step, &count) == 3) {
        out.col_start_nm = start;
        out.col_step_nm = step;
        ++axis_lines;
      }
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (!rows.empty() && row.size() != rows.front().size())
      throw parse_error(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error(path.string() + ": no numeric rows");
  out.has_axes = axis_lines == 2;
  out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return out;
}

std::filesystem::path save_result(const ReconstructionResult& result, const fs::path& dir,
                                  const std::string& stem) {
  if (!dir.empty()) fs::create_directories(dir);
  const std::string modulus_name = stem + ".modulus.csv";
  const std::string phase_name = stem + ".phase.csv";
  const std::string real_name = stem + ".real.csv";
  const std::string imag_name = stem + ".imag.csv";
  const std::string interp_name = stem + ".interpolated.csv";

  write_matrix_csv(dir / modulus_name, result.modulus, result.grid);
  write_matrix_csv(dir / phase_name, result.phase.phase_class, result.grid);
  write_matrix_csv(dir / real_name, result.complex_jsa.values.real(), result.grid);
  write_matrix_csv(dir / imag_name, result.complex_jsa.values.imag(), result.grid);
  write_matrix_csv(dir / interp_name, result.interpolated.cast<double>(), result.grid);

  json boundaries = json::array();
  for (const BoundaryLine& b : result.boundaries) {
    boundaries.push_back(json{{"normal", {b.normal.x(), b.normal.y()}},
                              {"offset", b.offset},
                              {"support_points", b.support_points}});
  }
  json jm;
  if (result.metrics.has_value()) {
    jm = json{{"modulus_rel_l2_error", result.metrics->modulus_rel_l2_error},
              {"modulus_rel_l2_error_all", result.metrics->modulus_rel_l2_error_all},
              {"phase_agreement_fraction", result.metrics->phase_agreement_fraction},
              {"sidelobe_ratio", result.metrics->sidelobe_ratio}};
  }
  json root{{"schema_version", kSchemaVersion},
            {"kind", "reconstruction_result"},
            {"grid", grid_to_json(result.grid)},
            {"pdc", pdc_to_json(result.complex_jsa.model)},
            {"estimator", result.estimator},
            {"reference_node", {result.phase.reference.s, result.phase.reference.i}},
            {"ridge_angle_deg", result.ridge_angle_deg},
            {"boundaries", boundaries},
            {"flags", result.flags},
            {"metrics", jm},
            {"colormaps", json{{"modulus", "viridis"}, {"real", "coolwarm"}}},
            {"files", json{{"modulus", modulus_name},
                           {"phase", phase_name},
                           {"real", real_name},
                           {"imag", imag_name},
                           {"interpolated", interp_name}}}};
  const fs::path out = dir / (stem + ".result.json");
  atomic_write(out, root.dump(2) + "\n");
  return out;
}

ReconstructionResult load_result(const fs::path& result_json_path) {
  const json j = parse_file(result_json_path);
  StrictObject root(j, "result");
  const std::string schema = root.require<std::string>("schema_version");
  if (schema != kSchemaVersion) throw validation_error("unsupported schema_version '" + schema + "'");
  const std::string kind = root.require<std::string>("kind");
  if (kind != "reconstruction_result")
    throw validation_error("expected kind reconstruction_result, got " + kind);

  SpectralGrid grid = grid_from_json(root.child("grid"), "result.grid");
  PdcModel pdc = pdc_from_json(root.child("pdc"), "result.pdc");

  StrictObject files(root.child("files"), "result.files");
  const fs::path dir = result_json_path.parent_path();
  const MatrixCsv modulus = read_matrix_csv(dir / files.require<std::string>("modulus"));
  const MatrixCsv phase = read_matrix_csv(dir / files.require<std::string>("phase"));
  const MatrixCsv interp = read_matrix_csv(dir / files.require<std::string>("interpolated"));
  const ArrayXXcd values = read_complex_pair(dir / files.require<std::string>("real"),
                                             dir / files.require<std::string>("imag"));
  files.finish();

  ReconstructionResult res{grid,
                           modulus.values,
                           PhaseMap{grid, phase.values, Node{0, 0}},
                           (interp.values > 0.5).eval(),
                           ComplexJsa{grid, values, 0.0, pdc},
                           {},
                           root.optional<double>("ridge_angle_deg", 0.0),
                           root.optional<std::string>("estimator", "dft"),
                           {},
                           std::nullopt};
  {
    const json ref = root.child("reference_node");
    res.phase.reference = Node{ref.at(0).get<Index>(), ref.at(1).get<Index>()};
  }
  for (const json& b : root.child("boundaries")) {
    BoundaryLine line;
    line.normal = Eigen::Vector2d(b.at("normal").at(0).get<double>(),
                                  b.at("normal").at(1).get<double>());
    line.offset = b.at("offset").get<double>();
    line.support_points = b.at("support_points").get<int>();
    res.boundaries.push_back(line);
  }
  for (const json& f : root.child("flags")) res.flags.push_back(f.get<std::string>());
  if (root.has("metrics")) {
    const json jm = root.child("metrics");
    if (jm.is_object()) {
      Metrics m;
      m.modulus_rel_l2_error = jm.at("modulus_rel_l2_error").get<double>();
      m.modulus_rel_l2_error_all = jm.at("modulus_rel_l2_error_all").get<double>();
      m.phase_agreement_fraction = jm.at("phase_agreement_fraction").get<double>();
      m.sidelobe_ratio = jm.at("sidelobe_ratio").get<double>();
      res.metrics = m;
    }
  }
  root.optional<json>("colormaps", json{});
  if (res.modulus.rows() != grid.count_signal() || res.modulus.cols() != grid.count_idler())
    throw parse_error("result matrices do not match the grid");
  root.finish();
  return res;
}

void write_metrics_json(const fs::path& path, const Metrics& metrics) {
  json j{{"schema_version", kSchemaVersion},
         {"kind", "metrics"},
         {"modulus_rel_l2_error", metrics.modulus_rel_l2_error},
         {"modulus_rel_l2_error_all", metrics.modulus_rel_l2_error_all},
         {"phase_agreement_fraction", metrics.phase_agreement_fraction},
         {"sidelobe_ratio", metrics.sidelobe_ratio}};
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace jsat
