#include "jsat/instrument.hpp"

#include <cmath>

#include "jsat/errors.hpp"
#include "jsat/rng.hpp"

namespace jsat {

void SeedPair::validate() const {
  if (!(amp_alpha > 0.0) || !(amp_beta > 0.0))
    throw validation_error("seeds.amp_alpha and seeds.amp_beta must be positive");
  if (width_nm < 0.0) throw validation_error("seeds.width_nm must be non-negative");
}

void DazzlerModel::validate() const {
  if (pulses_per_burst < 2) throw validation_error("dazzler.pulses_per_burst must be >= 2");
  if (!std::isfinite(dphi0) || !std::isfinite(dphi_slope_s) || !std::isfinite(dphi_slope_i))
    throw validation_error("dazzler phase parameters must be finite");
}

void DetectorModel::validate() const {
  if (adc_bits < 1 || adc_bits > 24)
    throw validation_error("detector.adc_bits must be in [1, 24]");
  if (gaussian_noise_sigma < 0.0)
    throw validation_error("detector.gaussian_noise_sigma must be non-negative");
  if (!(full_scale > 0.0)) throw validation_error("detector.full_scale must be positive");
}

BurstTrace ScanDataset::trace_at(Node n) const {
  const Index flat = grid.flat_index(n);
  BurstTrace t;
  t.samples = traces.row(flat).transpose();
  t.node = n;
  t.omega_alpha = grid.nu_signal()[n.s];
  t.omega_beta = grid.nu_idler()[n.i];
  t.saturated = saturated.empty() ? false : saturated[static_cast<std::size_t>(flat)] != 0;
  return t;
}

double phase_increment(double omega_alpha, double omega_beta, const DazzlerModel& dazzler) {
  return wrap_angle(dazzler.dphi0 + dazzler.dphi_slope_s * omega_alpha +
                    dazzler.dphi_slope_i * omega_beta);
}

double seeded_delta_intensity(Complex jsa_value, const SeedPair& seeds, double total_phase,
                              double gain_scale) {
  const double phi_jsa = std::arg(jsa_value);
  return gain_scale * 2.0 * seeds.amp_alpha * seeds.amp_beta * std::abs(jsa_value) *
         std::cos(total_phase + phi_jsa);
}

namespace {

int quantize(double intensity, const DetectorModel& det, bool& clipped) {
  const int maxc = det.max_count();
  double counts = intensity / det.full_scale * static_cast<double>(maxc);
  if (counts < 0.0) {
    clipped = clipped || intensity < 0.0;
    counts = 0.0;
  } else if (counts > static_cast<double>(maxc)) {
    clipped = true;
    counts = static_cast<double>(maxc);
  }
  return static_cast<int>(std::llround(counts));
}

/// Measurement-frame amplitude at a node: signed |f| carrying the binary lobe
/// phase, with the geometric factor referenced out.
double measurement_frame_value(const ComplexJsa& jsa, Node n) {
  const double x = jsa.geometric_phase(n);
  return (jsa.values(n.s, n.i) * Complex(std::cos(x), -std::sin(x))).real();
}

BurstTrace simulate_burst_at(const ComplexJsa& jsa, Node node, double signed_amplitude,
                             const SeedPair& seeds, const DazzlerModel& dazzler,
                             const DetectorModel& detector, double dc_offset,
                             RandomStream* rng) {
  const int pulses = dazzler.pulses_per_burst;
  const double nu_a = jsa.grid.nu_signal()[node.s];
  const double nu_b = jsa.grid.nu_idler()[node.i];
  const double dphi = phase_increment(nu_a, nu_b, dazzler);
  const double base_phase = seeds.phi_alpha0 + seeds.phi_beta0;
  const double amp =
      jsa.model.gain_scale * 2.0 * seeds.amp_alpha * seeds.amp_beta * signed_amplitude;

  BurstTrace trace;
  trace.samples.resize(pulses);
  trace.node = node;
  trace.omega_alpha = nu_a;
  trace.omega_beta = nu_b;
  bool clipped = false;
  const double sigma = detector.gaussian_noise_sigma * detector.full_scale;
  for (int n = 0; n < pulses; ++n) {
    double value = dc_offset + amp * std::cos(base_phase + static_cast<double>(n) * dphi);
    if (sigma > 0.0 && rng != nullptr) value += sigma * rng->next_normal();
    trace.samples[n] = quantize(value, detector, clipped);
  }
  trace.saturated = clipped;
  return trace;
}

double resolve_dc_offset(const ComplexJsa& jsa, const SeedPair& seeds,
                         const DetectorModel& detector) {
  if (detector.dc_offset > 0.0) return detector.dc_offset;
  return jsa.model.gain_scale * 2.0 * seeds.amp_alpha * seeds.amp_beta * jsa.peak_modulus();
}

/// Separable Gaussian blur of a map, with the kernel given as an intensity
/// FWHM in nm converted to axis samples. Models the finite seed bandwidth.
ArrayXXd blur_map(const ArrayXXd& map, const SpectralGrid& grid, double fwhm_nm) {
  const double sigma_samples = fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0))) / grid.step_nm();
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_samples)));
  ArrayXd kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k / sigma_samples) * (k / sigma_samples));
  kernel /= kernel.sum();

  auto convolve_rows = [&](const ArrayXXd& in) {
    ArrayXXd out = ArrayXXd::Zero(in.rows(), in.cols());
    for (Index r = 0; r < in.rows(); ++r) {
      for (Index c = 0; c < in.cols(); ++c) {
        double acc = 0.0, wsum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const Index cc = c + k;
          if (cc < 0 || cc >= in.cols()) continue;
          acc += kernel[k + radius] * in(r, cc);
          wsum += kernel[k + radius];
        }
        out(r, c) = acc / wsum;
      }
    }
    return out;
  };
  ArrayXXd tmp = convolve_rows(map);
  tmp = convolve_rows(tmp.transpose().eval()).transpose().eval();
  return tmp;
}

}  // namespace

BurstTrace simulate_burst(const ComplexJsa& jsa, const SeedPair& seeds,
                          const DazzlerModel& dazzler, const DetectorModel& detector) {
  seeds.validate();
  dazzler.validate();
  detector.validate();
  const Node node = jsa.grid.snap(seeds.omega_alpha, seeds.omega_beta);
  const double dc = resolve_dc_offset(jsa, seeds, detector);
  RandomStream rng(detector.rng_seed, static_cast<std::uint64_t>(jsa.grid.flat_index(node)));
  return simulate_burst_at(jsa, node, measurement_frame_value(jsa, node), seeds, dazzler,
                           detector, dc, &rng);
}

ScanDataset simulate_scan(const ComplexJsa& jsa, const SeedPair& seed_template,
                          const DazzlerModel& dazzler, const DetectorModel& detector) {
  seed_template.validate();
  dazzler.validate();
  detector.validate();

  ScanDataset ds{jsa.grid, jsa.model, dazzler, detector, seed_template, 0.0, {}, {}, {}};
  ds.resolved_dc_offset = resolve_dc_offset(jsa, seed_template, detector);
  const Index nodes = jsa.grid.node_count();
  ds.traces.resize(nodes, dazzler.pulses_per_burst);
  ds.saturated.assign(static_cast<std::size_t>(nodes), 0);

  ArrayXXd amplitude = signed_modulus(jsa);
  if (seed_template.width_nm > 0.0) {
    // finite seed bandwidth blurs the magnitude; lobe signs stay intact
    ArrayXXd blurred = blur_map(amplitude.abs(), jsa.grid, seed_template.width_nm);
    amplitude = blurred * amplitude.sign();
  }

  for (Index flat = 0; flat < nodes; ++flat) {
    const Node node = jsa.grid.node_at(flat);
    RandomStream rng(detector.rng_seed, static_cast<std::uint64_t>(flat));
    const BurstTrace t =
        simulate_burst_at(jsa, node, amplitude(node.s, node.i), seed_template, dazzler,
                          detector, ds.resolved_dc_offset, &rng);
    ds.traces.row(flat) = t.samples.transpose();
    ds.saturated[static_cast<std::size_t>(flat)] = t.saturated ? 1 : 0;
  }
  ds.ground_truth = jsa;
  return ds;
}

ArrayXXd simulate_intensity_only_scan(const ComplexJsa& jsa, const DetectorModel& detector,
                                      int samples_per_point, const IntensityNoise& noise) {
  if (samples_per_point < 1) throw validation_error("samples_per_point must be >= 1");
  detector.validate();
  ArrayXXd mean = jsa.values.abs2();
  const double peak = mean.maxCoeff();
  if (noise.floor_frac_of_peak == 0.0 && noise.shot_scale == 0.0) return mean;

  ArrayXXd out(mean.rows(), mean.cols());
  const double floor_sd = noise.floor_frac_of_peak * peak;
  for (Index s = 0; s < mean.rows(); ++s) {
    for (Index i = 0; i < mean.cols(); ++i) {
      const Index flat = s * mean.cols() + i;
      RandomStream rng(detector.rng_seed ^ 0x5eedull, static_cast<std::uint64_t>(flat));
      const double shot_var =
          noise.shot_scale * mean(s, i) * peak / static_cast<double>(samples_per_point);
      const double subtotal = std::sqrt(floor_sd * floor_sd + shot_var);
      out(s, i) = mean(s, i) + subtotal * rng.next_normal();
    }
  }
  return out;
}

}  // namespace jsat
