#pragma once

#include <optional>
#include <vector>

#include "jsat/jsa.hpp"

namespace jsat {

/// Two delta-like coherent seeds at detunings (omega_alpha, omega_beta) with
/// amplitudes and phases relative to the pump.
struct SeedPair {
  double omega_alpha = 0.0;  ///< signal-seed detuning, rad/ps
  double omega_beta = 0.0;   ///< idler-seed detuning, rad/ps
  double amp_alpha = 1.0;
  double amp_beta = 1.0;
  double phi_alpha0 = 0.0;
  double phi_beta0 = 0.0;
  double width_nm = 0.0;  ///< optional finite seed width; 0 keeps ideal deltas

  void validate() const;
};

/// Pulse-shaper phase scan: the per-pulse increment of phi_alpha + phi_beta is
/// affine in the seed detunings (the diffraction position, and with it the
/// optical path difference between successive pulses, shifts with the shaped
/// frequency).
struct DazzlerModel {
  double dphi0 = kPi / 5.0;   ///< rad/pulse at the grid center
  double dphi_slope_s = 0.0;  ///< rad/pulse per rad/ps of signal-seed detuning
  double dphi_slope_i = 0.0;  ///< rad/pulse per rad/ps of idler-seed detuning
  int pulses_per_burst = 100;

  void validate() const;
};

/// APD + amplifier + digitizer chain: additive Gaussian noise at the ADC and
/// uniform quantization. dc_offset <= 0 means "auto": resolved at scan time to
/// gain * 2 |alpha beta| max|f| so depletion never drives the input negative.
struct DetectorModel {
  double gaussian_noise_sigma = 0.005;  ///< std as a fraction of full scale
  int adc_bits = 12;
  double full_scale = 1.0;
  double dc_offset = -1.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
  int max_count() const { return (1 << adc_bits) - 1; }
  double counts_to_intensity(double counts) const {
    return counts * full_scale / static_cast<double>(max_count());
  }
};

/// One digitized 100-pulse burst at a single seed point.
struct BurstTrace {
  ArrayXi samples;  ///< ADC counts, length pulses_per_burst
  Node node;
  double omega_alpha = 0.0;
  double omega_beta = 0.0;
  bool saturated = false;  ///< some pre-quantization sample was clipped
};

/// Full seeded scan: one burst per grid node, row-major (signal outer).
struct ScanDataset {
  SpectralGrid grid;
  PdcModel pdc;
  DazzlerModel dazzler;
  DetectorModel detector;
  SeedPair seed_template;
  double resolved_dc_offset = 0.0;  ///< the I0 actually applied, intensity units
  Eigen::ArrayXXi traces;           ///< node_count x pulses_per_burst
  std::vector<std::uint8_t> saturated;
  std::optional<ComplexJsa> ground_truth;

  BurstTrace trace_at(Node n) const;
};

/// Noise model of the unseeded |f|^2 baseline measurement. The floor is the
/// standard deviation of the final averaged map (background fluctuations that
/// do not average down), as a fraction of the peak; the shot term scales like
/// sqrt(mean/samples), the Poisson regime that makes faint sidelobes hard.
struct IntensityNoise {
  double floor_frac_of_peak = 0.0;
  double shot_scale = 1.0;
};

/// Per-pulse phase increment at a seed point, wrapped to (-pi, pi].
double phase_increment(double omega_alpha, double omega_beta, const DazzlerModel& dazzler);

/// Seeded intensity change: gain * 2 |alpha beta jsa_value| cos(total_phase +
/// arg jsa_value). Positive = amplification, negative = depletion.
double seeded_delta_intensity(Complex jsa_value, const SeedPair& seeds, double total_phase,
                              double gain_scale);

/// Simulates one burst at the seeds' detunings (must be a grid node).
///
/// Sample n is I0 + delta-I at total phase phi_alpha0 + phi_beta0 + n dphi,
/// plus Gaussian noise, quantized. The JSA phase enters in the measurement
/// frame, i.e. with the geometric phasematching factor exp(i dk L / 2)
/// referenced out, so phi_JSA is the binary lobe phase {0, pi}.
BurstTrace simulate_burst(const ComplexJsa& jsa, const SeedPair& seeds,
                          const DazzlerModel& dazzler, const DetectorModel& detector);

/// One burst per node with the seed template recentred at that node.
/// Deterministic for a fixed detector.rng_seed.
ScanDataset simulate_scan(const ComplexJsa& jsa, const SeedPair& seed_template,
                          const DazzlerModel& dazzler, const DetectorModel& detector);

/// Unseeded intensity baseline: noisy estimates of |f|^2, one value per node,
/// averaged over samples_per_point acquisitions.
ArrayXXd simulate_intensity_only_scan(const ComplexJsa& jsa, const DetectorModel& detector,
                                      int samples_per_point,
                                      const IntensityNoise& noise = IntensityNoise{});

}  // namespace jsat
