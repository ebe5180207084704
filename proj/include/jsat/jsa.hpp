#pragma once

#include <cmath>

#include "jsat/grid.hpp"
#include "jsat/types.hpp"

namespace jsat {

/// Physical parameters of the down-conversion source.
///
/// The phase mismatch is linearized around the quasi-phasematched grid center:
/// dk(nu_s, nu_i) = kappa_s nu_s + kappa_i nu_i, with kappa in ps/mm so dk is
/// rad/mm. The phasematching ridge dk = 0 runs at angle atan2(-kappa_s,
/// kappa_i) in the detuning plane.
struct PdcModel {
  double sigma_p;     ///< pump spectral 1/e amplitude half-width, rad/ps
  double length_mm;   ///< nonlinear interaction length L
  double kappa_s;     ///< ps/mm
  double kappa_i;     ///< ps/mm
  double gain_scale;  ///< dimensionless seeded-gain proportionality

  void validate() const;
  double ridge_angle_rad() const { return std::atan2(-kappa_s, kappa_i); }
};

/// Normalized complex joint spectral amplitude on a grid.
///
/// values(s, i) with signal along rows; sum |f|^2 w_s w_i == 1. The model that
/// generated (or is assumed for) the field rides along so downstream code can
/// evaluate the geometric phasematching phase dk L / 2.
struct ComplexJsa {
  SpectralGrid grid;
  ArrayXXcd values;
  double norm_constant = 0.0;  ///< peak prefactor applied by normalization
  PdcModel model;

  double geometric_phase(Node n) const;
  /// Largest |f| over the grid.
  double peak_modulus() const { return values.abs().maxCoeff(); }
};

/// Gaussian pump envelope exp[-(nu_s+nu_i)^2 / sigma_p^2]; in (0, 1].
double pump_envelope(double nu_s, double nu_i, const PdcModel& model);

/// Linearized phase mismatch kappa_s nu_s + kappa_i nu_i (rad/mm).
double delta_k(double nu_s, double nu_i, const PdcModel& model);

/// sinc(dk L / 2) exp(i dk L / 2); modulus <= 1.
Complex phasematching(double nu_s, double nu_i, const PdcModel& model);

/// Pump envelope x phasematching on every node, normalized so the discrete
/// quadrature sum of |f|^2 is exactly one. Throws DegenerateGrid if the field
/// vanishes identically before normalization.
ComplexJsa build_jsa(const SpectralGrid& grid, const PdcModel& model);

/// Binary phase class of a JSA value: strips the geometric factor
/// exp(i geometric_phase) and classifies the residual sign. Returns 0 or pi.
/// Throws ZeroAmplitude when |value| <= amplitude_floor (phase undefined).
double jsa_phase_class(Complex value, double geometric_phase, double amplitude_floor = 0.0);

/// Per-node phase classes with the floor tied to the field peak; NaN marks
/// nodes below the floor.
ArrayXXd phase_class_map(const ComplexJsa& jsa, double relative_floor = 1e-12);

/// Signed modulus in the measurement frame: Re[f exp(-i dk L / 2)]. The sign
/// carries the binary lobe phase; magnitude equals |f| up to roundoff.
ArrayXXd signed_modulus(const ComplexJsa& jsa);

}  // namespace jsat
