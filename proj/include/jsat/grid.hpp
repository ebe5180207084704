#pragma once

#include "jsat/types.hpp"

namespace jsat {

/// Symmetric wavelength grid for the (signal, idler) plane.
///
/// Interfaces speak nm; all spectral math runs on angular-frequency detunings
/// nu = 2 pi c (1/lambda - 1/lambda_center) in rad/ps relative to the axis
/// center. The wavelength->detuning map is monotone decreasing, so detunings
/// run from positive (short wavelengths) to negative along each axis.
class SpectralGrid {
 public:
  /// Builds and validates a grid. span/step must give an even integer, so the
  /// point count per axis is odd and the center wavelength is sampled exactly.
  /// span == 0 yields the degenerate 1-point grid.
  SpectralGrid(double center_signal_nm, double center_idler_nm, double span_nm, double step_nm);

  double center_signal_nm() const { return center_signal_nm_; }
  double center_idler_nm() const { return center_idler_nm_; }
  double span_nm() const { return span_nm_; }
  double step_nm() const { return step_nm_; }

  Index count_signal() const { return signal_nm_.size(); }
  Index count_idler() const { return idler_nm_.size(); }
  Index node_count() const { return count_signal() * count_idler(); }

  const ArrayXd& signal_nm() const { return signal_nm_; }
  const ArrayXd& idler_nm() const { return idler_nm_; }

  /// Signal/idler detunings nu (rad/ps), same ordering as the wavelength axes.
  const ArrayXd& nu_signal() const { return nu_signal_; }
  const ArrayXd& nu_idler() const { return nu_idler_; }

  /// Per-sample quadrature weights |nu(lambda + step/2) - nu(lambda - step/2)|,
  /// used for the discrete normalization sum.
  const ArrayXd& weight_signal() const { return weight_signal_; }
  const ArrayXd& weight_idler() const { return weight_idler_; }

  double quadrature_weight(Node n) const {
    return weight_signal_[n.s] * weight_idler_[n.i];
  }

  /// Row-major flattening: signal outer, idler inner.
  Index flat_index(Node n) const { return n.s * count_idler() + n.i; }
  Node node_at(Index flat) const { return {flat / count_idler(), flat % count_idler()}; }

  /// Nearest node to a detuning pair; throws OffGridSeed if the point is not a
  /// grid node within `tol` fractions of a step.
  Node snap(double nu_s, double nu_i, double tol = 1e-6) const;

  bool same_geometry(const SpectralGrid& other, double tol = 1e-12) const;

 private:
  double center_signal_nm_, center_idler_nm_, span_nm_, step_nm_;
  ArrayXd signal_nm_, idler_nm_;
  ArrayXd nu_signal_, nu_idler_;
  ArrayXd weight_signal_, weight_idler_;
};

/// 2 pi c / lambda (rad/ps for lambda in nm).
inline double angular_frequency(double lambda_nm) { return 2.0 * kPi * kSpeedOfLight / lambda_nm; }

/// Detuning of lambda relative to a center wavelength.
inline double detuning(double lambda_nm, double center_nm) {
  return angular_frequency(lambda_nm) - angular_frequency(center_nm);
}

/// |d nu / d lambda| at the given wavelength; handy for nm-scale conversions.
inline double detuning_per_nm(double lambda_nm) {
  return 2.0 * kPi * kSpeedOfLight / (lambda_nm * lambda_nm);
}

}  // namespace jsat
