#include "jsat/jsa.hpp"

#include <cmath>
#include <limits>

#include "jsat/errors.hpp"

namespace jsat {

void PdcModel::validate() const {
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p))
    throw validation_error("pdc.sigma_p must be positive");
  if (!(length_mm > 0.0) || !std::isfinite(length_mm))
    throw validation_error("pdc.length_mm must be positive");
  if (!(gain_scale > 0.0) || !std::isfinite(gain_scale))
    throw validation_error("pdc.gain_scale must be positive");
  if (!std::isfinite(kappa_s) || !std::isfinite(kappa_i) || (kappa_s == 0.0 && kappa_i == 0.0))
    throw validation_error("pdc.kappa_s and pdc.kappa_i must not both vanish");
}

double ComplexJsa::geometric_phase(Node n) const {
  return delta_k(grid.nu_signal()[n.s], grid.nu_idler()[n.i], model) * model.length_mm / 2.0;
}

double pump_envelope(double nu_s, double nu_i, const PdcModel& model) {
  const double x = (nu_s + nu_i) / model.sigma_p;
  return std::exp(-x * x);
}

double delta_k(double nu_s, double nu_i, const PdcModel& model) {
  return model.kappa_s * nu_s + model.kappa_i * nu_i;
}

Complex phasematching(double nu_s, double nu_i, const PdcModel& model) {
  const double x = delta_k(nu_s, nu_i, model) * model.length_mm / 2.0;
  return sinc(x) * Complex(std::cos(x), std::sin(x));
}

ComplexJsa build_jsa(const SpectralGrid& grid, const PdcModel& model) {
  model.validate();
  const Index ns = grid.count_signal();
  const Index ni = grid.count_idler();
  ArrayXXcd values(ns, ni);
  double sum = 0.0;
  for (Index s = 0; s < ns; ++s) {
    const double nu_s = grid.nu_signal()[s];
    const double ws = grid.weight_signal()[s];
    for (Index i = 0; i < ni; ++i) {
      const double nu_i = grid.nu_idler()[i];
      const Complex v = pump_envelope(nu_s, nu_i, model) * phasematching(nu_s, nu_i, model);
      values(s, i) = v;
      sum += std::norm(v) * ws * grid.weight_idler()[i];
    }
  }
  if (!(sum > 0.0)) {
    throw degenerate_grid("pump and phasematching supports are disjoint on this grid");
  }
  const double norm = 1.0 / std::sqrt(sum);
  values *= norm;
  return ComplexJsa{grid, std::move(values), norm, model};
}

double jsa_phase_class(Complex value, double geometric_phase, double amplitude_floor) {
  if (!(std::abs(value) > amplitude_floor)) {
    throw zero_amplitude("phase class undefined at (near-)zero amplitude");
  }
  const Complex residual = value * Complex(std::cos(geometric_phase), -std::sin(geometric_phase));
  return residual.real() >= 0.0 ? 0.0 : kPi;
}

ArrayXXd phase_class_map(const ComplexJsa& jsa, double relative_floor) {
  const double floor = relative_floor * jsa.peak_modulus();
  ArrayXXd out(jsa.values.rows(), jsa.values.cols());
  for (Index s = 0; s < jsa.values.rows(); ++s) {
    for (Index i = 0; i < jsa.values.cols(); ++i) {
      const Complex v = jsa.values(s, i);
      if (!(std::abs(v) > floor)) {
        out(s, i) = std::numeric_limits<double>::quiet_NaN();
      } else {
        out(s, i) = jsa_phase_class(v, jsa.geometric_phase({s, i}), 0.0);
      }
    }
  }
  return out;
}

ArrayXXd signed_modulus(const ComplexJsa& jsa) {
  ArrayXXd out(jsa.values.rows(), jsa.values.cols());
  for (Index s = 0; s < jsa.values.rows(); ++s) {
    for (Index i = 0; i < jsa.values.cols(); ++i) {
      const double x = jsa.geometric_phase({s, i});
      out(s, i) = (jsa.values(s, i) * Complex(std::cos(x), -std::sin(x))).real();
    }
  }
  return out;
}

}  // namespace jsat
