#include "jsat/grid.hpp"

#include <cmath>

#include "jsat/errors.hpp"

namespace jsat {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw validation_error(std::string("grid.") + name + " must be positive and finite");
  }
}

}  // namespace

SpectralGrid::SpectralGrid(double center_signal_nm, double center_idler_nm, double span_nm,
                           double step_nm)
    : center_signal_nm_(center_signal_nm),
      center_idler_nm_(center_idler_nm),
      span_nm_(span_nm),
      step_nm_(step_nm) {
  check_positive(center_signal_nm, "center_signal_nm");
  check_positive(center_idler_nm, "center_idler_nm");
  check_positive(step_nm, "step_nm");
  if (span_nm < 0.0 || !std::isfinite(span_nm)) {
    throw validation_error("grid.span_nm must be non-negative and finite");
  }

  const double ratio = span_nm / step_nm;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw validation_error("grid.span_nm must be an integer multiple of grid.step_nm");
  }
  const auto intervals = static_cast<Index>(rounded);
  if (intervals % 2 != 0) {
    throw validation_error("grid.span_nm/step_nm must be even so the point count is odd");
  }
  const Index n = intervals + 1;
  if (span_nm > 0.0 && n < 3) {
    throw validation_error("grid needs at least 3 points per axis (or span 0 for one point)");
  }
  const double half_span = span_nm / 2.0;
  if (center_signal_nm - half_span <= 0.0 || center_idler_nm - half_span <= 0.0) {
    throw validation_error("grid span extends to non-positive wavelengths");
  }

  auto build_axis = [&](double center, ArrayXd& lam, ArrayXd& nu, ArrayXd& w) {
    lam.resize(n);
    nu.resize(n);
    w.resize(n);
    const Index mid = (n - 1) / 2;
    for (Index j = 0; j < n; ++j) {
      lam[j] = center + static_cast<double>(j - mid) * step_nm;
      nu[j] = detuning(lam[j], center);
      w[j] = std::abs(angular_frequency(lam[j] + step_nm / 2.0) -
                      angular_frequency(lam[j] - step_nm / 2.0));
    }
    nu[mid] = 0.0;  // center sample is exact by construction
  };
  build_axis(center_signal_nm_, signal_nm_, nu_signal_, weight_signal_);
  build_axis(center_idler_nm_, idler_nm_, nu_idler_, weight_idler_);
}

Node SpectralGrid::snap(double nu_s, double nu_i, double tol) const {
  auto find = [&](const ArrayXd& nu, double v, const ArrayXd& w) -> Index {
    Index best = 0;
    double best_d = std::abs(nu[0] - v);
    for (Index j = 1; j < nu.size(); ++j) {
      const double d = std::abs(nu[j] - v);
      if (d < best_d) {
        best = j;
        best_d = d;
      }
    }
    if (best_d > tol * w[best]) return -1;
    return best;
  };
  const Index s = find(nu_signal_, nu_s, weight_signal_);
  const Index i = find(nu_idler_, nu_i, weight_idler_);
  if (s < 0 || i < 0) {
    throw off_grid_seed("seed detuning (" + std::to_string(nu_s) + ", " + std::to_string(nu_i) +
                        ") rad/ps is not a grid node");
  }
  return {s, i};
}

bool SpectralGrid::same_geometry(const SpectralGrid& other, double tol) const {
  auto near = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); };
  return near(center_signal_nm_, other.center_signal_nm_) &&
         near(center_idler_nm_, other.center_idler_nm_) && near(span_nm_, other.span_nm_) &&
         near(step_nm_, other.step_nm_);
}

}  // namespace jsat
