#include "jsat/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "jsat/errors.hpp"

namespace jsat {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// spectral machinery

/// Normalized Dirichlet kernel W(g) = (1/N) sum_n exp(2 pi i g n).
Complex dirichlet(double g, int n) {
  const double frac = g - std::round(g);
  if (std::abs(frac) < 1e-15) return {1.0, 0.0};
  const double num = std::sin(kPi * g * n);
  const double den = static_cast<double>(n) * std::sin(kPi * g);
  const double mag = num / den;
  const double phase = kPi * g * (n - 1);
  return {mag * std::cos(phase), mag * std::sin(phase)};
}

/// DFT bins X_k / N for k = 0..N/2 of a real record.
std::vector<Complex> half_spectrum(const Eigen::Ref<const ArrayXd>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> cos_t(n), sin_t(n);
  for (int m = 0; m < n; ++m) {
    cos_t[m] = std::cos(2.0 * kPi * m / n);
    sin_t[m] = std::sin(2.0 * kPi * m / n);
  }
  std::vector<Complex> bins(static_cast<std::size_t>(n / 2) + 1);
  for (int k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    int idx = 0;
    for (int t = 0; t < n; ++t) {
      re += x[t] * cos_t[idx];
      im -= x[t] * sin_t[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    bins[k] = Complex(re / n, im / n);
  }
  return bins;
}

/// Least-squares complex amplitude of A cos(2 pi f t + phi) from a few DFT
/// bins, modeling both the +f and -f kernels (the mirror image is what the
/// naive peak-bin read-off ignores). Returns {amplitude, residual, ok}.
struct AmpSolve {
  double amplitude = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  bool ok = false;
};

AmpSolve solve_amplitude(const std::vector<Complex>& bins, const std::vector<int>& use, double f,
                         int n) {
  double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
  struct Row {
    double a, b, y;
  };
  std::vector<Row> rows;
  rows.reserve(use.size() * 2);
  for (int j : use) {
    const Complex wp = dirichlet(f - static_cast<double>(j) / n, n);
    const Complex wm = dirichlet(-f - static_cast<double>(j) / n, n);
    // X_j/N = c wp + conj(c) wm, unknowns (Re c, Im c)
    rows.push_back({wp.real() + wm.real(), -wp.imag() + wm.imag(), bins[j].real()});
    rows.push_back({wp.imag() + wm.imag(), wp.real() - wm.real(), bins[j].imag()});
  }
  for (const Row& r : rows) {
    m00 += r.a * r.a;
    m01 += r.a * r.b;
    m11 += r.b * r.b;
    r0 += r.a * r.y;
    r1 += r.b * r.y;
  }
  const double det = m00 * m11 - m01 * m01;
  const double scale = (m00 + m11) * (m00 + m11);
  AmpSolve out;
  if (!(det > 1e-12 * scale)) return out;  // near-degenerate (f ~ 0 or ~ Nyquist)
  const double cre = (m11 * r0 - m01 * r1) / det;
  const double cim = (-m01 * r0 + m00 * r1) / det;
  double res = 0.0;
  for (const Row& r : rows) {
    const double e = r.a * cre + r.b * cim - r.y;
    res += e * e;
  }
  out.amplitude = 2.0 * std::hypot(cre, cim);
  out.residual = res;
  out.ok = true;
  return out;
}

ContrastEstimate extract_dft(const Eigen::Ref<const ArrayXd>& x, int n) {
  const std::vector<Complex> bins = half_spectrum(x);
  const int kmax = n / 2;
  int k = 1;
  double best = 0.0;
  for (int j = 1; j <= kmax; ++j) {
    const double m = std::abs(bins[j]);
    if (m > best) {
      best = m;
      k = j;
    }
  }
  ContrastEstimate est;
  est.peak_bin = k;
  est.frequency = static_cast<double>(k) / n;
  if (best == 0.0) return est;

  const double raw = 2.0 * std::abs(bins[k]);
  est.contrast = raw;
  if (k <= 2) return est;  // slower than ~2 cycles/record: unresolvable, flagged stationary

  std::vector<int> use;
  for (int j = (k >= kmax - 1 ? k - 2 : k - 1); j <= std::min(k + 1, kmax); ++j)
    if (j >= 1) use.push_back(j);

  const double lo = std::max((k - 1.2) / n, 0.25 / n);
  const double hi = std::min((k + 1.2) / n, 0.5);
  const int coarse = 25;
  double bf = lo, br = std::numeric_limits<double>::infinity();
  for (int t = 0; t < coarse; ++t) {
    const double f = lo + (hi - lo) * t / (coarse - 1);
    const double r = solve_amplitude(bins, use, f, n).residual;
    if (r < br) {
      br = r;
      bf = f;
    }
  }
  if (!std::isfinite(br)) return est;
  double fl = std::max(lo, bf - (hi - lo) / (coarse - 1));
  double fh = std::min(hi, bf + (hi - lo) / (coarse - 1));
  for (int it = 0; it < 60; ++it) {
    const double f1 = fl + 0.382 * (fh - fl);
    const double f2 = fl + 0.618 * (fh - fl);
    if (solve_amplitude(bins, use, f1, n).residual < solve_amplitude(bins, use, f2, n).residual)
      fh = f2;
    else
      fl = f1;
  }
  const double fr = 0.5 * (fl + fh);
  est.frequency = fr;
  if (n % 2 == 0 && fr > 0.5 - 1e-7) {
    // at Nyquist only the in-phase quadrature is observable
    est.contrast = std::abs(bins[kmax]);
    est.frequency = 0.5;
    return est;
  }
  const AmpSolve sol = solve_amplitude(bins, use, fr, n);
  if (sol.ok) est.contrast = sol.amplitude;
  const double span = x.maxCoeff() - x.minCoeff();
  if (est.contrast > span) est.contrast = raw;  // degenerate solve blew up
  return est;
}

/// Time-domain alternative: periodogram-refined frequency + direct sinusoid
/// least squares. Cross-validates the spectral path.
ContrastEstimate extract_fit(const Eigen::Ref<const ArrayXd>& x, int n) {
  ContrastEstimate est;
  auto power = [&](double f) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < n; ++t) {
      const double a = 2.0 * kPi * f * t;
      re += x[t] * std::cos(a);
      im -= x[t] * std::sin(a);
    }
    return re * re + im * im;
  };
  const double fstep = 0.25 / n;
  double bf = fstep, bp = -1.0;
  for (double f = 1.0 / n; f <= 0.5 + 1e-12; f += fstep) {
    const double p = power(f);
    if (p > bp) {
      bp = p;
      bf = f;
    }
  }
  est.peak_bin = static_cast<int>(std::lround(bf * n));
  if (bp <= 0.0) return est;
  double fl = std::max(bf - fstep, 0.5 / n), fh = std::min(bf + fstep, 0.5);
  for (int it = 0; it < 50; ++it) {
    const double f1 = fl + 0.382 * (fh - fl);
    const double f2 = fl + 0.618 * (fh - fl);
    if (power(f1) > power(f2))
      fh = f2;
    else
      fl = f1;
  }
  const double fr = 0.5 * (fl + fh);
  est.frequency = fr;
  est.peak_bin = std::max(1, std::min(n / 2, static_cast<int>(std::lround(fr * n))));
  double scc = 0, scs = 0, sss = 0, scy = 0, ssy = 0;
  for (int t = 0; t < n; ++t) {
    const double a = 2.0 * kPi * fr * t;
    const double ct = std::cos(a), st = std::sin(a);
    scc += ct * ct;
    scs += ct * st;
    sss += st * st;
    scy += ct * x[t];
    ssy += st * x[t];
  }
  const double det = scc * sss - scs * scs;
  if (det > 1e-12 * (scc + sss) * (scc + sss)) {
    const double a = (sss * scy - scs * ssy) / det;
    const double b = (-scs * scy + scc * ssy) / det;
    est.contrast = std::hypot(a, b);
  } else if (scc > 0.0) {
    est.contrast = std::abs(scy / scc);  // Nyquist / near-DC: single quadrature
  }
  const double span = x.maxCoeff() - x.minCoeff();
  if (est.contrast > span) est.contrast = 2.0 * std::sqrt(bp) / n;
  return est;
}

double stationary_threshold_for(double noise_floor, int n, double lsb) {
  const double m = std::max(2.0, n / 2.0 - 1.0);
  const double propagated = noise_floor * std::sqrt(2.0 / n) * std::sqrt(2.0 * std::log(m));
  return std::max(3.0 * propagated, 0.75 * lsb);
}

// ---------------------------------------------------------------------------
// small geometry helpers

struct LineFit {
  Eigen::Vector2d point{0, 0};
  Eigen::Vector2d dir{1, 0};
  bool ok = false;
};

/// Total-least-squares line through weighted points (principal axis of the
/// 2x2 scatter matrix).
LineFit fit_line(const std::vector<Eigen::Vector2d>& pts, const std::vector<double>& wts) {
  LineFit fit;
  if (pts.size() < 2) return fit;
  double wsum = 0.0;
  Eigen::Vector2d mu(0, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    mu += wts[i] * pts[i];
    wsum += wts[i];
  }
  if (!(wsum > 0.0)) return fit;
  mu /= wsum;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector2d d = pts[i] - mu;
    sxx += wts[i] * d.x() * d.x();
    sxy += wts[i] * d.x() * d.y();
    syy += wts[i] * d.y() * d.y();
  }
  const double tr = sxx + syy;
  const double dt = sxx * syy - sxy * sxy;
  const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - dt));
  Eigen::Vector2d dir(sxy, lam - sxx);
  if (dir.norm() < 1e-12 * std::max(1.0, tr)) dir = sxx >= syy ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
  dir.normalize();
  if (dir.x() < 0) dir = -dir;
  fit.point = mu;
  fit.dir = dir;
  fit.ok = true;
  return fit;
}

double quadratic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  // vertex of the parabola through three points; falls back to the middle
  const double d0 = (y0 - y1) / (x0 - x1);
  const double d1 = (y1 - y2) / (x1 - x2);
  const double curv = (d0 - d1) / (x0 - x2);
  if (!(std::abs(curv) > 0.0)) return x1;
  const double v = 0.5 * (x0 + x1 - d0 / curv);
  const double lo = std::min(x0, x2), hi = std::max(x0, x2);
  return std::min(hi, std::max(lo, v));
}

}  // namespace

Estimator estimator_from_name(const std::string& name) {
  if (name == "dft") return Estimator::Dft;
  if (name == "fit") return Estimator::Fit;
  throw validation_error("unknown estimator '" + name + "' (expected dft or fit)");
}

std::string estimator_name(Estimator e) { return e == Estimator::Dft ? "dft" : "fit"; }

ContrastEstimate extract_contrast(const Eigen::Ref<const ArrayXd>& samples, double noise_floor,
                                  Estimator estimator) {
  const int n = static_cast<int>(samples.size());
  if (n < 8) throw trace_too_short("burst has " + std::to_string(n) + " samples, need >= 8");
  ArrayXd x = samples - samples.mean();
  ContrastEstimate est = estimator == Estimator::Dft ? extract_dft(x, n) : extract_fit(x, n);
  const double thr = stationary_threshold_for(noise_floor, n, 0.0);
  est.stationary = est.contrast < std::max(thr, 1e-300) || est.peak_bin <= 2;
  if (x.abs().maxCoeff() == 0.0) est.stationary = true;
  return est;
}

ContrastEstimate extract_contrast(const BurstTrace& trace, const DetectorModel& detector,
                                  double noise_floor, Estimator estimator) {
  ArrayXd x(trace.samples.size());
  for (Index i = 0; i < trace.samples.size(); ++i)
    x[i] = detector.counts_to_intensity(trace.samples[i]);
  return extract_contrast(x, noise_floor, estimator);
}

ContrastMap build_contrast_map(const ScanDataset& dataset, Estimator estimator) {
  const Index nodes = dataset.grid.node_count();
  const int pulses = dataset.dazzler.pulses_per_burst;
  if (dataset.traces.rows() != nodes || dataset.traces.cols() != pulses)
    throw validation_error("dataset trace matrix does not match grid/burst dimensions");

  const double lsb = dataset.detector.full_scale / dataset.detector.max_count();

  // noise floor from the lowest-decile trace variances (stationary and
  // out-of-support traces carry noise only)
  std::vector<double> variances(static_cast<std::size_t>(nodes));
  ArrayXd x(pulses);
  for (Index r = 0; r < nodes; ++r) {
    for (int t = 0; t < pulses; ++t)
      x[t] = dataset.detector.counts_to_intensity(dataset.traces(r, t));
    variances[static_cast<std::size_t>(r)] = (x - x.mean()).square().mean();
  }
  std::vector<double> sorted = variances;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t decile = std::max<std::size_t>(1, sorted.size() / 10);
  double acc = 0.0;
  for (std::size_t i = 0; i < decile; ++i) acc += sorted[i];
  const double noise_floor = std::sqrt(acc / static_cast<double>(decile));

  ContrastMap map{dataset.grid,
                  ArrayXXd::Zero(dataset.grid.count_signal(), dataset.grid.count_idler()),
                  ArrayXXb::Constant(dataset.grid.count_signal(), dataset.grid.count_idler(), false),
                  ArrayXXi::Zero(dataset.grid.count_signal(), dataset.grid.count_idler()),
                  noise_floor,
                  stationary_threshold_for(noise_floor, pulses, lsb),
                  false};

  for (Index r = 0; r < nodes; ++r) {
    const Node node = dataset.grid.node_at(r);
    for (int t = 0; t < pulses; ++t)
      x[t] = dataset.detector.counts_to_intensity(dataset.traces(r, t));
    ContrastEstimate est =
        estimator == Estimator::Dft ? extract_dft(x - x.mean(), pulses) : extract_fit(x - x.mean(), pulses);
    est.stationary = est.contrast < map.stationary_threshold || est.peak_bin <= 2;
    map.contrast(node.s, node.i) = est.contrast;
    map.stationary(node.s, node.i) = est.stationary;
    map.peak_bin(node.s, node.i) = est.peak_bin;
  }
  map.all_stationary = map.stationary.all();
  return map;
}

std::vector<StripeDescriptor> find_stationary_stripes(const ContrastMap& map,
                                                      const DazzlerModel& dazzler) {
  if (!map.stationary.any()) throw no_stationary_region("no masked node in the contrast map");
  if (std::abs(dazzler.dphi_slope_s) + std::abs(dazzler.dphi_slope_i) < 1e-12)
    throw no_stationary_region("phase increment has no frequency dependence, wrap lines undefined");

  const SpectralGrid& g = map.grid;
  const double band = 2.0 * kPi * 2.5 / dazzler.pulses_per_burst;

  // range of wrap indices m with 2 pi m reachable on the grid
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (double ns : {g.nu_signal()[0], g.nu_signal()[g.count_signal() - 1]}) {
    for (double ni : {g.nu_idler()[0], g.nu_idler()[g.count_idler() - 1]}) {
      const double v = dazzler.dphi0 + dazzler.dphi_slope_s * ns + dazzler.dphi_slope_i * ni;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const int m_lo = static_cast<int>(std::floor(lo / (2.0 * kPi))) - 1;
  const int m_hi = static_cast<int>(std::ceil(hi / (2.0 * kPi))) + 1;

  std::vector<StripeDescriptor> stripes;
  for (int m = m_lo; m <= m_hi; ++m) {
    std::vector<Node> nodes;
    std::vector<Eigen::Vector2d> pts;
    for (Index s = 0; s < g.count_signal(); ++s) {
      for (Index i = 0; i < g.count_idler(); ++i) {
        if (!map.stationary(s, i)) continue;
        const double raw = dazzler.dphi0 + dazzler.dphi_slope_s * g.nu_signal()[s] +
                           dazzler.dphi_slope_i * g.nu_idler()[i];
        if (std::abs(raw - 2.0 * kPi * m) < band) {
          nodes.push_back({s, i});
          pts.emplace_back(g.nu_signal()[s], g.nu_idler()[i]);
        }
      }
    }
    if (nodes.size() < 3) continue;
    const LineFit fit = fit_line(pts, std::vector<double>(pts.size(), 1.0));
    if (!fit.ok) continue;
    StripeDescriptor d;
    d.wrap_index = m;
    d.line_point = fit.point;
    d.line_dir = fit.dir;
    d.fitted_slope = fit.dir.x() != 0.0 ? fit.dir.y() / fit.dir.x()
                                        : std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return (pts[a] - fit.point).dot(fit.dir) < (pts[b] - fit.point).dot(fit.dir);
    });
    for (std::size_t idx : order) d.nodes.push_back(nodes[idx]);
    stripes.push_back(std::move(d));
  }
  if (stripes.empty())
    throw no_stationary_region("no wrap line of the phase increment crosses the masked nodes");
  return stripes;
}

int choose_pulse_index(const ScanDataset& dataset, const std::vector<StripeDescriptor>& stripes) {
  const int pulses = dataset.dazzler.pulses_per_burst;
  int best = 0;
  double best_mean = -1.0;
  for (int p = 0; p < pulses; ++p) {
    double acc = 0.0;
    int count = 0;
    for (const StripeDescriptor& st : stripes) {
      for (const Node& n : st.nodes) {
        const double v = dataset.detector.counts_to_intensity(dataset.traces(dataset.grid.flat_index(n), p));
        acc += std::abs(v - dataset.resolved_dc_offset);
        ++count;
      }
    }
    if (count > 0 && acc / count > best_mean) {
      best_mean = acc / count;
      best = p;
    }
  }
  return best;
}

StripeSigns retrieve_phase_along_stripe(const ScanDataset& dataset, const StripeDescriptor& stripe,
                                        int pulse_index) {
  if (pulse_index < 0 || pulse_index >= dataset.dazzler.pulses_per_burst)
    throw validation_error("pulse_index outside the burst");
  if (stripe.nodes.empty()) throw validation_error("empty stripe");

  const double lsb = dataset.detector.full_scale / dataset.detector.max_count();
  const double noise_thr =
      std::max(3.0 * dataset.detector.gaussian_noise_sigma * dataset.detector.full_scale, 1.5 * lsb);

  StripeSigns out;
  out.pulse_index = pulse_index;
  int determined = 0;
  for (const Node& n : stripe.nodes) {
    const double v =
        dataset.detector.counts_to_intensity(dataset.traces(dataset.grid.flat_index(n), pulse_index));
    StripeSignSample s;
    s.node = n;
    const Eigen::Vector2d p(dataset.grid.nu_signal()[n.s], dataset.grid.nu_idler()[n.i]);
    s.t = (p - stripe.line_point).dot(stripe.line_dir);
    s.deviation = v - dataset.resolved_dc_offset;
    s.sign = std::abs(s.deviation) < noise_thr ? 0 : (s.deviation > 0 ? 1 : -1);
    determined += s.sign != 0;
    out.samples.push_back(s);
  }
  if (determined == 0)
    throw stripe_outside_support("all stripe nodes are below the deviation threshold");

  // interpolated zero crossings between consecutive determined samples: the
  // signed deviation is proportional to the signed JSA amplitude, so it
  // crosses zero at the nulls
  const StripeSignSample* last = nullptr;
  for (const StripeSignSample& s : out.samples) {
    if (s.sign == 0) continue;
    if (last != nullptr && last->sign != s.sign) {
      const double dt = s.t - last->t;
      const double tc = last->t + last->deviation / (last->deviation - s.deviation) * dt;
      out.crossings_t.push_back(tc);
    }
    last = &s;
  }
  return out;
}

namespace {

struct BandStructure {
  Eigen::Vector2d ridge_dir;
  Eigen::Vector2d normal;
  std::vector<BoundaryLine> lines;  // sorted by offset
};

int band_of(const BandStructure& bs, const Eigen::Vector2d& p) {
  int idx = 0;
  for (const BoundaryLine& l : bs.lines) idx += l.normal.dot(p) > l.offset ? 1 : 0;
  return idx;
}

/// Per-row valley localization around a candidate null line; refines the
/// boundary with a TLS fit when enough contrast-map valley points confirm it.
BoundaryLine refine_boundary(const ContrastMap& map, const Eigen::Vector2d& normal, double offset,
                             int min_points) {
  const SpectralGrid& g = map.grid;
  std::vector<Eigen::Vector2d> pts;
  if (std::abs(normal.y()) > 0.2) {
    for (Index s = 0; s < g.count_signal(); ++s) {
      const double nu_s = g.nu_signal()[s];
      const double nu_i_pred = (offset - normal.x() * nu_s) / normal.y();
      // idler axis is monotone decreasing in nu; locate the nearest index
      Index ji = 0;
      double bd = std::numeric_limits<double>::max();
      for (Index i = 0; i < g.count_idler(); ++i) {
        const double d = std::abs(g.nu_idler()[i] - nu_i_pred);
        if (d < bd) {
          bd = d;
          ji = i;
        }
      }
      if (ji < 3 || ji > g.count_idler() - 4) continue;
      // local minimum of the contrast inside a 7-node window
      Index jm = ji;
      for (Index i = ji - 3; i <= ji + 3; ++i)
        if (map.contrast(s, i) < map.contrast(s, jm)) jm = i;
      if (jm <= ji - 3 || jm >= ji + 3) continue;
      if (map.stationary(s, jm - 1) || map.stationary(s, jm) || map.stationary(s, jm + 1)) continue;
      const double vmax = std::max(map.contrast(s, jm - 1), map.contrast(s, jm + 1));
      if (!(map.contrast(s, jm) < 0.7 * vmax)) continue;
      const double xm = quadratic_vertex(
          g.nu_idler()[jm - 1], map.contrast(s, jm - 1) * map.contrast(s, jm - 1),
          g.nu_idler()[jm], map.contrast(s, jm) * map.contrast(s, jm), g.nu_idler()[jm + 1],
          map.contrast(s, jm + 1) * map.contrast(s, jm + 1));
      pts.emplace_back(nu_s, xm);
    }
  }
  BoundaryLine out{normal, offset, static_cast<int>(pts.size())};
  if (static_cast<int>(pts.size()) >= min_points) {
    const LineFit fit = fit_line(pts, std::vector<double>(pts.size(), 1.0));
    if (fit.ok) {
      Eigen::Vector2d n2(-fit.dir.y(), fit.dir.x());
      if (n2.dot(normal) < 0) n2 = -n2;
      out.normal = n2;
      out.offset = n2.dot(fit.point);
    }
  }
  return out;
}

}  // namespace

ReconstructionResult assemble_complex_jsa(const ContrastMap& map,
                                          const std::vector<StripeSigns>& signs,
                                          const std::vector<StripeDescriptor>& stripes,
                                          const PdcModel& model, const AssembleOptions& options) {
  const SpectralGrid& g = map.grid;
  const Index ns = g.count_signal();
  const Index ni = g.count_idler();

  ReconstructionResult res{g,
                           map.contrast,
                           PhaseMap{g, ArrayXXd::Constant(ns, ni, kNaN), Node{0, 0}},
                           map.stationary,
                           ComplexJsa{g, ArrayXXcd::Zero(ns, ni), 0.0, model},
                           {},
                           0.0,
                           "",
                           {},
                           std::nullopt};

  const double peak = map.contrast.maxCoeff();
  if (map.all_stationary || peak <= 0.0) {
    res.flags.emplace_back("EmptyContrast");
    return res;
  }

  // modulus inpainting at masked nodes: inverse-distance average of the
  // nearest unmasked node along the four grid directions
  for (Index s = 0; s < ns; ++s) {
    for (Index i = 0; i < ni; ++i) {
      if (!map.stationary(s, i)) continue;
      double acc = 0.0, wsum = 0.0;
      const Index dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : dirs) {
        Index cs = s, ci = i;
        int dist = 0;
        while (true) {
          cs += d[0];
          ci += d[1];
          ++dist;
          if (cs < 0 || ci < 0 || cs >= ns || ci >= ni) break;
          if (!map.stationary(cs, ci)) {
            acc += res.modulus(cs, ci) / dist;
            wsum += 1.0 / dist;
            break;
          }
        }
      }
      if (wsum > 0.0) res.modulus(s, i) = acc / wsum;
    }
  }

  // ridge direction from the high-contrast core
  std::vector<Eigen::Vector2d> core;
  std::vector<double> core_w;
  for (Index s = 0; s < ns; ++s)
    for (Index i = 0; i < ni; ++i)
      if (!map.stationary(s, i) && map.contrast(s, i) > 0.5 * peak) {
        core.emplace_back(g.nu_signal()[s], g.nu_idler()[i]);
        core_w.push_back(map.contrast(s, i) * map.contrast(s, i));
      }
  const LineFit ridge = fit_line(core, core_w);
  BandStructure bs;
  bs.ridge_dir = ridge.ok ? ridge.dir : Eigen::Vector2d(1, 0);
  bs.normal = Eigen::Vector2d(-bs.ridge_dir.y(), bs.ridge_dir.x());
  if (bs.normal.y() < 0) bs.normal = -bs.normal;
  res.ridge_angle_deg = std::atan2(bs.ridge_dir.y(), bs.ridge_dir.x()) * 180.0 / kPi;
  if (!ridge.ok) res.flags.emplace_back("RidgeFitFailed");

  const double step_nu = 0.5 * (g.weight_signal().mean() + g.weight_idler().mean());

  // boundary candidates: measured sign crossings along the stripes plus
  // valley minima of the folded perpendicular profile
  std::vector<std::pair<double, bool>> candidates;  // (offset, crossing-backed)
  for (const StripeSigns& sg : signs) {
    if (sg.stripe_index < 0 || sg.stripe_index >= static_cast<int>(stripes.size())) continue;
    const StripeDescriptor& st = stripes[static_cast<std::size_t>(sg.stripe_index)];
    for (double t : sg.crossings_t) {
      const Eigen::Vector2d p = st.line_point + t * st.line_dir;
      candidates.emplace_back(bs.normal.dot(p), true);
    }
  }
  {
    // folded profile restricted to the pump-flat slab
    std::vector<std::pair<double, double>> fold;
    for (Index s = 0; s < ns; ++s)
      for (Index i = 0; i < ni; ++i) {
        if (map.stationary(s, i)) continue;
        const double v = g.nu_signal()[s] + g.nu_idler()[i];
        if (std::abs(v) > 0.35 * model.sigma_p) continue;
        fold.emplace_back(bs.normal.dot(Eigen::Vector2d(g.nu_signal()[s], g.nu_idler()[i])),
                          map.contrast(s, i));
      }
    std::sort(fold.begin(), fold.end());
    const double bin = 0.35 * step_nu;
    if (!fold.empty() && bin > 0.0) {
      std::vector<double> centers, means;
      std::size_t a = 0;
      for (double u = fold.front().first; u <= fold.back().first + bin; u += bin) {
        double acc = 0.0;
        int cnt = 0;
        while (a < fold.size() && fold[a].first < u + bin) {
          acc += fold[a].second;
          ++cnt;
          ++a;
        }
        if (cnt > 0) {
          centers.push_back(u + 0.5 * bin);
          means.push_back(acc / cnt);
        }
      }
      const double pmax = means.empty() ? 0.0 : *std::max_element(means.begin(), means.end());
      for (std::size_t t = 1; t + 1 < means.size(); ++t) {
        if (means[t] <= means[t - 1] && means[t] <= means[t + 1] && means[t] < 0.5 * pmax) {
          const double u = quadratic_vertex(centers[t - 1], means[t - 1] * means[t - 1], centers[t],
                                            means[t] * means[t], centers[t + 1],
                                            means[t + 1] * means[t + 1]);
          candidates.emplace_back(u, false);
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());

  // cluster candidates; keep clusters confirmed by a crossing or by the
  // valley refinement below
  const double tol = 1.5 * step_nu;
  std::vector<std::pair<double, bool>> clustered;
  for (const auto& c : candidates) {
    if (!clustered.empty() && std::abs(c.first - clustered.back().first) < tol) {
      clustered.back().first = 0.5 * (clustered.back().first + c.first);
      clustered.back().second = clustered.back().second || c.second;
    } else {
      clustered.push_back(c);
    }
  }
  for (const auto& [offset, crossing_backed] : clustered) {
    BoundaryLine line = refine_boundary(map, bs.normal, offset, 8);
    if (!crossing_backed && line.support_points < 4) continue;  // unconfirmed fold minimum
    bs.lines.push_back(line);
  }
  std::sort(bs.lines.begin(), bs.lines.end(),
            [](const BoundaryLine& a, const BoundaryLine& b) { return a.offset < b.offset; });
  // drop boundaries that collapsed onto each other after refinement
  std::vector<BoundaryLine> pruned;
  for (const BoundaryLine& l : bs.lines) {
    if (!pruned.empty() && std::abs(l.offset - pruned.back().offset) < 0.5 * step_nu) continue;
    pruned.push_back(l);
  }
  bs.lines = std::move(pruned);
  res.boundaries = bs.lines;

  // majority vote per band from the stripe signs
  const int nbands = static_cast<int>(bs.lines.size()) + 1;
  std::vector<std::array<int, 2>> votes(static_cast<std::size_t>(nbands), {0, 0});
  for (const StripeSigns& sg : signs) {
    for (const StripeSignSample& s : sg.samples) {
      if (s.sign == 0) continue;
      const Eigen::Vector2d p(g.nu_signal()[s.node.s], g.nu_idler()[s.node.i]);
      const int b = band_of(bs, p);
      votes[static_cast<std::size_t>(b)][s.sign > 0 ? 0 : 1] += 1;
    }
  }
  std::vector<int> band_sign(static_cast<std::size_t>(nbands), 0);
  for (int b = 0; b < nbands; ++b) {
    const auto& v = votes[static_cast<std::size_t>(b)];
    if (v[0] + v[1] == 0 || v[0] == v[1]) continue;
    band_sign[static_cast<std::size_t>(b)] = v[0] > v[1] ? 1 : -1;
  }

  // gauge: the main-peak band is the phase-0 reference
  Index ps = 0, pi = 0;
  res.modulus.maxCoeff(&ps, &pi);
  res.phase.reference = Node{ps, pi};
  const int ref_band = band_of(bs, Eigen::Vector2d(g.nu_signal()[ps], g.nu_idler()[pi]));
  const int ref_sign = band_sign[static_cast<std::size_t>(ref_band)];
  if (ref_sign == 0) {
    res.flags.emplace_back("ReferenceUndetermined");
  } else if (ref_sign < 0) {
    for (auto& s : band_sign) s = -s;
  }

  // phase classes: every node of a signed band takes that band's class; the
  // support threshold only decides which unsigned bands count as real lobes
  const double support = options.support_threshold_frac * res.modulus.maxCoeff();
  std::vector<bool> band_has_support(static_cast<std::size_t>(nbands), false);
  for (Index s = 0; s < ns; ++s) {
    for (Index i = 0; i < ni; ++i) {
      const Eigen::Vector2d p(g.nu_signal()[s], g.nu_idler()[i]);
      const int b = band_of(bs, p);
      if (res.modulus(s, i) >= support) band_has_support[static_cast<std::size_t>(b)] = true;
      const int sgn = band_sign[static_cast<std::size_t>(b)];
      if (sgn != 0) res.phase.phase_class(s, i) = sgn > 0 ? 0.0 : kPi;
    }
  }
  for (int b = 0; b < nbands; ++b) {
    if (band_has_support[static_cast<std::size_t>(b)] && band_sign[static_cast<std::size_t>(b)] == 0)
      res.flags.emplace_back("UnreachableLobe:band" + std::to_string(b));
  }

  // normalize and re-attach the model geometric phase
  double qsum = 0.0;
  for (Index s = 0; s < ns; ++s)
    for (Index i = 0; i < ni; ++i)
      qsum += res.modulus(s, i) * res.modulus(s, i) * g.quadrature_weight({s, i});
  if (qsum > 0.0) res.modulus /= std::sqrt(qsum);
  res.complex_jsa.norm_constant = res.modulus.maxCoeff();
  for (Index s = 0; s < ns; ++s) {
    for (Index i = 0; i < ni; ++i) {
      const double x = res.complex_jsa.geometric_phase({s, i});
      const double cls = res.phase.phase_class(s, i);
      const double sgn = std::isnan(cls) ? 1.0 : (cls == 0.0 ? 1.0 : -1.0);
      res.complex_jsa.values(s, i) =
          res.modulus(s, i) * sgn * Complex(std::cos(x), std::sin(x));
    }
  }
  return res;
}

Metrics score(const ReconstructionResult& result, const ComplexJsa& truth) {
  if (!result.grid.same_geometry(truth.grid)) throw grid_mismatch("result and truth grids differ");
  const SpectralGrid& g = result.grid;
  const Index ns = g.count_signal();
  const Index ni = g.count_idler();

  const ArrayXXd tmod = truth.values.abs();
  double num_ex = 0, den_ex = 0, num_all = 0, den_all = 0;
  for (Index s = 0; s < ns; ++s) {
    for (Index i = 0; i < ni; ++i) {
      const double w = g.quadrature_weight({s, i});
      const double d = result.modulus(s, i) - tmod(s, i);
      num_all += d * d * w;
      den_all += tmod(s, i) * tmod(s, i) * w;
      if (!result.interpolated(s, i)) {
        num_ex += d * d * w;
        den_ex += tmod(s, i) * tmod(s, i) * w;
      }
    }
  }

  const ArrayXXd tsigned = signed_modulus(truth);
  const double tpeak = tmod.maxCoeff();
  long agree_pos = 0, agree_neg = 0, total = 0;
  for (Index s = 0; s < ns; ++s) {
    for (Index i = 0; i < ni; ++i) {
      if (tmod(s, i) <= 0.05 * tpeak) continue;
      ++total;
      const double cls = result.phase.phase_class(s, i);
      if (std::isnan(cls)) continue;
      const int rec = cls == 0.0 ? 1 : -1;
      const int tru = tsigned(s, i) >= 0 ? 1 : -1;
      agree_pos += rec == tru;
      agree_neg += rec == -tru;
    }
  }

  // sidelobe ratio from pump-compensated crest fits: divide out the truth
  // pump envelope, then fit quadratics in |dk L/2| over the main lobe and the
  // first-sidelobe band, so the crest is located between grid samples
  auto crest = [&](double x_lo, double x_hi) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, y0 = 0, y1 = 0, y2 = 0;
    long count = 0;
    const double xc = 0.5 * (x_lo + x_hi);
    for (Index s = 0; s < ns; ++s) {
      for (Index i = 0; i < ni; ++i) {
        if (result.interpolated(s, i)) continue;
        const double env =
            pump_envelope(g.nu_signal()[s], g.nu_idler()[i], truth.model);
        if (env < 0.3) continue;
        const double x = std::abs(delta_k(g.nu_signal()[s], g.nu_idler()[i], truth.model) *
                                  truth.model.length_mm / 2.0);
        if (x < x_lo || x > x_hi) continue;
        const double xr = x - xc;
        const double y = result.modulus(s, i) / env;
        s0 += 1;
        s1 += xr;
        s2 += xr * xr;
        s3 += xr * xr * xr;
        s4 += xr * xr * xr * xr;
        y0 += y;
        y1 += xr * y;
        y2 += xr * xr * y;
        ++count;
      }
    }
    if (count < 6) return kNaN;
    // solve the 3x3 normal equations for y = a + b xr + c xr^2
    const double A[3][3] = {{s0, s1, s2}, {s1, s2, s3}, {s2, s3, s4}};
    const double rhs[3] = {y0, y1, y2};
    double M[3][4];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = A[r][c];
      M[r][3] = rhs[r];
    }
    for (int col = 0; col < 3; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(M[r][col]) > std::abs(M[pivot][col])) pivot = r;
      std::swap(M[col], M[pivot]);
      if (std::abs(M[col][col]) < 1e-30) return kNaN;
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = M[r][col] / M[col][col];
        for (int c = col; c < 4; ++c) M[r][c] -= f * M[col][c];
      }
    }
    const double a = M[0][3] / M[0][0];
    const double b = M[1][3] / M[1][1];
    const double c = M[2][3] / M[2][2];
    const double hw = 0.5 * (x_hi - x_lo);
    double xv = c < 0 ? -b / (2 * c) : (b >= 0 ? hw : -hw);
    xv = std::min(hw, std::max(-hw, xv));
    return a + b * xv + c * xv * xv;
  };

  Metrics m;
  m.modulus_rel_l2_error = den_ex > 0 ? std::sqrt(num_ex / den_ex) : 0.0;
  m.modulus_rel_l2_error_all = den_all > 0 ? std::sqrt(num_all / den_all) : 0.0;
  m.phase_agreement_fraction =
      total > 0 ? static_cast<double>(std::max(agree_pos, agree_neg)) / total : 0.0;
  const double main_crest = crest(0.0, 0.9);
  const double side_crest = crest(kPi + 0.6, 2.0 * kPi - 0.7);
  m.sidelobe_ratio = (std::isfinite(main_crest) && std::isfinite(side_crest) && main_crest > 0)
                         ? side_crest / main_crest
                         : sidelobe_ratio(result.modulus, g);
  return m;
}

double sidelobe_ratio(const ArrayXXd& modulus, const SpectralGrid& grid) {
  const Index ns = grid.count_signal();
  const Index ni = grid.count_idler();
  Index ps = 0, pi = 0;
  modulus.maxCoeff(&ps, &pi);

  // walk the anti-diagonal (constant nu_s + nu_i, so the pump envelope stays
  // put) through the peak; assumes the ridge is not itself anti-diagonal
  auto bilinear = [&](double si, double ii) -> double {
    const Index s0 = static_cast<Index>(std::floor(si));
    const Index i0 = static_cast<Index>(std::floor(ii));
    if (s0 < 0 || i0 < 0 || s0 + 1 >= ns || i0 + 1 >= ni) return kNaN;
    const double ts = si - s0, ti = ii - i0;
    return modulus(s0, i0) * (1 - ts) * (1 - ti) + modulus(s0 + 1, i0) * ts * (1 - ti) +
           modulus(s0, i0 + 1) * (1 - ts) * ti + modulus(s0 + 1, i0 + 1) * ts * ti;
  };

  const double peak_val = modulus(ps, pi);
  if (!(peak_val > 0)) return 0.0;
  double best = 0.0;
  for (int dir : {1, -1}) {
    // sample, then lightly smooth to keep noise from faking extrema
    std::vector<double> prof;
    for (double t = 0.0; ; t += 0.05) {
      const double v =
          bilinear(ps + dir * t * 0.70710678118654752, pi - dir * t * 0.70710678118654752);
      if (std::isnan(v)) break;
      prof.push_back(v);
    }
    std::vector<double> sm(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
      double acc = 0.0;
      int cnt = 0;
      for (int d = -3; d <= 3; ++d) {
        const auto j = static_cast<long>(i) + d;
        if (j < 0 || j >= static_cast<long>(prof.size())) continue;
        acc += prof[static_cast<std::size_t>(j)];
        ++cnt;
      }
      sm[i] = acc / cnt;
    }
    // hysteresis walk: descend into the first null, then ride the rebound to
    // the sidelobe crest; 8% of the peak separates structure from noise
    const double hyst = 0.08 * peak_val;
    double valley = sm.empty() ? 0.0 : sm[0];
    bool in_lobe = false;
    double lobe_max = 0.0;
    for (double v : sm) {
      if (!in_lobe) {
        valley = std::min(valley, v);
        if (v > valley + hyst && valley < 0.5 * peak_val) in_lobe = true;
      }
      if (in_lobe) {
        lobe_max = std::max(lobe_max, v);
        if (v < lobe_max - hyst) break;  // past the crest
      }
    }
    best = std::max(best, lobe_max);
  }
  return best / peak_val;
}

}  // namespace jsat
