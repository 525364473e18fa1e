#include "fermi/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fermi/stats.hpp"

namespace fermi {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

std::vector<double> running_median(const std::vector<double>& y, std::size_t window) {
  const std::size_t n = y.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    buf.assign(y.begin() + static_cast<std::ptrdiff_t>(lo),
               y.begin() + static_cast<std::ptrdiff_t>(hi));
    out[i] = median_of(buf);
  }
  return out;
}

// Widths of the cells around each sample (midpoint rule).
std::vector<double> cell_widths(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? x[1] - x[0] : x[i] - x[i - 1];
    const double right = i + 1 == n ? x[n - 1] - x[n - 2] : x[i + 1] - x[i];
    w[i] = 0.5 * (left + right);
  }
  return w;
}

double integrate(std::span<const double> y, const std::vector<double>& widths) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * widths[i];
  return s;
}

}  // namespace

Density coarse_grain(std::span<const double> x, std::span<const double> y, double width,
                     double tail) {
  if (x.size() != y.size()) throw InvalidParameter("coarse_grain: length mismatch");
  if (!(width > 0.0)) throw InvalidParameter("coarse_grain: width must be positive");
  Density out;
  if (x.size() < 2) return out;
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  double total = 0.0;
  for (double v : y) total += v;
  if (!(total > 0.0)) return out;
  std::size_t lo = 0, hi = x.size() - 1;
  while (lo < hi && y[lo] <= tail * total) ++lo;
  while (hi > lo && y[hi] <= tail * total) --hi;
  const auto k0 = static_cast<long>(std::floor(x[lo] / width + 0.5));
  const auto k1 = static_cast<long>(std::floor(x[hi] / width + 0.5));
  out.x.resize(static_cast<std::size_t>(k1 - k0 + 1));
  out.y.assign(out.x.size(), 0.0);
  for (long k = k0; k <= k1; ++k) out.x[static_cast<std::size_t>(k - k0)] = static_cast<double>(k) * width;
  for (std::size_t i = lo; i <= hi; ++i) {
    const auto k = static_cast<long>(std::floor(x[i] / width + 0.5));
    out.y[static_cast<std::size_t>(k - k0)] += y[i] * h / width;
  }
  return out;
}

std::vector<Peak> detect_spikes(const Density& density, const SpikeOptions& options) {
  const auto& x = density.x;
  const auto& y = density.y;
  std::vector<Peak> peaks;
  const std::size_t n = y.size();
  if (x.size() != n) throw InvalidParameter("detect_spikes: x and y lengths differ");
  for (double v : y) {
    if (v < 0.0) throw InvalidParameter("detect_spikes: density has negative values");
  }
  if (n < 32) return peaks;
  const double top = *std::max_element(y.begin(), y.end());
  if (!(top > 0.0)) return peaks;

  std::size_t window = options.median_window;
  if (window == 0) window = std::max<std::size_t>(5, n / 10);
  window |= 1;
  const std::vector<double> background = running_median(y, window);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    if (y[i] < options.min_relative_height * top) continue;
    if (!(y[i] > options.prominence_factor * background[i])) continue;

    const double level = background[i] + 0.5 * (y[i] - background[i]);
    std::size_t l = i;
    while (l > 0 && y[l - 1] >= level) --l;
    std::size_t r = i;
    while (r + 1 < n && y[r + 1] >= level) ++r;
    double left = x[l];
    if (l > 0) left = x[l - 1] + (x[l] - x[l - 1]) * (level - y[l - 1]) / (y[l] - y[l - 1]);
    double right = x[r];
    if (r + 1 < n) right = x[r] + (x[r + 1] - x[r]) * (y[r] - level) / (y[r] - y[r + 1]);
    peaks.push_back({x[i], y[i], right - left});
  }
  return peaks;
}

double median_peak_spacing(const std::vector<Peak>& peaks) {
  if (peaks.size() < 2) return 0.0;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    gaps.push_back(peaks[i].location - peaks[i - 1].location);
  }
  return median_of(gaps);
}

namespace {

// Fit parameters: log(dp - eps), log(eps - eps_min), log a, phi, mu,
// log sigma_bg, logit c. The offsets keep eps above half a bin and dp above
// eps; the caps stop a flat comb from running dp off to infinity.
using Params = Eigen::Matrix<double, 7, 1>;

struct Bounds {
  double eps_min = 0.0;
  double log_cap = 0.0;
};

CombFit unpack(const Params& q, const Bounds& b) {
  CombFit f;
  f.spike_sigma = b.eps_min + std::exp(std::min(q[1], b.log_cap));
  f.envelope_sigma = f.spike_sigma + std::exp(std::min(q[0], b.log_cap));
  f.spacing = std::exp(q[2]);
  f.offset = q[3] - f.spacing * std::floor(q[3] / f.spacing);
  f.center = q[4];
  f.background_sigma = std::exp(std::min(q[5], b.log_cap));
  f.contrast = 1.0 / (1.0 + std::exp(-q[6]));
  return f;
}

void model_into(const CombFit& f, std::span<const double> x, const std::vector<double>& widths,
                std::vector<double>& out) {
  const std::size_t n = x.size();
  std::vector<double> comb(n), bg(n);
  const double a = f.spacing;
  const double reach = 7.0 * f.spike_sigma;  // exp(-49/4) ~ 5e-6
  const double inv4e2 = 1.0 / (4.0 * f.spike_sigma * f.spike_sigma);
  const double inv4d2 = 1.0 / (4.0 * f.envelope_sigma * f.envelope_sigma);
  const double inv2b2 = 1.0 / (2.0 * f.background_sigma * f.background_sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] - f.offset;
    const auto n_lo = static_cast<long>(std::ceil((u - reach) / a));
    const auto n_hi = static_cast<long>(std::floor((u + reach) / a));
    double spikes = 0.0;
    for (long k = n_lo; k <= n_hi; ++k) {
      const double d = u - static_cast<double>(k) * a;
      spikes += std::exp(-d * d * inv4e2);
    }
    const double c = x[i] - f.center;
    comb[i] = std::exp(-c * c * inv4d2) * spikes;
    bg[i] = std::exp(-c * c * inv2b2);
  }
  const double zc = integrate(comb, widths);
  const double zb = integrate(bg, widths);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cpart = zc > 0.0 ? comb[i] / zc : 0.0;
    const double bpart = zb > 0.0 ? bg[i] / zb : 0.0;
    out[i] = f.contrast * cpart + (1.0 - f.contrast) * bpart;
  }
}

}  // namespace

std::vector<double> comb_model(const CombFit& fit, std::span<const double> p) {
  std::vector<double> out;
  model_into(fit, p, cell_widths(p), out);
  return out;
}

CombFit fit_comb_model(const Density& density, const SpikeOptions& spikes, int max_iterations) {
  const std::vector<Peak> peaks = detect_spikes(density, spikes);
  if (peaks.size() < 3) {
    throw FitError("comb fit needs at least 3 detected peaks, found " +
                   std::to_string(peaks.size()));
  }
  const auto& x = density.x;
  const std::size_t n = x.size();
  const std::vector<double> widths = cell_widths(x);
  std::vector<double> y = density.y;
  const double mass = integrate(y, widths);
  if (!(mass > 0.0)) throw FitError("comb fit: density has no mass");
  for (double& v : y) v /= mass;

  // Moments of the data set the envelope and background starting values.
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] * y[i] * widths[i];
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean) * y[i] * widths[i];
  const double sd = std::sqrt(std::max(var, 1e-300));

  const double a0 = median_peak_spacing(peaks);
  double sx = 0.0, cx = 0.0;
  std::vector<double> peak_widths;
  for (const Peak& pk : peaks) {
    const double ang = kTwoPi * pk.location / a0;
    sx += pk.height * std::sin(ang);
    cx += pk.height * std::cos(ang);
    peak_widths.push_back(pk.width);
  }
  const double phi0 = a0 * std::atan2(sx, cx) / kTwoPi;
  const double grid = (x.back() - x.front()) / static_cast<double>(n - 1);
  // FWHM of exp(-p^2 / 4 eps^2) is 4 sqrt(ln 2) eps.
  const double eps0 = std::max(median_of(peak_widths) / (4.0 * std::sqrt(std::log(2.0))),
                               0.5 * grid);

  const Bounds bounds{0.5 * grid, std::log(10.0 * (x.back() - x.front()))};
  const double eps_start = std::max(eps0 - bounds.eps_min, 0.25 * bounds.eps_min);
  const double dp_start = std::max(sd / std::sqrt(2.0), 2.0 * eps0);
  Params q;
  q << std::log(dp_start - bounds.eps_min - eps_start), std::log(eps_start), std::log(a0), phi0, mean,
      std::log(sd), 0.0;

  Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  std::vector<double> buf;
  auto residuals = [&](const Params& p) -> Eigen::VectorXd {
    model_into(unpack(p, bounds), x, widths, buf);
    return Eigen::Map<const Eigen::VectorXd>(buf.data(), static_cast<Eigen::Index>(n)) - data;
  };

  Eigen::VectorXd r = residuals(q);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  int it = 0;
  bool converged = false;
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 7);
  for (; it < max_iterations && !converged; ++it) {
    for (int j = 0; j < 7; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(q[j]));
      Params qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      jac.col(j) = (residuals(qp) - residuals(qm)) / (2.0 * h);
    }
    const Eigen::Matrix<double, 7, 7> jtj = jac.transpose() * jac;
    const Params grad = jac.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix<double, 7, 7> lhs = jtj;
      for (int j = 0; j < 7; ++j) lhs(j, j) += mu * std::max(jtj(j, j), 1e-12);
      const Params step = lhs.ldlt().solve(-grad);
      const Params trial = q + step;
      const Eigen::VectorXd rt = residuals(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        double rel = 0.0;
        for (int j = 0; j < 7; ++j) {
          rel = std::max(rel, std::abs(step[j]) / std::max(std::abs(q[j]), 1e-3));
        }
        converged = rel < 1e-8 || (cost - ct) <= 1e-15 * cost;
        q = trial;
        r = rt;
        cost = ct;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) converged = true;  // no descent direction left: stationary point
  }

  CombFit fit = unpack(q, bounds);
  fit.residual = std::sqrt(cost / static_cast<double>(n)) * mass;
  fit.iterations = it;
  if (!converged) throw CombFitFailed("comb fit did not converge", fit);
  // A comb with fewer than two teeth in range is not a comb.
  if (!(fit.spacing < 0.5 * (x.back() - x.front()))) {
    throw CombFitFailed("comb spacing left the sampled range", fit);
  }
  return fit;
}

CombReport analyze_comb(const Density& density, const SpikeOptions& spikes) {
  CombReport report;
  report.peaks = detect_spikes(density, spikes);
  report.median_spacing = median_peak_spacing(report.peaks);
  if (report.peaks.size() >= 3) {
    try {
      report.fit = fit_comb_model(density, spikes);
      report.contrast = report.fit->contrast;
    } catch (const FitError&) {
      report.contrast = 0.0;
    }
  }
  return report;
}

DiffusionFit fit_power_law(std::span<const double> t, std::span<const double> y,
                           double transient_fraction) {
  if (t.size() != y.size()) throw InvalidParameter("fit_power_law: length mismatch");
  if (t.size() < 20) throw InvalidParameter("fit_power_law needs at least 20 samples");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw InvalidParameter("fit_power_law: t must increase strictly");
  }
  const auto skip = static_cast<std::size_t>(std::floor(transient_fraction * t.size()));
  std::vector<double> lx, ly;
  for (std::size_t i = skip; i < t.size(); ++i) {
    if (!(y[i] > 0.0) || !(t[i] > 0.0)) {
      throw FitError("fit_power_law: non-positive sample at index " + std::to_string(i));
    }
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  const Moments mx = moments(lx);
  const Moments my = moments(ly);
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx.mean) * (ly[i] - my.mean);
  sxy /= static_cast<double>(lx.size());
  DiffusionFit fit;
  fit.alpha = sxy / mx.variance;
  fit.prefactor = std::exp(my.mean - fit.alpha * mx.mean);
  fit.r_squared = my.variance > 0.0 ? std::clamp(sxy * sxy / (mx.variance * my.variance), 0.0, 1.0)
                                    : 1.0;
  return fit;
}

namespace {

std::vector<double> detrend(std::span<const double> t, std::span<const double> v) {
  const std::size_t n = t.size();
  const Moments mt = moments(t);
  const Moments mv = moments(v);
  double stv = 0.0;
  for (std::size_t i = 0; i < n; ++i) stv += (t[i] - mt.mean) * (v[i] - mv.mean);
  stv /= static_cast<double>(n);
  const double slope = mt.variance > 0.0 ? stv / mt.variance : 0.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] - mv.mean - slope * (t[i] - mt.mean);
  return out;
}

}  // namespace

double breathing_correlation(std::span<const double> t, std::span<const double> a,
                             std::span<const double> b) {
  if (t.size() != a.size() || t.size() != b.size()) {
    throw InvalidParameter("breathing_correlation: series must share the time grid");
  }
  if (t.size() < 50) throw InvalidParameter("breathing_correlation needs at least 50 samples");
  const std::vector<double> ra = detrend(t, a);
  const std::vector<double> rb = detrend(t, b);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    saa += ra[i] * ra[i];
    sbb += rb[i] * rb[i];
    sab += ra[i] * rb[i];
  }
  const double scale_a = std::max(1.0, std::abs(moments(a).mean));
  const double scale_b = std::max(1.0, std::abs(moments(b).mean));
  const double tiny = 1e-24 * static_cast<double>(t.size());
  if (saa <= tiny * scale_a * scale_a || sbb <= tiny * scale_b * scale_b) {
    throw FitError("breathing_correlation: residuals have zero variance");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SweepReport sweep_summary(const std::vector<SweepSample>& points,
                          const std::vector<Window>& windows) {
  SweepReport report;
  if (points.size() < 3) throw CoverageError("sweep_summary needs at least 3 points");
  std::vector<SweepSample> pts = points;
  std::sort(pts.begin(), pts.end(),
            [](const SweepSample& l, const SweepSample& r) { return l.lambda < r.lambda; });
  const double first = pts.front().lambda;
  const double last = pts.back().lambda;
  std::vector<double> steps;
  for (std::size_t i = 1; i < pts.size(); ++i) steps.push_back(pts[i].lambda - pts[i - 1].lambda);
  report.grid_step = median_of(steps);

  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    if (pts[i].dp > pts[i - 1].dp && pts[i].dp > pts[i + 1].dp) {
      report.local_maxima.push_back(pts[i].lambda);
    }
  }

  std::string undersampled;
  for (const Window& w : windows) {
    if (w.lo() < first || w.hi() + 0.1 > last) continue;
    WindowSummary s{w, 0, 0.0, 0.0, 0.0, 0.0, 0.0, false, std::nullopt, 0.0};
    double best_center = std::numeric_limits<double>::infinity();
    s.min_inside = std::numeric_limits<double>::infinity();
    std::optional<double> left, right;
    for (const SweepSample& p : pts) {
      if (w.contains(p.lambda)) {
        ++s.samples_inside;
        s.min_inside = std::min(s.min_inside, p.dp);
      }
      if (p.lambda < w.lo()) left = p.dp;
      if (!right && p.lambda >= w.hi() + 0.1) right = p.dp;
      const double d = std::abs(p.lambda - w.center());
      if (d < best_center) {
        best_center = d;
        s.center_value = p.dp;
      }
    }
    if (s.samples_inside < 3) {
      undersampled += (undersampled.empty() ? "" : ", ") + std::string("s=") +
                      std::to_string(w.s()).substr(0, 4);
      continue;
    }
    s.outside_value = right.value_or(0.0);
    s.max_outside = std::max(left.value_or(0.0), s.outside_value);
    s.dip_ratio = s.outside_value > 0.0 ? s.center_value / s.outside_value : 0.0;
    s.has_dip = left && right && s.min_inside < *left && s.min_inside < *right;
    for (double m : report.local_maxima) {
      if (!s.nearest_maximum || std::abs(m - w.center()) < std::abs(*s.nearest_maximum - w.center())) {
        s.nearest_maximum = m;
      }
    }
    if (s.nearest_maximum && report.grid_step > 0.0) {
      s.maximum_offset_steps = std::abs(*s.nearest_maximum - w.center()) / report.grid_step;
    }
    report.windows.push_back(s);
  }
  if (!undersampled.empty()) {
    throw CoverageError("fewer than 3 sweep points inside window(s): " + undersampled);
  }
  return report;
}

}  // namespace fermi
