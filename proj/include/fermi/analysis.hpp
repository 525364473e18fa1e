#pragma once

// Diagnostics on momentum distributions and time series: spike (comb)
// detection, the Gaussian-comb model fit, growth exponents, breathing
// correlation and window-sweep summaries.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fermi/errors.hpp"
#include "fermi/model.hpp"

namespace fermi {

/// Sampled density on bin centers.
struct Density {
  std::vector<double> x;
  std::vector<double> y;
};

/// Integrates a finely sampled density (ascending, uniform nodes) into bins
/// of `width` centered on multiples of `width`, dropping tails that carry
/// less than `tail` of the total mass per node.
Density coarse_grain(std::span<const double> x, std::span<const double> y, double width,
                     double tail = 1e-10);

struct Peak {
  double location = 0.0;
  double height = 0.0;
  double width = 0.0;  // full width at half prominence
};

struct SpikeOptions {
  double prominence_factor = 3.0;
  /// Running-median window in bins; 0 picks about a tenth of the bins.
  std::size_t median_window = 0;
  /// Peaks lower than this fraction of the global maximum are noise.
  double min_relative_height = 0.02;
};

/// Local maxima standing above a running-median background by the
/// prominence factor, sorted by location.
std::vector<Peak> detect_spikes(const Density& density, const SpikeOptions& options = {});

/// Fitted comb
///   P(p) = (1 - c) G(p; mu, sigma_bg)
///        + c N exp(-(p - mu)^2 / 4 dp^2) sum_n exp(-(p - n a - phi)^2 / 4 eps^2)
/// with both terms normalized on the sample grid.
struct CombFit {
  double envelope_sigma = 0.0;  // dp
  double spike_sigma = 0.0;     // eps
  double spacing = 0.0;         // a
  double offset = 0.0;          // phi, in [0, a)
  double center = 0.0;          // mu
  double background_sigma = 0.0;
  double contrast = 0.0;        // mass fraction in the comb
  double residual = 0.0;        // RMS of model - data
  int iterations = 0;
};

class CombFitFailed : public FitError {
 public:
  CombFitFailed(const std::string& what, CombFit best) : FitError(what), best_(best) {}
  const CombFit& best_so_far() const { return best_; }

 private:
  CombFit best_;
};

/// Normalized comb-plus-background model at `p`.
std::vector<double> comb_model(const CombFit& fit, std::span<const double> p);

/// Levenberg-Marquardt fit initialized from detect_spikes (needs >= 3 peaks).
CombFit fit_comb_model(const Density& density, const SpikeOptions& spikes = {},
                       int max_iterations = 500);

/// Peaks plus the comb fit when one exists; contrast is 0 without a fit.
struct CombReport {
  std::vector<Peak> peaks;
  std::optional<CombFit> fit;
  double median_spacing = 0.0;
  double contrast = 0.0;
};

CombReport analyze_comb(const Density& density, const SpikeOptions& spikes = {});

/// Median gap between consecutive peak locations (0 for fewer than 2 peaks).
double median_peak_spacing(const std::vector<Peak>& peaks);

struct DiffusionFit {
  double alpha = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log t, log y) after dropping the leading
/// `transient_fraction` of samples.
DiffusionFit fit_power_law(std::span<const double> t, std::span<const double> y,
                           double transient_fraction = 0.2);

/// Pearson correlation of the linearly detrended series.
double breathing_correlation(std::span<const double> t, std::span<const double> a,
                             std::span<const double> b);

struct SweepSample {
  double lambda = 0.0;
  double dp = 0.0;
};

struct WindowSummary {
  Window window;
  std::size_t samples_inside = 0;
  double min_inside = 0.0;
  double center_value = 0.0;   // dp at the sample nearest the window center
  double outside_value = 0.0;  // dp at the first sample >= hi + 0.1
  double max_outside = 0.0;    // max of the neighbors just below lo and at hi + 0.1
  double dip_ratio = 0.0;      // center_value / outside_value
  bool has_dip = false;        // min_inside below both neighbors
  std::optional<double> nearest_maximum;  // local maximum of dp closest to the center
  double maximum_offset_steps = 0.0;      // |nearest_maximum - center| / grid step
};

struct SweepReport {
  std::vector<WindowSummary> windows;
  std::vector<double> local_maxima;
  double grid_step = 0.0;
};

/// Per-window dip and maximum bookkeeping for a dp(lambda) sweep. Windows
/// whose span [lo, hi + 0.1] lies inside the sampled range are summarized;
/// any of those with fewer than three samples in [lo, hi) is a coverage error.
SweepReport sweep_summary(const std::vector<SweepSample>& points,
                          const std::vector<Window>& windows);

}  // namespace fermi
