#include "fermi/stats.hpp"

#include <algorithm>
#include <numbers>

namespace fermi {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ParticleStream::ParticleStream(std::uint64_t seed, std::uint64_t index)
    : state_(splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL))) {}

double ParticleStream::uniform() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

std::pair<double, double> ParticleStream::normal_pair() {
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Moments moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
    const double d = v - m.mean;
    return d * d;
  });
  m.variance = pairwise_sum(sq) / n;
  return m;
}

std::vector<double> Histogram::centers() const {
  std::vector<double> c(bins());
  for (std::size_t i = 0; i < bins(); ++i) c[i] = 0.5 * (edges[i] + edges[i + 1]);
  return c;
}

double Histogram::integral() const {
  std::vector<double> mass(bins());
  for (std::size_t i = 0; i < bins(); ++i) mass[i] = densities[i] * (edges[i + 1] - edges[i]);
  return pairwise_sum(mass);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double freedman_diaconis_width(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
}

Histogram make_histogram(std::span<const double> values, double bin_width,
                         std::size_t max_bins) {
  Histogram h;
  if (values.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (bin_width <= 0.0) bin_width = freedman_diaconis_width(values);
  if (!(hi > lo) || !(bin_width > 0.0)) {
    // Degenerate sample: one unit-width bin around the common value.
    if (!(bin_width > 0.0)) bin_width = 1.0;
    h.edges = {lo - 0.5 * bin_width, lo + 0.5 * bin_width};
    h.densities = {1.0 / bin_width};
    return h;
  }
  // Bins of exactly the requested width from the sample minimum; the last
  // edge may overshoot the maximum.
  auto bins = static_cast<std::size_t>(std::floor((hi - lo) / bin_width)) + 1;
  double width = bin_width;
  if (bins > max_bins) {
    bins = max_bins;
    width = (hi - lo) / static_cast<double>(bins);
  }
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  if (h.edges.back() < hi) h.edges.back() = hi;
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    auto i = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(i, bins - 1)] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  h.densities.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    h.densities[i] = counts[i] / (n * (h.edges[i + 1] - h.edges[i]));
  }
  return h;
}

std::size_t default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace fermi
