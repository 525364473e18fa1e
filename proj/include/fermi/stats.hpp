#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <utility>
#include <vector>

namespace fermi {

/// Counter-based normal deviates: the stream for (seed, index) is fixed, so
/// any partition of particles over threads draws identical numbers.
class ParticleStream {
 public:
  ParticleStream(std::uint64_t seed, std::uint64_t index);

  /// Uniform in (0, 1].
  double uniform();
  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair();

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Pairwise summation; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double stddev() const { return std::sqrt(variance); }
};

/// Two-pass mean and population variance with pairwise sums.
Moments moments(std::span<const double> values);

struct Histogram {
  std::vector<double> edges;      // size bins + 1
  std::vector<double> densities;  // integrates to 1

  std::size_t bins() const { return densities.size(); }
  std::vector<double> centers() const;
  double integral() const;
};

/// Freedman-Diaconis bin width, 2 IQR n^{-1/3}; 0 when the IQR vanishes.
double freedman_diaconis_width(std::span<const double> values);

/// Normalized histogram. `bin_width <= 0` selects the Freedman-Diaconis rule.
Histogram make_histogram(std::span<const double> values, double bin_width = 0.0,
                         std::size_t max_bins = 20000);

std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) over `threads` workers in contiguous chunks.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  if (threads == 0) threads = default_thread_count();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
}

}  // namespace fermi
