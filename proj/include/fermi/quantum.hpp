#pragma once

// Split-operator propagation of a wavepacket under
//
//   i kbar d/dt psi = [-(kbar^2/2) d^2/dz^2 + z + V0 exp(-kappa (z - lambda sin t))] psi
//
// on a periodic grid, with an optional absorbing layer at both edges.

#include <Eigen/Core>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "fermi/errors.hpp"
#include "fermi/model.hpp"

namespace fermi {

/// Uniform periodic grid z_j = z_min + j dz, j = 0..n-1, dz = (z_max - z_min)/n.
class SpatialGrid {
 public:
  SpatialGrid(double z_min, double z_max, std::size_t n_points);

  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  std::size_t size() const { return n_; }
  double length() const { return z_max_ - z_min_; }
  double dz() const { return length() / static_cast<double>(n_); }
  double z(std::size_t j) const { return z_min_ + static_cast<double>(j) * dz(); }

  /// Momentum spacing kbar 2 pi / L.
  double dp(double kbar) const { return kbar * kTwoPi / length(); }
  /// p_j in FFT order: 0, 1, ..., n/2 - 1, -n/2, ..., -1 (times dp).
  Eigen::ArrayXd momentum_nodes(double kbar) const;
  Eigen::ArrayXd positions() const;

 private:
  double z_min_;
  double z_max_;
  std::size_t n_;
};

struct Wavefunction {
  Eigen::ArrayXcd amplitudes;
  SpatialGrid grid;
  double t = 0.0;
  double absorbed_norm = 0.0;

  double norm() const;
};

struct Absorber {
  double frac = 0.1;       // layer width as a fraction of the grid, each edge
  double strength = 0.125;  // mask exponent in cos(...)^strength
};

struct PropagatorConfig {
  double dt = 2e-3;
  double exponent_clamp = 50.0;
  std::optional<Absorber> absorber = Absorber{};
  std::size_t sample_stride = 250;
  /// Test hook: drop the linear gravity term.
  bool gravity = true;

  void validate() const;
};

/// psi ~ exp(-(z - z_mean)^2 / (4 z_std^2) + i p_mean z / kbar), unit norm.
Wavefunction init_gaussian(const SpatialGrid& grid, double z_mean, double p_mean, double z_std,
                           double kbar);

/// z + V0 exp(min(-kappa (z - lambda sin t), clamp)).
double potential(double z, double t, const DimensionlessParams& params, double clamp = 50.0,
                 bool gravity = true);

/// Strang stepper owning the FFT plans and the state buffer.
class SplitOperator {
 public:
  SplitOperator(const SpatialGrid& grid, const DimensionlessParams& params,
                const PropagatorConfig& cfg);
  ~SplitOperator();
  SplitOperator(const SplitOperator&) = delete;
  SplitOperator& operator=(const SplitOperator&) = delete;

  void load(const Wavefunction& psi);
  Wavefunction snapshot() const;

  /// One step: half potential at t + dt/2, kinetic, half potential, absorber.
  void step();

  double t() const { return t_; }
  double norm() const { return norm_; }
  double absorbed() const { return absorbed_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double t_ = 0.0;
  double norm_ = 1.0;
  double absorbed_ = 0.0;
};

Wavefunction split_step(const Wavefunction& psi, const DimensionlessParams& params,
                        const PropagatorConfig& cfg);

struct PositionMoments {
  double norm = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

PositionMoments position_moments(const Wavefunction& psi);

/// |psi(p)|^2 on ascending momentum nodes, integrating to the surviving norm.
struct MomentumDensity {
  std::vector<double> p;
  std::vector<double> density;

  double mean() const;
  double variance() const;
};

MomentumDensity momentum_density(const Wavefunction& psi, double kbar);

struct QuantumSeries {
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> z_mean;
  std::vector<double> dz;
  std::vector<double> p_mean;
  std::vector<double> dp2;
  std::vector<double> absorbed;
  MomentumDensity final_momentum;
  std::size_t steps = 0;
  /// More than a fifth of the probability left through the absorber.
  bool absorber_warning = false;
};

/// Steps until t_final, sampling every `cfg.sample_stride` steps (first
/// sample at the start, last at the end).
QuantumSeries evolve_quantum(const Wavefunction& psi0, const DimensionlessParams& params,
                             const PropagatorConfig& cfg, double t_final);

/// Broad initial data: at rest a few units above the mirror, where the
/// packet straddles several accelerating islands.
struct PacketSpec {
  double z_mean = 6.0;
  double p_mean = 0.0;
  double z_std = 1.0;
};

/// Grid from the hard-wall growth bound p(t) <= |p0| + sqrt(2 lambda t):
/// the top clears the apex p^2/2 plus the absorber layer, the bottom sits
/// inside the mirror, and n is the smallest power of two (>= min_points)
/// resolving twice the peak momentum.
SpatialGrid auto_grid(const DimensionlessParams& params, const PacketSpec& packet,
                      double t_final, const PropagatorConfig& cfg, std::size_t min_points = 1u << 14);

}  // namespace fermi
