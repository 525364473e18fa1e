#pragma once

// Classical trajectories and Gaussian ensembles: exact event-driven bounces
// off a hard wall at z = lambda sin t, leapfrog integration of the smooth
// exponential mirror, and the standard map used as a diffusion oracle.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fermi/errors.hpp"
#include "fermi/model.hpp"
#include "fermi/stats.hpp"

namespace fermi {

enum class WallMode { hard, soft };

struct ClassicalState {
  double z = 0.0;
  double p = 0.0;
  double t = 0.0;
};

struct EnsembleSpec {
  std::size_t n_particles = 10000;
  double z_mean = 0.0;
  double p_mean = 0.0;
  double z_std = 0.1;
  double p_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BounceEvent {
  double t_impact = 0.0;
  double z_impact = 0.0;
  double p_before = 0.0;
  double p_after = 0.0;
  double wall_velocity = 0.0;
};

/// No wall contact within the search horizon.
class EscapeError : public NumericalError {
 public:
  EscapeError(const std::string& what, ClassicalState last)
      : NumericalError(what), last_(last) {}
  const ClassicalState& last_state() const { return last_; }

 private:
  ClassicalState last_;
};

/// The soft integrator produced a non-finite state.
class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, ClassicalState last_good)
      : NumericalError(what), last_good_(last_good) {}
  const ClassicalState& last_good_state() const { return last_good_; }

 private:
  ClassicalState last_good_;
};

struct SampledEnsemble {
  std::vector<ClassicalState> states;
  std::size_t rejected = 0;
};

/// Draws the initial ensemble at t = 0. With `hard_wall_lambda` set, points
/// below the wall are redrawn from the same per-particle stream.
SampledEnsemble sample_ensemble(const EnsembleSpec& spec,
                                std::optional<double> hard_wall_lambda = std::nullopt,
                                std::size_t threads = 0);

/// Wall position lambda sin t and velocity lambda cos t.
inline double wall_position(double lambda, double t) { return lambda * std::sin(t); }
inline double wall_velocity(double lambda, double t) { return lambda * std::cos(t); }

struct BounceSearch {
  double horizon = 1.0e6;
  double residual_tol = 1.0e-12;
};

/// Free flight from `state` to the earliest later contact with the wall,
/// followed by elastic reflection in the wall frame.
std::pair<BounceEvent, ClassicalState> next_bounce(const ClassicalState& state, double lambda,
                                                   const BounceSearch& search = {});

/// Hard-wall flow to time `t_target`, counting the bounces on the way.
ClassicalState propagate_hard(ClassicalState state, double lambda, double t_target,
                              std::size_t* bounces = nullptr, const BounceSearch& search = {});

/// Force -1 + kappa V0 exp[-kappa (z - lambda sin t)], exponent clamped.
double soft_force(double z, double t, const DimensionlessParams& params,
                  double exponent_clamp = 50.0, bool* clamped = nullptr);

/// Energy p^2/2 + z + V(z, t) of the smooth mirror model.
double soft_energy(const ClassicalState& s, const DimensionlessParams& params);

/// One kick-drift-kick leapfrog step.
ClassicalState soft_step(const ClassicalState& state, const DimensionlessParams& params,
                         double dt, double exponent_clamp = 50.0,
                         std::size_t* clamped_count = nullptr);

/// Halves dt from `dt_start` until a lambda = 0 flight of duration
/// `probe_time` from `probe` conserves energy to `tolerance`.
double calibrate_soft_dt(const DimensionlessParams& params, const ClassicalState& probe,
                         double dt_start = 1.0e-3, double probe_time = 100.0,
                         double tolerance = 1.0e-6);

struct EvolveOptions {
  std::size_t threads = 0;
  double soft_dt = 1.0e-3;
  bool calibrate_dt = false;
  double exponent_clamp = 50.0;
  double p_bin_width = 0.0;  // 0: Freedman-Diaconis
  double z_bin_width = 0.0;
  BounceSearch search{};
};

struct EnsembleSeries {
  std::vector<double> sample_times;
  std::vector<double> dp;  // sqrt(<p^2> - <p>^2)
  std::vector<double> dz;
  std::vector<double> p_mean;
  std::vector<double> z_mean;
  std::vector<double> mean_bounces;
  Histogram final_p_hist;
  Histogram final_z_hist;
  std::vector<double> final_p;
  std::vector<double> final_z;
  std::size_t excluded = 0;
  std::size_t rejected = 0;
  std::size_t clamped_steps = 0;
  double soft_dt = 0.0;
};

EnsembleSeries evolve_ensemble(const EnsembleSpec& spec, const DimensionlessParams& params,
                               WallMode mode, double t_final, std::size_t n_samples,
                               const EvolveOptions& options = {});

struct SweepPoint {
  double lambda = 0.0;
  double dp = 0.0;
  double dz = 0.0;
  double mean_bounces = 0.0;
  std::size_t excluded = 0;
};

/// evolve_ensemble at each lambda; the template supplies kappa, v0, kbar.
std::vector<SweepPoint> sweep_dispersion(const EnsembleSpec& spec,
                                         const DimensionlessParams& params_template,
                                         WallMode mode, double t_final,
                                         const std::vector<double>& lambdas,
                                         const EvolveOptions& options = {});

/// Measured D = <(p_N - p_0)^2> / (2N) of the standard map
/// p' = p + K sin(theta), theta' = theta + p' (mod 2 pi).
double standard_map_diffusion(double kick, std::size_t n_particles, std::size_t n_steps,
                              std::uint64_t seed, std::size_t threads = 0);

}  // namespace fermi
