#include "fermi/classical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fermi {

void EnsembleSpec::validate() const {
  if (n_particles < 1) throw InvalidParameter("ensemble needs at least one particle");
  if (!(z_std >= 0.0) || !(p_std >= 0.0)) {
    throw InvalidParameter("ensemble widths must be >= 0");
  }
  if (!std::isfinite(z_mean) || !std::isfinite(p_mean)) {
    throw InvalidParameter("ensemble centers must be finite");
  }
}

SampledEnsemble sample_ensemble(const EnsembleSpec& spec, std::optional<double> hard_wall_lambda,
                                std::size_t threads) {
  spec.validate();
  // The wall sits at lambda sin(0) = 0 when sampling starts.
  const bool reject = hard_wall_lambda.has_value();
  constexpr std::size_t kMaxDraws = 1000;

  SampledEnsemble out;
  out.states.resize(spec.n_particles);
  std::vector<std::size_t> rejected(spec.n_particles, 0);
  parallel_for(spec.n_particles, threads, [&](std::size_t i) {
    ParticleStream stream(spec.seed, i);
    for (std::size_t draw = 0; draw < kMaxDraws; ++draw) {
      const auto [gz, gp] = stream.normal_pair();
      ClassicalState s{spec.z_mean + spec.z_std * gz, spec.p_mean + spec.p_std * gp, 0.0};
      if (!reject || s.z >= 0.0) {
        out.states[i] = s;
        return;
      }
      ++rejected[i];
    }
    rejected[i] = kMaxDraws;
  });

  std::size_t total_rejected = 0;
  for (std::size_t r : rejected) total_rejected += r;
  out.rejected = total_rejected;
  if (reject) {
    // Fraction above one half by more than three binomial standard errors.
    const double draws = static_cast<double>(spec.n_particles + total_rejected);
    const double rate = static_cast<double>(total_rejected) / draws;
    if (rate > 0.5 + 3.0 * std::sqrt(0.25 / draws)) {
      throw DegenerateEnsemble("ensemble rejection rate " + std::to_string(rate) +
                               " exceeds 50%: the distribution lies mostly below the wall");
    }
  }
  return out;
}

namespace {

struct Flight {
  double z0, p0, t0, lambda, gap0;

  // Height above the wall after time tau; the wall displacement is written as
  // a product so that it stays accurate for small tau.
  double gap(double tau) const {
    return gap0 + tau * (p0 - 0.5 * tau) -
           2.0 * lambda * std::cos(t0 + 0.5 * tau) * std::sin(0.5 * tau);
  }
  double gap_rate(double tau) const { return p0 - tau - lambda * std::cos(t0 + tau); }
  double height(double tau) const { return z0 + tau * (p0 - 0.5 * tau); }
  // Time at which the descending branch of the parabola passes `level`.
  double descend_to(double level) const {
    return p0 + std::sqrt(p0 * p0 + 2.0 * (z0 - level));
  }
};

}  // namespace

std::pair<BounceEvent, ClassicalState> next_bounce(const ClassicalState& state, double lambda,
                                                   const BounceSearch& search) {
  const Flight f{state.z, state.p, state.t, lambda, state.z - wall_position(lambda, state.t)};
  if (!(f.gap0 >= -1e-9 * (1.0 + std::abs(state.z)))) {
    throw InvalidParameter("next_bounce: state z = " + std::to_string(state.z) + " lies below the wall at t = " +
                           std::to_string(state.t));
  }
  const double top = std::abs(lambda);
  const double stride = std::min(0.05, kTwoPi / 128.0);

  double a = 0.0;
  double fa = std::max(f.gap0, 0.0);
  double b = 0.0;
  double fb = 0.0;
  for (;;) {
    // Above the highest wall position no contact is possible, so jump to
    // where the parabola comes back down to it.
    if (f.height(a) > top) {
      const double enter = f.descend_to(top);
      if (enter > a) {
        a = std::max(a, enter - 1e-9 * (1.0 + enter));
        fa = std::max(f.gap(a), 0.0);
      }
    }
    b = a + stride;
    if (b > search.horizon) {
      ClassicalState last{f.height(a), f.p0 - a, f.t0 + a};
      throw EscapeError("no wall contact within horizon " + std::to_string(search.horizon),
                        last);
    }
    fb = f.gap(b);
    if (fb <= 0.0) break;
    a = b;
    fa = fb;
  }

  // Bisection keeps gap(a) >= 0 > gap(b); Newton polishes inside [a, b] and
  // bisection resumes to full precision if the polish stalls.
  auto bisect = [&](double width) {
    for (int it = 0; it < 200 && b - a > width; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double fm = f.gap(mid);
      if (fm > 0.0) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
        fb = fm;
      }
    }
    return (fa < -fb) ? a : b;
  };
  double tau = bisect(1e-9);
  for (int it = 0; it < 8; ++it) {
    const double g = f.gap(tau);
    if (std::abs(g) <= 0.1 * search.residual_tol) break;
    const double d = f.gap_rate(tau);
    if (d == 0.0) break;
    const double next = tau - g / d;
    if (!(next >= a && next <= b)) break;
    tau = next;
  }
  if (std::abs(f.gap(tau)) > search.residual_tol) tau = bisect(0.0);

  BounceEvent ev;
  ev.t_impact = f.t0 + tau;
  ev.z_impact = wall_position(lambda, ev.t_impact);
  ev.p_before = f.p0 - tau;
  ev.wall_velocity = wall_velocity(lambda, ev.t_impact);
  ev.p_after = 2.0 * ev.wall_velocity - ev.p_before;
  return {ev, ClassicalState{ev.z_impact, ev.p_after, ev.t_impact}};
}

ClassicalState propagate_hard(ClassicalState state, double lambda, double t_target,
                              std::size_t* bounces, const BounceSearch& search) {
  std::size_t n = 0;
  for (;;) {
    auto [ev, after] = next_bounce(state, lambda, search);
    if (ev.t_impact > t_target) break;
    state = after;
    ++n;
  }
  const double tau = t_target - state.t;
  state = {state.z + tau * (state.p - 0.5 * tau), state.p - tau, t_target};
  if (bounces) *bounces += n;
  return state;
}

double soft_force(double z, double t, const DimensionlessParams& params, double exponent_clamp,
                  bool* clamped) {
  double arg = -params.kappa * (z - params.lambda * std::sin(t));
  if (arg > exponent_clamp) {
    arg = exponent_clamp;
    if (clamped) *clamped = true;
  }
  return -1.0 + params.kappa * params.v0 * std::exp(arg);
}

double soft_energy(const ClassicalState& s, const DimensionlessParams& params) {
  return 0.5 * s.p * s.p + s.z +
         params.v0 * std::exp(-params.kappa * (s.z - params.lambda * std::sin(s.t)));
}

ClassicalState soft_step(const ClassicalState& state, const DimensionlessParams& params,
                         double dt, double exponent_clamp, std::size_t* clamped_count) {
  if (!(dt > 0.0)) throw InvalidParameter("soft_step: dt must be > 0");
  bool clamped = false;
  const double half = 0.5 * dt;
  const double p_half = state.p + half * soft_force(state.z, state.t, params, exponent_clamp,
                                                    &clamped);
  const double z_new = state.z + dt * p_half;
  const double t_new = state.t + dt;
  const double p_new = p_half + half * soft_force(z_new, t_new, params, exponent_clamp, &clamped);
  if (clamped && clamped_count) ++*clamped_count;
  if (!std::isfinite(z_new) || !std::isfinite(p_new)) {
    throw BlowupError("soft integrator produced a non-finite state at t = " +
                          std::to_string(t_new),
                      state);
  }
  return {z_new, p_new, t_new};
}

double calibrate_soft_dt(const DimensionlessParams& params, const ClassicalState& probe,
                         double dt_start, double probe_time, double tolerance) {
  DimensionlessParams still = params;
  still.lambda = 0.0;
  double dt = dt_start;
  for (int halving = 0; halving < 12; ++halving, dt *= 0.5) {
    ClassicalState s = probe;
    s.t = 0.0;
    const double e0 = soft_energy(s, still);
    const auto steps = static_cast<std::size_t>(std::llround(probe_time / dt));
    double worst = 0.0;
    for (std::size_t i = 0; i < steps && worst <= tolerance; ++i) {
      s = soft_step(s, still, dt);
      worst = std::max(worst, std::abs(soft_energy(s, still) - e0));
    }
    if (worst <= tolerance) return dt;
  }
  return dt;
}

namespace {

struct Track {
  std::vector<double> z, p, n;
  bool failed = false;
};

Track track_hard(ClassicalState s, double lambda, const std::vector<double>& times,
                 const BounceSearch& search) {
  Track tr;
  tr.z.reserve(times.size());
  tr.p.reserve(times.size());
  tr.n.reserve(times.size());
  std::size_t k = 0;
  double bounces = 0.0;
  try {
    while (k < times.size()) {
      auto [ev, after] = next_bounce(s, lambda, search);
      while (k < times.size() && times[k] < ev.t_impact) {
        const double tau = times[k] - s.t;
        tr.z.push_back(s.z + tau * (s.p - 0.5 * tau));
        tr.p.push_back(s.p - tau);
        tr.n.push_back(bounces);
        ++k;
      }
      s = after;
      bounces += 1.0;
    }
  } catch (const EscapeError&) {
    tr.failed = true;
  }
  return tr;
}

Track track_soft(ClassicalState s, const DimensionlessParams& params,
                 const std::vector<double>& times, double dt, double clamp,
                 std::size_t& clamped) {
  Track tr;
  double bounces = 0.0;
  try {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double span = times[k] - s.t;
      if (span > 0.0) {
        const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
        const double h = span / static_cast<double>(steps);
        for (std::size_t i = 0; i < steps; ++i) {
          const double before = s.p;
          s = soft_step(s, params, h, clamp, &clamped);
          if (before < 0.0 && s.p >= 0.0) bounces += 1.0;
        }
        s.t = times[k];
      }
      tr.z.push_back(s.z);
      tr.p.push_back(s.p);
      tr.n.push_back(bounces);
    }
  } catch (const BlowupError&) {
    tr.failed = true;
  }
  return tr;
}

}  // namespace

EnsembleSeries evolve_ensemble(const EnsembleSpec& spec, const DimensionlessParams& params,
                               WallMode mode, double t_final, std::size_t n_samples,
                               const EvolveOptions& options) {
  params.validate();
  if (!(t_final > 0.0)) throw InvalidParameter("t_final must be > 0");
  if (n_samples < 2) throw InvalidParameter("n_samples must be >= 2");
  if (mode == WallMode::soft && !(params.v0 > 0.0)) {
    throw InvalidParameter("soft mode requires v0 > 0");
  }

  const bool hard = mode == WallMode::hard;
  SampledEnsemble initial =
      sample_ensemble(spec, hard ? std::optional<double>(params.lambda) : std::nullopt,
                      options.threads);

  EnsembleSeries out;
  out.rejected = initial.rejected;
  out.sample_times.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    out.sample_times[k] = t_final * static_cast<double>(k) / static_cast<double>(n_samples - 1);
  }

  double dt = options.soft_dt;
  if (!hard && options.calibrate_dt) {
    dt = calibrate_soft_dt(params, {spec.z_mean, spec.p_mean, 0.0}, dt);
  }
  out.soft_dt = hard ? 0.0 : dt;

  const std::size_t n = spec.n_particles;
  // Column per particle, row per sample time.
  Eigen::MatrixXd z(n_samples, n), p(n_samples, n), bounces(n_samples, n);
  std::vector<char> failed(n, 0);
  std::vector<std::size_t> clamped(n, 0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    Track tr = hard ? track_hard(initial.states[i], params.lambda, out.sample_times,
                                 options.search)
                    : track_soft(initial.states[i], params, out.sample_times, dt,
                                 options.exponent_clamp, clamped[i]);
    if (tr.failed) {
      failed[i] = 1;
      return;
    }
    z.col(i) = Eigen::Map<const Eigen::VectorXd>(tr.z.data(), n_samples);
    p.col(i) = Eigen::Map<const Eigen::VectorXd>(tr.p.data(), n_samples);
    bounces.col(i) = Eigen::Map<const Eigen::VectorXd>(tr.n.data(), n_samples);
  });

  std::vector<std::size_t> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      ++out.excluded;
    } else {
      kept.push_back(i);
    }
    out.clamped_steps += clamped[i];
  }
  if (kept.empty()) throw NumericalError("every trajectory failed");

  std::vector<double> zs(kept.size()), ps(kept.size()), ns(kept.size());
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      zs[j] = z(k, kept[j]);
      ps[j] = p(k, kept[j]);
      ns[j] = bounces(k, kept[j]);
    }
    const Moments mz = moments(zs);
    const Moments mp = moments(ps);
    out.z_mean.push_back(mz.mean);
    out.dz.push_back(mz.stddev());
    out.p_mean.push_back(mp.mean);
    out.dp.push_back(mp.stddev());
    out.mean_bounces.push_back(pairwise_sum(ns) / static_cast<double>(ns.size()));
  }
  out.final_p = ps;
  out.final_z = zs;
  out.final_p_hist = make_histogram(out.final_p, options.p_bin_width);
  out.final_z_hist = make_histogram(out.final_z, options.z_bin_width);
  return out;
}

std::vector<SweepPoint> sweep_dispersion(const EnsembleSpec& spec,
                                         const DimensionlessParams& params_template,
                                         WallMode mode, double t_final,
                                         const std::vector<double>& lambdas,
                                         const EvolveOptions& options) {
  if (lambdas.empty()) throw InvalidParameter("sweep needs at least one lambda");
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
    throw InvalidParameter("sweep lambdas must be ascending");
  }
  std::vector<SweepPoint> out(lambdas.size());
  // Parallel over lambda; each ensemble runs on a single worker.
  EvolveOptions inner = options;
  inner.threads = 1;
  parallel_for(lambdas.size(), options.threads, [&](std::size_t i) {
    DimensionlessParams params = params_template;
    params.lambda = lambdas[i];
    const EnsembleSeries series = evolve_ensemble(spec, params, mode, t_final, 2, inner);
    out[i] = {lambdas[i], series.dp.back(), series.dz.back(), series.mean_bounces.back(),
              series.excluded};
  });
  return out;
}

double standard_map_diffusion(double kick, std::size_t n_particles, std::size_t n_steps,
                              std::uint64_t seed, std::size_t threads) {
  if (!(kick >= 0.0)) throw InvalidParameter("kick strength must be >= 0");
  if (n_steps < 100) throw InvalidParameter("standard map needs at least 100 steps");
  if (n_particles < 1) throw InvalidParameter("standard map needs particles");
  std::vector<double> squared(n_particles);
  parallel_for(n_particles, threads, [&](std::size_t i) {
    ParticleStream stream(seed, i);
    double theta = kTwoPi * (1.0 - stream.uniform());
    const double p0 = kTwoPi * (1.0 - stream.uniform());
    double p = p0;
    for (std::size_t n = 0; n < n_steps; ++n) {
      p += kick * std::sin(theta);
      theta = std::fmod(theta + p, kTwoPi);
      if (theta < 0.0) theta += kTwoPi;
    }
    const double d = p - p0;
    squared[i] = d * d;
  });
  return pairwise_sum(squared) /
         (2.0 * static_cast<double>(n_steps) * static_cast<double>(n_particles));
}

}  // namespace fermi
