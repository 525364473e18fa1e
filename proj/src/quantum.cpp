#include "fermi/quantum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

namespace fermi {
namespace {

using cplx = std::complex<double>;

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer fftw_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer(p);
}

// FFTW_ESTIMATE keeps the chosen algorithm, and so the rounding, identical
// from run to run.
class FftPlan {
 public:
  FftPlan(std::size_t n, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("FFTW could not create a plan of size " + std::to_string(n));
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

Eigen::Map<Eigen::ArrayXcd> view(fftw_complex* p, std::size_t n) {
  return {reinterpret_cast<cplx*>(p), static_cast<Eigen::Index>(n)};
}

double wall_phase_sin(double t) { return std::sin(std::remainder(t, kTwoPi)); }

// Mean and variance of p from an FFT-ordered transform.
std::pair<double, double> spectral_moments(const Eigen::ArrayXcd& spectrum,
                                           const Eigen::ArrayXd& p) {
  const Eigen::ArrayXd w = spectrum.abs2();
  const double total = w.sum();
  if (!(total > 0.0)) return {0.0, 0.0};
  const double mean = (w * p).sum() / total;
  const double var = (w * (p - mean).square()).sum() / total;
  return {mean, var};
}

}  // namespace

SpatialGrid::SpatialGrid(double z_min, double z_max, std::size_t n_points)
    : z_min_(z_min), z_max_(z_max), n_(n_points) {
  if (!(z_max > z_min) || !std::isfinite(z_min) || !std::isfinite(z_max)) {
    throw InvalidParameter("grid needs z_max > z_min, got [" + std::to_string(z_min) + ", " +
                           std::to_string(z_max) + "]");
  }
  if (n_points < 256 || !std::has_single_bit(n_points)) {
    throw InvalidParameter("grid n_points must be a power of two >= 256, got " +
                           std::to_string(n_points));
  }
}

Eigen::ArrayXd SpatialGrid::momentum_nodes(double kbar) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::ArrayXd p(n);
  const double step = dp(kbar);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index k = j < n / 2 ? j : j - n;
    p[j] = step * static_cast<double>(k);
  }
  return p;
}

Eigen::ArrayXd SpatialGrid::positions() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::ArrayXd z(n);
  for (Eigen::Index j = 0; j < n; ++j) z[j] = this->z(static_cast<std::size_t>(j));
  return z;
}

double Wavefunction::norm() const { return amplitudes.abs2().sum() * grid.dz(); }

void PropagatorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
  if (!(exponent_clamp > 0.0)) throw InvalidParameter("exponent_clamp must be positive");
  if (absorber) {
    if (!(absorber->frac > 0.0 && absorber->frac < 0.5)) {
      throw InvalidParameter("absorber frac must lie in (0, 0.5), got " +
                             std::to_string(absorber->frac));
    }
    if (!(absorber->strength > 0.0)) throw InvalidParameter("absorber strength must be positive");
  }
  if (sample_stride == 0) throw InvalidParameter("sample_stride must be at least 1");
}

Wavefunction init_gaussian(const SpatialGrid& grid, double z_mean, double p_mean, double z_std,
                           double kbar) {
  if (!(z_std > 0.0)) throw InvalidParameter("packet z_std must be positive");
  if (!(kbar > 0.0)) throw InvalidParameter("kbar must be positive");
  if (z_mean - 5.0 * z_std < grid.z_min() || z_mean + 5.0 * z_std > grid.z_max()) {
    throw GridTooSmall("packet z = " + std::to_string(z_mean) + " +- 5*" + std::to_string(z_std) +
                       " leaves the grid [" + std::to_string(grid.z_min()) + ", " +
                       std::to_string(grid.z_max()) + "]");
  }
  const Eigen::ArrayXd z = grid.positions();
  const Eigen::ArrayXd u = z - z_mean;
  Eigen::ArrayXcd amp(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    amp[j] = std::polar(std::exp(-u[j] * u[j] / (4.0 * z_std * z_std)), p_mean * z[j] / kbar);
  }
  Wavefunction psi{std::move(amp), grid, 0.0, 0.0};
  psi.amplitudes /= std::sqrt(psi.norm());
  return psi;
}

double potential(double z, double t, const DimensionlessParams& params, double clamp,
                 bool gravity) {
  const double arg = std::min(-params.kappa * (z - params.lambda * wall_phase_sin(t)), clamp);
  return (gravity ? z : 0.0) + params.v0 * std::exp(arg);
}

struct SplitOperator::Impl {
  SpatialGrid grid;
  DimensionlessParams params;
  PropagatorConfig cfg;
  std::size_t n;
  FftwBuffer buf;
  FftPlan forward;
  FftPlan backward;
  Eigen::ArrayXd z;
  Eigen::ArrayXcd gravity_half;  // exp(-i z dt / 2 kbar)
  Eigen::ArrayXcd kinetic;       // exp(-i p^2 dt / 2 kbar) / n
  Eigen::Index mirror_end = 0;   // mirror phase is 1 to double precision beyond this
  Eigen::ArrayXcd mirror_half;
  std::vector<std::pair<Eigen::Index, double>> mask;  // (index, m) inside the absorbing layers
  double t0 = 0.0;
  double phase0 = 0.0;  // t0 reduced mod 2 pi: a 2 pi shift of t0 leaves the drive bit-identical
  std::size_t steps = 0;

  Impl(const SpatialGrid& g, const DimensionlessParams& p, const PropagatorConfig& c)
      : grid(g),
        params(p),
        cfg(c),
        n(g.size()),
        buf(fftw_buffer(g.size())),
        forward(g.size(), buf.get(), buf.get(), FFTW_FORWARD),
        backward(g.size(), buf.get(), buf.get(), FFTW_BACKWARD),
        z(g.positions()) {
    const double half = 0.5 * cfg.dt / params.kbar;
    gravity_half = Eigen::ArrayXcd::Ones(z.size());
    if (cfg.gravity) {
      for (Eigen::Index j = 0; j < z.size(); ++j) gravity_half[j] = std::polar(1.0, -z[j] * half);
    }
    const Eigen::ArrayXd pj = grid.momentum_nodes(params.kbar);
    kinetic.resize(pj.size());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index j = 0; j < pj.size(); ++j) {
      kinetic[j] = std::polar(inv_n, -pj[j] * pj[j] * half);
    }
    // Beyond z_cut the half-step mirror phase is below 1e-20.
    if (params.v0 > 0.0) {
      const double z_cut = std::abs(params.lambda) + (std::log(params.v0 * half) + 46.0) / params.kappa;
      while (mirror_end < z.size() && z[mirror_end] < z_cut) ++mirror_end;
    }
    mirror_half.resize(mirror_end);
    if (cfg.absorber) {
      const double width = cfg.absorber->frac * grid.length();
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double depth = std::min(z[j] - grid.z_min(), grid.z_max() - z[j]);
        if (depth < width) {
          const double m = std::pow(std::cos(0.5 * kPi * (1.0 - depth / width)), cfg.absorber->strength);
          mask.emplace_back(j, m);
        }
      }
    }
  }

  void potential_half(Eigen::Map<Eigen::ArrayXcd>& psi) {
    psi *= gravity_half;
    psi.head(mirror_end) *= mirror_half;
  }

  void update_mirror(double t_mid) {
    const double wall = params.lambda * wall_phase_sin(t_mid);
    const double half = 0.5 * cfg.dt / params.kbar;
    for (Eigen::Index j = 0; j < mirror_end; ++j) {
      const double arg = std::min(-params.kappa * (z[j] - wall), cfg.exponent_clamp);
      mirror_half[j] = std::polar(1.0, -params.v0 * std::exp(arg) * half);
    }
  }
};

SplitOperator::SplitOperator(const SpatialGrid& grid, const DimensionlessParams& params,
                             const PropagatorConfig& cfg) {
  params.validate();
  cfg.validate();
  impl_ = std::make_unique<Impl>(grid, params, cfg);
}

SplitOperator::~SplitOperator() = default;

void SplitOperator::load(const Wavefunction& psi) {
  if (psi.grid.size() != impl_->n || psi.grid.z_min() != impl_->grid.z_min() ||
      psi.grid.z_max() != impl_->grid.z_max()) {
    throw InvalidParameter("wavefunction grid differs from the propagator grid");
  }
  view(impl_->buf.get(), impl_->n) = psi.amplitudes;
  impl_->t0 = psi.t;
  impl_->phase0 = std::remainder(psi.t, kTwoPi);
  impl_->steps = 0;
  t_ = psi.t;
  absorbed_ = psi.absorbed_norm;
  norm_ = psi.norm();
}

Wavefunction SplitOperator::snapshot() const {
  return Wavefunction{Eigen::ArrayXcd(view(impl_->buf.get(), impl_->n)), impl_->grid, t_, absorbed_};
}

void SplitOperator::step() {
  Impl& s = *impl_;
  auto psi = view(s.buf.get(), s.n);
  s.update_mirror(s.phase0 + (static_cast<double>(s.steps) + 0.5) * s.cfg.dt);
  s.potential_half(psi);
  s.forward.execute();
  psi *= s.kinetic;
  s.backward.execute();
  s.potential_half(psi);

  const double dz = s.grid.dz();
  const double n1 = psi.abs2().sum() * dz;
  if (!std::isfinite(n1) || std::abs(n1 - norm_) > 1e-6) {
    throw InstabilityError("norm jumped from " + std::to_string(norm_) + " to " +
                           std::to_string(n1) + " in one step at t = " + std::to_string(t_));
  }
  double removed = 0.0;
  for (const auto& [j, m] : s.mask) {
    removed += std::norm(psi[j]) * (1.0 - m * m);
    psi[j] *= m;
  }
  removed *= dz;
  norm_ = n1 - removed;
  absorbed_ += removed;
  ++s.steps;
  t_ = s.t0 + static_cast<double>(s.steps) * s.cfg.dt;
}

Wavefunction split_step(const Wavefunction& psi, const DimensionlessParams& params,
                        const PropagatorConfig& cfg) {
  SplitOperator op(psi.grid, params, cfg);
  op.load(psi);
  op.step();
  return op.snapshot();
}

PositionMoments position_moments(const Wavefunction& psi) {
  const Eigen::ArrayXd w = psi.amplitudes.abs2();
  const Eigen::ArrayXd z = psi.grid.positions();
  PositionMoments m;
  const double total = w.sum();
  m.norm = total * psi.grid.dz();
  if (!(total > 0.0)) return m;
  m.mean = (w * z).sum() / total;
  m.stddev = std::sqrt((w * (z - m.mean).square()).sum() / total);
  return m;
}

namespace {

Eigen::ArrayXcd spectrum(const Wavefunction& psi) {
  const std::size_t n = psi.grid.size();
  FftwBuffer in = fftw_buffer(n);
  FftwBuffer out = fftw_buffer(n);
  FftPlan plan(n, in.get(), out.get(), FFTW_FORWARD);
  view(in.get(), n) = psi.amplitudes;
  plan.execute();
  return view(out.get(), n);
}

}  // namespace

MomentumDensity momentum_density(const Wavefunction& psi, double kbar) {
  if (!(kbar > 0.0)) throw InvalidParameter("kbar must be positive");
  const Eigen::ArrayXcd spec = spectrum(psi);
  const Eigen::ArrayXd p = psi.grid.momentum_nodes(kbar);
  const auto n = static_cast<Eigen::Index>(psi.grid.size());
  // sum |c_j|^2 = n sum |psi_k|^2, so this density integrates to the norm.
  const double scale = psi.grid.dz() / (static_cast<double>(n) * psi.grid.dp(kbar));
  MomentumDensity out;
  out.p.resize(static_cast<std::size_t>(n));
  out.density.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = (k + n / 2) % n;  // ascending p
    out.p[static_cast<std::size_t>(k)] = p[j];
    out.density[static_cast<std::size_t>(k)] = std::norm(spec[j]) * scale;
  }
  return out;
}

double MomentumDensity::mean() const {
  double w = 0.0, s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    w += density[i];
    s += density[i] * p[i];
  }
  return w > 0.0 ? s / w : 0.0;
}

double MomentumDensity::variance() const {
  const double m = mean();
  double w = 0.0, s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    w += density[i];
    s += density[i] * (p[i] - m) * (p[i] - m);
  }
  return w > 0.0 ? s / w : 0.0;
}

QuantumSeries evolve_quantum(const Wavefunction& psi0, const DimensionlessParams& params,
                             const PropagatorConfig& cfg, double t_final) {
  if (!(t_final > 0.0)) throw InvalidParameter("t_final must be positive");
  SplitOperator op(psi0.grid, params, cfg);
  op.load(psi0);
  const Eigen::ArrayXd p_nodes = psi0.grid.momentum_nodes(params.kbar);
  const auto total_steps = static_cast<std::size_t>(std::llround(t_final / cfg.dt));

  QuantumSeries series;
  auto sample = [&] {
    const Wavefunction psi = op.snapshot();
    const PositionMoments zm = position_moments(psi);
    const auto [pm, pv] = spectral_moments(spectrum(psi), p_nodes);
    series.t.push_back(op.t());
    series.norm.push_back(zm.norm);
    series.z_mean.push_back(zm.mean);
    series.dz.push_back(zm.stddev);
    series.p_mean.push_back(pm);
    series.dp2.push_back(pv);
    series.absorbed.push_back(op.absorbed());
  };

  sample();
  for (std::size_t k = 1; k <= total_steps; ++k) {
    op.step();
    if (k % cfg.sample_stride == 0 || k == total_steps) sample();
  }
  series.steps = total_steps;
  series.final_momentum = momentum_density(op.snapshot(), params.kbar);
  series.absorber_warning = op.absorbed() > 0.2;
  return series;
}

SpatialGrid auto_grid(const DimensionlessParams& params, const PacketSpec& packet, double t_final,
                      const PropagatorConfig& cfg, std::size_t min_points) {
  params.validate();
  if (!(t_final > 0.0)) throw InvalidParameter("t_final must be positive");
  if (!(packet.z_std > 0.0)) throw InvalidParameter("packet z_std must be positive");
  const double lam = std::abs(params.lambda);
  const double energy = 0.5 * packet.p_mean * packet.p_mean + std::max(packet.z_mean, 0.0);
  const double p_spread = 5.0 * params.kbar / (2.0 * packet.z_std);
  const double p_top = std::sqrt(2.0 * energy) + p_spread + std::sqrt(2.0 * lam * t_final);
  const double z_top = std::max(0.5 * p_top * p_top + lam, packet.z_mean) + 5.0 * packet.z_std;
  // Where the clamped mirror already exceeds the largest kinetic energy.
  const double z_floor =
      std::min(-lam - std::log(std::max(1.0, 0.5 * p_top * p_top / params.v0) + 1.0) / params.kappa - 2.0,
               packet.z_mean - 5.0 * packet.z_std);
  const double frac = cfg.absorber ? cfg.absorber->frac : 0.0;
  const double length = (z_top - z_floor) / (1.0 - 2.0 * frac);
  const double z_min = z_floor - frac * length;
  const double needed = 2.0 * p_top * length / (kPi * params.kbar);
  std::size_t n = std::max<std::size_t>(min_points, 256);
  n = std::bit_ceil(n);
  while (static_cast<double>(n) < needed) n *= 2;
  return SpatialGrid(z_min, z_min + length, n);
}

}  // namespace fermi
