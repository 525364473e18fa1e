#include "fermi/model.hpp"

#include <cmath>
#include <string>

#include "fermi/bessel.hpp"
#include "fermi/errors.hpp"

namespace fermi {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be finite and > 0, got " +
                           std::to_string(value));
  }
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be finite and >= 0, got " +
                           std::to_string(value));
  }
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(mass, "mass");
  require_positive(gravity, "gravity");
  require_positive(omega, "omega");
  require_positive(decay_k, "decay_k");
  require_positive(rabi_eff, "rabi_eff");
  require_nonnegative(epsilon, "epsilon");
}

void DimensionlessParams::validate() const {
  require_nonnegative(lambda, "lambda");
  require_positive(kappa, "kappa");
  require_nonnegative(v0, "v0");
  require_positive(kbar, "kbar");
}

DimensionlessParams scale_params(const PhysicalParams& phys) {
  phys.validate();
  const double w2 = phys.omega * phys.omega;
  const double g = phys.gravity;
  const double m = phys.mass;
  DimensionlessParams out;
  out.lambda = w2 * phys.epsilon / (2.0 * phys.decay_k * g);
  out.kappa = 2.0 * phys.decay_k * g / w2;
  out.v0 = kHbar * w2 * phys.rabi_eff / (4.0 * m * g * g);
  out.kbar = kHbar * w2 * phys.omega / (m * g * g);
  return out;
}

PhaseSpacePoint scale_state(const PhysicalParams& phys, const PhaseSpacePoint& lab) {
  const double w = phys.omega;
  return {lab.z * w * w / phys.gravity, lab.p * w / (phys.mass * phys.gravity), lab.t * w};
}

PhaseSpacePoint unscale_state(const PhysicalParams& phys, const PhaseSpacePoint& scaled) {
  const double w = phys.omega;
  return {scaled.z * phys.gravity / (w * w), scaled.p * phys.mass * phys.gravity / w,
          scaled.t / w};
}

Window::Window(int two_s) : two_s_(two_s) {
  if (two_s < 1) throw InvalidParameter("window index s must be >= 1/2");
  lo_ = s() * kPi;
  hi_ = std::sqrt(1.0 + lo_ * lo_);
}

std::vector<Window> windows_up_to(double lambda_max) {
  if (!(lambda_max > 0.0)) throw InvalidParameter("lambda_max must be > 0");
  std::vector<Window> out;
  for (int two_s = 1;; ++two_s) {
    Window w(two_s);
    if (w.lo() > lambda_max) break;
    out.push_back(w);
  }
  return out;
}

std::optional<Window> in_window(double lambda) {
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be >= 0");
  const int guess = static_cast<int>(std::floor(2.0 * lambda / kPi));
  // The floor may land one below the true index at an exact lower edge.
  for (int two_s = std::max(guess, 1); two_s <= guess + 1; ++two_s) {
    Window w(two_s);
    if (w.contains(lambda)) return w;
  }
  return std::nullopt;
}

DiffusionLaw diffusion_coefficient_for_kick(double kick) {
  const auto j = bessel_j_sequence(kick);
  const double bracket = 0.5 - j[2] - j[1] * j[1] + j[2] * j[2] + j[3] * j[3];
  const double d0 = 0.5 * kick * kick;
  return {d0 * bracket, d0};
}

DiffusionLaw diffusion_coefficient(double lambda) {
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
  return diffusion_coefficient_for_kick(4.0 * lambda);
}

}  // namespace fermi
