#pragma once

// Dimensionless model of an atom bouncing on a modulated evanescent-wave
// mirror under gravity:
//
//   H = p^2/2 + z + V0 exp[-kappa (z - lambda sin t)]
//
// plus the unit scaling from laboratory parameters, the acceleration-window
// arithmetic and the analytic diffusion law.

#include <numbers>
#include <optional>
#include <vector>

namespace fermi {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduced Planck constant [J s] (CODATA 2018, exact).
inline constexpr double kHbar = 1.054571817e-34;

/// Laboratory parameters of the modulated mirror (SI units).
struct PhysicalParams {
  double mass = 0.0;      // kg
  double gravity = 0.0;   // m/s^2
  double omega = 0.0;     // modulation angular frequency, rad/s
  double decay_k = 0.0;   // evanescent decay constant k, 1/m
  double rabi_eff = 0.0;  // effective Rabi frequency, rad/s
  double epsilon = 0.0;   // modulation amplitude

  void validate() const;
};

/// The scaled system every engine consumes.
struct DimensionlessParams {
  double lambda = 0.0;  // modulation strength
  double kappa = 4.0;   // steepness
  double v0 = 1.0;      // mirror intensity
  double kbar = 1.0;    // effective Planck constant

  void validate() const;
};

DimensionlessParams scale_params(const PhysicalParams& phys);

/// A phase-space point with time, either in SI or in scaled units.
struct PhaseSpacePoint {
  double z = 0.0;
  double p = 0.0;
  double t = 0.0;
};

/// z = z~ w^2/g, p = p~ w/(m g), t = w t~.
PhaseSpacePoint scale_state(const PhysicalParams& phys, const PhaseSpacePoint& lab);
PhaseSpacePoint unscale_state(const PhysicalParams& phys, const PhaseSpacePoint& scaled);

/// One acceleration window  s pi <= lambda < sqrt(1 + (s pi)^2).
///
/// The index s runs over the positive half-integers; it is stored doubled so
/// that it stays an exact integer.
class Window {
 public:
  explicit Window(int two_s);

  int two_s() const { return two_s_; }
  double s() const { return 0.5 * two_s_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double center() const { return 0.5 * (lo_ + hi_); }
  bool contains(double lambda) const { return lo_ <= lambda && lambda < hi_; }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  int two_s_;
  double lo_;
  double hi_;
};

/// Windows with lo <= lambda_max, ascending in s (s = 1/2, 1, 3/2, ...).
std::vector<Window> windows_up_to(double lambda_max);

/// The window containing lambda, if any.
std::optional<Window> in_window(double lambda);

/// Onset of global classical diffusion.
constexpr double classical_threshold() { return 0.24; }

/// Bessel function of the first kind J_order(x) for order 0..3, |x| <= 1e4.
double bessel_j(int order, double x);

struct DiffusionLaw {
  double d_lambda = 0.0;
  double d0 = 0.0;
  double ratio() const { return d_lambda / d0; }
};

/// Diffusion coefficient with K = 4 lambda, D0 = K^2/2 and
/// D = D0 (1/2 - J2(K) - J1(K)^2 + J2(K)^2 + J3(K)^2).
DiffusionLaw diffusion_coefficient(double lambda);

/// Same law expressed directly in the standard-map kick strength K.
DiffusionLaw diffusion_coefficient_for_kick(double kick);

}  // namespace fermi
