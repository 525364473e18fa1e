#include <doctest.h>

#include <cmath>
#include <random>

#include "fermi/errors.hpp"
#include "fermi/model.hpp"

using namespace fermi;

namespace {

// Power series for J_n, summed in long double.
double series_j(int n, double x) {
  long double term = 1.0L;
  for (int k = 1; k <= n; ++k) term *= static_cast<long double>(x) / (2.0L * k);
  long double sum = term;
  const long double q = -static_cast<long double>(x) * x / 4.0L;
  for (int k = 1; k < 80; ++k) {
    term *= q / (static_cast<long double>(k) * (k + n));
    sum += term;
  }
  return static_cast<double>(sum);
}

double law_ratio(double k) {
  const double j1 = std::cyl_bessel_j(1.0, k), j2 = std::cyl_bessel_j(2.0, k), j3 = std::cyl_bessel_j(3.0, k);
  return 0.5 - j2 - j1 * j1 + j2 * j2 + j3 * j3;
}

PhysicalParams cesium() {
  PhysicalParams p;
  p.mass = 2.2e-25;
  p.gravity = 9.8;
  p.omega = 5850.0;
  p.decay_k = 1.0 / 0.55e-6;
  p.rabi_eff = 1.0e7;
  p.epsilon = 1.0e-6;
  return p;
}

}  // namespace

TEST_CASE("windows up to 5") {
  const auto ws = windows_up_to(5.0);
  REQUIRE(ws.size() == 3);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const double s = 0.5 * static_cast<double>(i + 1);
    CHECK(ws[i].s() == s);
    CHECK(std::abs(ws[i].lo() - s * kPi) < 1e-12);
    CHECK(std::abs(ws[i].hi() - std::sqrt(1.0 + s * s * kPi * kPi)) < 1e-12);
    CHECK(std::abs(ws[i].hi() * ws[i].hi() - ws[i].lo() * ws[i].lo() - 1.0) < 1e-12);
  }
  CHECK(ws[0].lo() == doctest::Approx(1.570796).epsilon(1e-6));
  CHECK(ws[0].hi() == doctest::Approx(1.862096).epsilon(1e-6));
  CHECK(ws[1].hi() == doctest::Approx(3.296908).epsilon(1e-6));
  CHECK(ws[2].hi() == doctest::Approx(4.817324).epsilon(1e-6));
  CHECK(windows_up_to(1.0).empty());
}

TEST_CASE("window membership") {
  REQUIRE(in_window(1.7));
  CHECK(in_window(1.7)->s() == 0.5);
  CHECK_FALSE(in_window(2.4));
  REQUIRE(in_window(1.5 * kPi));
  CHECK(in_window(1.5 * kPi)->s() == 1.5);
  CHECK_FALSE(in_window(classical_threshold()));
  CHECK(classical_threshold() == 0.24);
  CHECK(classical_threshold() < windows_up_to(2.0).front().lo());
  for (const Window& w : windows_up_to(10.0 * kPi)) {
    REQUIRE(in_window(w.center()));
    CHECK(*in_window(w.center()) == w);
    CHECK_FALSE(w.contains(w.hi()));
    CHECK(w.contains(w.lo()));
  }
}

TEST_CASE("lambda_m of the first window") {
  const double s = 0.5;
  const double expected = 0.5 * (s * kPi + std::sqrt(1.0 + s * s * kPi * kPi));
  CHECK(std::abs(Window(1).center() - expected) < 1e-14);
  CHECK(std::abs(Window(1).center() - 1.71645) < 1e-5);
}

TEST_CASE("bessel against the power series") {
  CHECK(bessel_j(0, 0.0) == 1.0);
  for (int n = 1; n <= 3; ++n) CHECK(bessel_j(n, 0.0) == 0.0);
  CHECK(bessel_j(1, 4.0) == doctest::Approx(-0.066043).epsilon(1e-5));
  CHECK(bessel_j(2, 4.0) == doctest::Approx(0.364128).epsilon(1e-5));
  CHECK(bessel_j(3, 4.0) == doctest::Approx(0.430171).epsilon(1e-5));
  for (int n = 0; n <= 3; ++n) {
    for (double x : {0.1, 0.5, 1.0, 2.5, 4.0, 7.3, 12.0, 18.0}) {
      CHECK(std::abs(bessel_j(n, x) - series_j(n, x)) < 1e-10);
      CHECK(std::abs(bessel_j(n, -x) - ((n % 2) ? -1.0 : 1.0) * series_j(n, x)) < 1e-10);
    }
  }
}

TEST_CASE("bessel at large argument agrees with the standard library") {
  for (int n = 0; n <= 3; ++n) {
    for (double x : {25.0, 50.0, 100.0, 400.0, 1000.0, 9999.0}) {
      CHECK(std::abs(bessel_j(n, x) - std::cyl_bessel_j(static_cast<double>(n), x)) < 1e-9);
    }
  }
}

TEST_CASE("bessel recurrence") {
  for (double x = 0.5; x <= 50.0; x += 0.37) {
    for (int n : {1, 2}) {
      const double lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
      CHECK(std::abs(lhs - 2.0 * n / x * bessel_j(n, x)) < 1e-8);
    }
  }
}

TEST_CASE("bessel rejects out-of-range input") {
  CHECK_THROWS_AS(bessel_j(4, 1.0), DomainError);
  CHECK_THROWS_AS(bessel_j(-1, 1.0), DomainError);
  CHECK_THROWS_AS(bessel_j(1, 2.0e4), DomainError);
  CHECK_THROWS_AS(bessel_j(1, std::nan("")), DomainError);
}

TEST_CASE("diffusion law") {
  const DiffusionLaw d1 = diffusion_coefficient(1.0);
  CHECK(d1.d0 == 8.0);
  CHECK(d1.ratio() == doctest::Approx(0.44915).epsilon(1e-4));
  CHECK(d1.ratio() == doctest::Approx(law_ratio(4.0)).epsilon(1e-10));
  for (double lam : {0.3, 1.7, 2.4, 3.0, 12.5}) {
    const DiffusionLaw d = diffusion_coefficient(lam);
    CHECK(d.d0 == doctest::Approx(8.0 * lam * lam).epsilon(1e-15));
    CHECK(d.ratio() == doctest::Approx(law_ratio(4.0 * lam)).epsilon(1e-9));
    CHECK(std::abs(diffusion_coefficient(lam + 1e-9).d_lambda - d.d_lambda) < 1e-5);
  }
  CHECK(std::abs(diffusion_coefficient_for_kick(400.0).ratio() - 0.5) < 0.05);
  CHECK(diffusion_coefficient_for_kick(12.0).d_lambda == doctest::Approx(diffusion_coefficient(3.0).d_lambda));
}

TEST_CASE("scaling of laboratory parameters") {
  const PhysicalParams p = cesium();
  const DimensionlessParams d = scale_params(p);
  const double expected_kbar = kHbar * std::pow(5850.0, 3) / (2.2e-25 * 9.8 * 9.8);
  CHECK(d.kbar == doctest::Approx(expected_kbar).epsilon(1e-14));
  CHECK(std::abs(d.kbar - 1.0) < 0.01);
  CHECK(d.kappa == doctest::Approx(2.0 * p.decay_k * 9.8 / (5850.0 * 5850.0)).epsilon(1e-14));
  CHECK(d.lambda == doctest::Approx(5850.0 * 5850.0 * 1e-6 / (2.0 * p.decay_k * 9.8)).epsilon(1e-14));

  PhysicalParams flat = p;
  flat.epsilon = 0.0;
  const DimensionlessParams d0 = scale_params(flat);
  CHECK(d0.lambda == 0.0);
  CHECK(d0.kappa == d.kappa);
  CHECK(d0.v0 == d.v0);
  CHECK(d0.kbar == d.kbar);

  PhysicalParams bad = p;
  bad.mass = 0.0;
  CHECK_THROWS_AS(scale_params(bad), InvalidParameter);
  bad = p;
  bad.omega = -1.0;
  CHECK_THROWS_AS(scale_params(bad), InvalidParameter);
}

TEST_CASE("state scaling") {
  PhysicalParams p = cesium();
  p.omega = 6283.0;
  const PhaseSpacePoint s = scale_state(p, {1e-6, 0.0, 0.0});
  CHECK(s.z == doctest::Approx(1e-6 * 6283.0 * 6283.0 / 9.8).epsilon(1e-14));
  CHECK(s.z == doctest::Approx(4.028).epsilon(1e-3));
  const PhaseSpacePoint zero = scale_state(p, {0.0, 0.0, 0.0});
  CHECK(zero.z == 0.0);
  CHECK(zero.p == 0.0);
  CHECK(zero.t == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const PhaseSpacePoint lab{1e-5 * u(rng), 1e-27 * u(rng), 1e-2 * u(rng)};
    const PhaseSpacePoint back = unscale_state(p, scale_state(p, lab));
    CHECK(std::abs(back.z - lab.z) <= 1e-12 * std::abs(lab.z));
    CHECK(std::abs(back.p - lab.p) <= 1e-12 * std::abs(lab.p));
    CHECK(std::abs(back.t - lab.t) <= 1e-12 * std::abs(lab.t));
  }
}
