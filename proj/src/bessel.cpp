#include "fermi/bessel.hpp"

#include <cmath>
#include <string>

#include "fermi/errors.hpp"
#include "fermi/model.hpp"

namespace fermi {
namespace {

constexpr double kSeriesLimit = 8.0;
constexpr double kMaxArgument = 1.0e4;

double series(int order, double x) {
  const double half = 0.5 * x;
  const double q = -half * half;
  double term = 1.0;
  for (int k = 1; k <= order; ++k) term *= half / k;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + order));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Downward recurrence J_{n-1} = (2n/x) J_n - J_{n+1} from a start order well
// above x, normalized with J_0 + 2 sum_k J_{2k} = 1.
std::array<double, 5> miller(double x) {
  const int start = 2 * static_cast<int>((x + 20.0 + 12.0 * std::cbrt(x)) / 2.0) + 2;
  std::array<double, 5> low{};
  double next = 0.0;
  double cur = 1e-300;
  double norm = 0.0;
  for (int n = start; n > 0; --n) {
    const double prev = (2.0 * n / x) * cur - next;
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      for (double& v : low) v *= 1e-250;
    }
    const int order = n - 1;
    if (order <= 4) low[order] = cur;
    if (order > 0 && order % 2 == 0) norm += 2.0 * cur;
  }
  norm += cur;
  for (double& v : low) v /= norm;
  return low;
}

}  // namespace

std::array<double, 5> bessel_j_sequence(double x) {
  if (!std::isfinite(x) || std::abs(x) > kMaxArgument) {
    throw DomainError("bessel_j: |x| must not exceed 1e4, got " + std::to_string(x));
  }
  const double ax = std::abs(x);
  std::array<double, 5> j{};
  if (ax <= kSeriesLimit) {
    for (int n = 0; n < 5; ++n) j[n] = series(n, ax);
  } else {
    j = miller(ax);
  }
  if (x < 0.0) {
    j[1] = -j[1];
    j[3] = -j[3];
  }
  return j;
}

double bessel_j(int order, double x) {
  if (order < 0 || order > 3) {
    throw DomainError("bessel_j: order must be in 0..3, got " + std::to_string(order));
  }
  return bessel_j_sequence(x)[order];
}

}  // namespace fermi
