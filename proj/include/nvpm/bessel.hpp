#pragma once

// Bessel functions of the first kind J_n(x) for integer order.

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace nvpm::special {

namespace detail {

/// Σ_k (−1)^k (x/2)^{2k+n} / (k!(k+n)!) for 0 ≤ x ≤ 2.
inline double bessel_series(int n, double x) {
  const double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;
  double sum = term;
  const double q = -half * half;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + n));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

/// Miller's backward recurrence normalised by J₀ + 2Σ J_{2k} = 1.
inline double bessel_miller(int n, double x) {
  const int top = 2 * ((std::max(n, static_cast<int>(x)) + 20 + static_cast<int>(std::sqrt(60.0 * std::max(n, static_cast<int>(x))))) / 2);
  double next = 0.0;  // J_{k+1}
  double cur = 1e-30; // J_k
  double result = 0.0;
  double norm = 0.0;
  for (int k = top; k > 0; --k) {
    const double prev = 2.0 * k / x * cur - next;  // J_{k−1}
    next = cur;
    cur = prev;
    if (k - 1 == n) result = cur;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      result *= 1e-250;
      norm *= 1e-250;
    }
  }
  norm += cur;  // J₀
  return result / norm;
}

}  // namespace detail

inline double bessel_j(int n, double x) {
  double sign = 1.0;
  if (n < 0) {
    n = -n;
    if (n % 2) sign = -sign;
  }
  if (x < 0.0) {
    x = -x;
    if (n % 2) sign = -sign;
  }
  if (x == 0.0) return n == 0 ? sign : 0.0;
  if (x <= 2.0) return sign * detail::bessel_series(n, x);
  return sign * detail::bessel_miller(n, x);
}

inline double bessel_j1(double x) { return bessel_j(1, x); }

}  // namespace nvpm::special
