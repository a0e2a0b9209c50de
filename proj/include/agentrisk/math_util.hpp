#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace agentrisk::detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return std::round(result);
}

template <typename T>
constexpr T square(T v) {
  return v * v;
}

inline double int_pow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace agentrisk::detail
