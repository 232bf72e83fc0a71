#include "dirimult/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <math.h>

#include "dirimult/error.hpp"

namespace dirimult {

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ValidationError("log_gamma: argument must be finite and positive");
  }
#if defined(__GLIBC__) || defined(__APPLE__)
  // std::lgamma writes the global signgam; lgamma_r does not.
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_factorial(long long n) {
  if (n < 0) throw ValidationError("log_factorial: negative argument");
  if (n < 2) return 0.0;
  return log_gamma(static_cast<double>(n) + 1.0);
}

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return kNegInf;
  const double peak = *std::max_element(values.begin(), values.end());
  if (peak == kNegInf) return kNegInf;
  if (std::isinf(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

}  // namespace dirimult
