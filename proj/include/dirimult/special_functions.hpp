#pragma once

#include <span>

namespace dirimult {

/// Natural log of |Gamma(x)| for x > 0. Reentrant.
double log_gamma(double x);

/// log(n!) via log_gamma(n + 1).
double log_factorial(long long n);

/// Max-shifted log(sum(exp(v))). Returns -inf for an empty span or when
/// every entry is -inf.
double log_sum_exp(std::span<const double> values);

}  // namespace dirimult
