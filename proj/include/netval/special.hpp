#pragma once

#include <functional>

namespace netval {

/// Standard normal CDF; exact limits at +-infinity.
double normal_cdf(double x) noexcept;

/// P(a <= N(0,1) < b), evaluated in the tail that keeps precision.
double normal_interval(double a, double b) noexcept;

/// Inverse of the standard normal CDF on [0,1]; returns -inf/+inf at 0/1.
double normal_quantile(double u);

/// Adaptive Gauss-Legendre integration of f over the finite interval [a,b].
/// Throws Error(model) when the requested accuracy is not reached within the
/// refinement budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-13, double rel_tol = 1e-11);

}  // namespace netval
