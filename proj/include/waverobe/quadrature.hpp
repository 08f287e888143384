#pragma once

#include <functional>
#include <span>

namespace waverobe {

/// E[f(Z)] for a standard Gaussian Z. The real line is cut at the given
/// breakpoints (where f may jump) and at unit spacing, and each piece is
/// integrated with adaptive Gauss-Kronrod. Throws NumericError when the
/// accumulated error estimate exceeds `abs_tol`.
double gaussian_expectation(const std::function<double(double)>& f,
                            std::span<const double> breakpoints = {}, double abs_tol = 1e-10);

/// Adaptive Gauss-Kronrod on [a, b]; `error` receives the estimate.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double* error = nullptr);

}  // namespace waverobe
