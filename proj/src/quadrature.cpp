#include "waverobe/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "waverobe/errors.hpp"
#include "waverobe/normal.hpp"

namespace waverobe {

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double* error) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &err);
  if (error) *error = err;
  return v;
}

double gaussian_expectation(const std::function<double(double)>& f,
                            std::span<const double> breakpoints, double abs_tol) {
  // phi(38) underflows double, so the truncated range loses nothing.
  constexpr double kHalfWidth = 38.0;
  std::vector<double> cuts;
  for (int k = -static_cast<int>(kHalfWidth); k <= static_cast<int>(kHalfWidth); ++k) {
    cuts.push_back(k);
  }
  for (double b : breakpoints) {
    if (std::abs(b) < kHalfWidth) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto weighted = [&f](double x) { return f(x) * normal_pdf(x); };
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += integrate(weighted, cuts[i], cuts[i + 1], 1e-14, &err);
    total_err += err;
  }
  if (!(total_err <= abs_tol) || !std::isfinite(total)) {
    throw NumericError("Gaussian quadrature did not converge (error estimate " +
                       std::to_string(total_err) + ")");
  }
  return total;
}

}  // namespace waverobe
