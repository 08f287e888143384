#include "waverobe/normal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

namespace waverobe {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double mad_constant() {
  static const double m = 1.0 / normal_quantile(0.75);
  return m;
}

double qn_constant() {
  static const double c = 1.0 / (std::numbers::sqrt2 * normal_quantile(0.625));
  return c;
}

}  // namespace waverobe
