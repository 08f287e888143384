#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "waverobe/errors.hpp"
#include "waverobe/normal.hpp"
#include "waverobe/robust_scale.hpp"

using namespace waverobe;

namespace {

const boost::math::normal_distribution<double> kStd;

double phi(double x) { return boost::math::pdf(kStd, x); }
double Phi(double x) { return boost::math::cdf(kStd, x); }
double q34() { return boost::math::quantile(kStd, 0.75); }

// E[f(Z)] with adaptive Gauss-Kronrod on pieces split at `breaks`.
double expect(const std::function<double(double)>& f, std::vector<double> breaks = {}) {
  breaks.push_back(-14.0);
  breaks.push_back(14.0);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return f(x) * phi(x); }, breaks[i], breaks[i + 1], 15, 1e-13);
  }
  return total;
}

double if_cr_oracle(double x) {
  const double c = 1.0 / (std::numbers::sqrt2 * boost::math::quantile(kStd, 0.625));
  const double a = 1.0 / c;
  const double denom = expect([&](double y) { return phi(y + a); });
  return c * (0.25 - Phi(x + a) + Phi(x - a)) / denom;
}

double if_mad_oracle(double x) {
  const double q = q34();
  const double m = 1.0 / q;
  const double a = (x <= q ? 1.0 : 0.0) - 0.75;
  const double b = (x <= -q ? 1.0 : 0.0) - 0.25;
  return -m * (a - b) / (2.0 * phi(q));
}

double hermite(int p, double x) {
  double h0 = 1.0, h1 = x;
  if (p == 0) return h0;
  for (int k = 1; k < p; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

double brute_cr(const std::vector<double>& w) {
  std::vector<double> dist;
  for (double a : w) {
    for (double b : w) dist.push_back(std::abs(a - b));
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t k = w.size() * w.size() / 4;
  const double c = 1.0 / (std::numbers::sqrt2 * boost::math::quantile(kStd, 0.625));
  return std::pow(c * dist[k - 1], 2);
}

std::vector<double> normals(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> x(n);
  for (double& v : x) v = z(rng);
  return x;
}

}  // namespace

TEST_SUITE("robust_scale") {

TEST_CASE("consistency constants") {
  CHECK(mad_constant() == doctest::Approx(1.4826).epsilon(1e-4));
  CHECK(mad_constant() == doctest::Approx(1.0 / q34()).epsilon(1e-15));
  CHECK(qn_constant() == doctest::Approx(2.21914).epsilon(1e-5));
}

TEST_CASE("classical scale") {
  CHECK(scale_cl(std::vector<double>{1, -1, 1, -1}) == 1.0);
  CHECK(scale_cl(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK(scale_cl(normals(100000, 2.0, 1)) == doctest::Approx(4.0).epsilon(0.02));
  CHECK_THROWS_AS(scale_cl(std::vector<double>{}), InputError);
}

TEST_CASE("MAD scale") {
  const double m = 1.0 / q34();
  CHECK(scale_mad(std::vector<double>{-2, -1, 0, 1, 2}) == doctest::Approx(m * m).epsilon(1e-14));
  CHECK(scale_mad(std::vector<double>{-2, -1, 0, 1, 2}) == doctest::Approx(2.19814).epsilon(1e-5));
  CHECK(scale_mad(std::vector<double>{0, 0, 0, 0}) == 0.0);
  CHECK(scale_mad(std::vector<double>{1, -3, 2, -4}) == doctest::Approx(std::pow(m * 2.5, 2)));
  CHECK(scale_mad(normals(100000, 3.0, 2)) == doctest::Approx(9.0).epsilon(0.03));
  CHECK_THROWS_AS(scale_mad(std::vector<double>{}), InputError);
}

TEST_CASE("CR scale") {
  const std::vector<double> w{0, 1, 3, 6, 10};
  CHECK(scale_cr(w) == doctest::Approx(brute_cr(w)).epsilon(1e-14));
  CHECK(scale_cr(std::vector<double>(9, 4.25)) == 0.0);
  CHECK(scale_cr(normals(100000, 1.0, 3)) == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(scale_cr(std::vector<double>{1, 2, 3, 4}), DegenerateInputError);
}

TEST_CASE("fast CR equals enumeration on 1000 random vectors") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(5, 200);
  std::uniform_int_distribution<int> shape(0, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> w(static_cast<std::size_t>(n));
    const int s = shape(rng);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> small(-3, 3);
    for (double& v : w) v = s == 0 ? z(rng) : s == 1 ? small(rng) : std::exp(3 * z(rng));
    const double fast = scale_cr(w);
    const double ref = scale_cr_bruteforce(w);
    const double mine = brute_cr(w);
    CAPTURE(trial);
    CHECK(fast == ref);
    CHECK(std::abs(fast - mine) <= 1e-12 * std::max(1.0, std::abs(mine)));
  }
}

TEST_CASE("standard Qn") {
  const std::vector<double> w{0, 1, 3, 6, 10, 15};
  std::vector<double> dist;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t k = i + 1; k < w.size(); ++k) dist.push_back(std::abs(w[i] - w[k]));
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t h = w.size() / 2 + 1;
  const double c = 1.0 / (std::numbers::sqrt2 * boost::math::quantile(kStd, 0.625));
  CHECK(scale_qn_standard(w) == doctest::Approx(std::pow(c * dist[h * (h - 1) / 2 - 1], 2)));
  CHECK(scale_qn_standard(normals(20000, 2.0, 5)) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("equivariance and invariance") {
  const auto w = normals(301, 1.0, 7);
  std::vector<double> scaled(w.size()), shifted(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    scaled[i] = 4.0 * w[i];
    shifted[i] = w[i] + 1024.0;
  }
  CHECK(scale_cl(scaled) == doctest::Approx(16.0 * scale_cl(w)).epsilon(1e-14));
  CHECK(scale_cr(scaled) == doctest::Approx(16.0 * scale_cr(w)).epsilon(1e-14));
  CHECK(scale_mad(scaled) == doctest::Approx(16.0 * scale_mad(w)).epsilon(1e-14));
  std::vector<double> dyadic(w.size()), dshift(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    dyadic[i] = std::ldexp(std::round(std::ldexp(w[i], 20)), -20);
    dshift[i] = dyadic[i] + 1024.0;
  }
  CHECK(scale_cr(dshift) == scale_cr(dyadic));
  CHECK(scale_cr(shifted) == doctest::Approx(scale_cr(w)).epsilon(1e-12));
}

TEST_CASE("breakdown") {
  auto w = normals(400, 1.0, 9);
  const double mad0 = scale_mad(w);
  const double cl0 = scale_cl(w);
  double clean_max = 0.0;
  for (std::size_t i = (w.size() - 1) / 2; i < w.size(); ++i) clean_max = std::max(clean_max, std::abs(w[i]));
  for (std::size_t i = 0; i < (w.size() - 1) / 2; ++i) w[i] = 1e9;
  CHECK(std::isfinite(scale_mad(w)));
  CHECK(scale_mad(w) <= std::pow(1.4826 * clean_max, 2) * (1 + 1e-4));
  CHECK(scale_mad(w) < 1e3 * mad0);
  CHECK(scale_cl(w) > 1e14);
  CHECK(scale_cl(w) > 1e10 * cl0);
}

TEST_CASE("influence functions") {
  CHECK(influence(0.0, EstimatorKind::cl) == -0.5);
  CHECK(influence(1.0, EstimatorKind::cl) == 0.0);
  CHECK(influence(0.0, EstimatorKind::mad) == doctest::Approx(-1.0 / (q34() * 4.0 * phi(q34()))).epsilon(1e-12));
  CHECK(std::abs(influence(0.0, EstimatorKind::mad)) == doctest::Approx(1.16639).epsilon(1e-5));
  for (double x : {-3.0, -0.9, -0.2, 0.0, 0.4, 0.7, 2.5}) {
    CAPTURE(x);
    CHECK(influence(x, EstimatorKind::mad) == doctest::Approx(if_mad_oracle(x)).epsilon(1e-12));
    CHECK(influence(x, EstimatorKind::cr) == doctest::Approx(if_cr_oracle(x)).epsilon(1e-9));
  }
}

TEST_CASE("second moments of the influence functions") {
  CHECK(if_second_moment(EstimatorKind::cl) == 0.5);
  const double q = q34();
  const double mad_closed = 1.0 / (16.0 * q * q * phi(q) * phi(q));
  CHECK(if_second_moment(EstimatorKind::mad) == doctest::Approx(mad_closed).epsilon(1e-9));
  const double cr = expect([](double x) { return std::pow(if_cr_oracle(x), 2); });
  CHECK(if_second_moment(EstimatorKind::cr) == doctest::Approx(cr).epsilon(1e-9));
  CHECK(if_second_moment(EstimatorKind::cr) == doctest::Approx(0.6089007).epsilon(1e-6));
}

TEST_CASE("Hermite coefficients") {
  for (int p = 0; p <= 8; ++p) {
    CHECK(hermite_coeff(EstimatorKind::cl, p) == (p == 2 ? 1.0 : 0.0));
  }
  const double q = q34();
  for (int p = 0; p <= 12; ++p) {
    CAPTURE(p);
    const double mad_closed = (p >= 2 && p % 2 == 0) ? hermite(p - 1, q) / q : 0.0;
    CHECK(std::abs(hermite_coeff(EstimatorKind::mad, p) - mad_closed) < 1e-9 * std::max(1.0, std::abs(mad_closed)));
    const double cr = expect([p](double x) { return if_cr_oracle(x) * hermite(p, x); });
    CHECK(std::abs(hermite_coeff(EstimatorKind::cr, p) - cr) < 1e-9 * std::max(1.0, std::abs(cr)));
  }
  CHECK(std::abs(hermite_coeff(EstimatorKind::mad, 0)) < 1e-10);
  CHECK(std::abs(hermite_coeff(EstimatorKind::mad, 1)) < 1e-10);
  const double x2if = expect([](double x) { return x * x * if_mad_oracle(x); }, {-q34(), q34()});
  CHECK(x2if == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hermite_coeff(EstimatorKind::mad, 2) == doctest::Approx(x2if).epsilon(1e-6));
}

TEST_CASE("Hermite series of CL and CR sum to the second moment") {
  for (auto kind : {EstimatorKind::cl, EstimatorKind::cr}) {
    const auto c = normalized_hermite_coeffs(kind, 30);
    double s = 0.0;
    for (double v : c) s += v * v;
    CHECK(s == doctest::Approx(if_second_moment(kind)).epsilon(1e-4));
  }
}

// IF_MAD is a step function, so c_p^2 / p! decays like p^{-3/2} and the
// remainder after p_max like p_max^{-1/2}.
TEST_CASE("Hermite series of MAD to p = 30 within 1e-4" * doctest::may_fail()) {
  const auto c = normalized_hermite_coeffs(EstimatorKind::mad, 30);
  double s = 0.0;
  for (double v : c) s += v * v;
  CHECK(s == doctest::Approx(if_second_moment(EstimatorKind::mad)).epsilon(1e-4));
}

TEST_CASE("MAD Hermite remainder decays like p^{-1/2}") {
  const double total = if_second_moment(EstimatorKind::mad);
  auto remainder = [&](int p) {
    const auto c = normalized_hermite_coeffs(EstimatorKind::mad, p);
    double s = 0.0;
    for (double v : c) s += v * v;
    return total - s;
  };
  const double r20 = remainder(20), r80 = remainder(80);
  CHECK(r20 > 0.0);
  CHECK(r80 > 0.0);
  CHECK(r20 / r80 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("kind names") {
  CHECK(parse_kind("CR") == EstimatorKind::cr);
  CHECK(parse_kind("mad") == EstimatorKind::mad);
  CHECK(to_string(EstimatorKind::cl) == "CL");
  CHECK_THROWS_AS(parse_kind("qn"), InputError);
}

}  // TEST_SUITE
