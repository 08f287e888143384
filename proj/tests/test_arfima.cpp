#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "waverobe/arfima.hpp"
#include "waverobe/errors.hpp"
#include "waverobe/parallel.hpp"
#include "waverobe/rng.hpp"

using namespace waverobe;

namespace {

// sum_j psi_j psi_{j+k} for the MA(infinity) weights, with the power-law tail
// psi_j ~ j^{d-1} / Gamma(d) added analytically.
double ma_autocov(double d, std::size_t k, std::size_t terms) {
  std::vector<double> psi(terms + k + 1);
  psi[0] = 1.0;
  for (std::size_t j = 1; j < psi.size(); ++j) psi[j] = psi[j - 1] * (static_cast<double>(j) - 1.0 + d) / static_cast<double>(j);
  double s = 0.0;
  for (std::size_t j = 0; j < terms; ++j) s += psi[j] * psi[j + k];
  const double a = std::pow(static_cast<double>(terms), 2.0 * d - 1.0) / (1.0 - 2.0 * d);
  s += a / (std::tgamma(d) * std::tgamma(d));
  return s;
}

double acf(const std::vector<double>& x, std::size_t lag) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - mean) * (x[t] - mean);
    if (t + lag < x.size()) num += (x[t] - mean) * (x[t + lag] - mean);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("arfima") {

TEST_CASE("white-noise autocovariance") {
  CHECK(arfima_autocov(0.0, 0) == 1.0);
  for (std::size_t k = 1; k < 5; ++k) CHECK(arfima_autocov(0.0, k) == 0.0);
}

TEST_CASE("closed form against the MA representation") {
  CHECK(arfima_autocov(0.2, 0) ==
        doctest::Approx(std::tgamma(0.6) / std::pow(std::tgamma(0.8), 2)).epsilon(1e-13));
  for (double d : {-0.3, 0.2, 0.4}) {
    for (std::size_t k : {0u, 1u, 7u, 40u}) {
      CAPTURE(d);
      CAPTURE(k);
      const double oracle = ma_autocov(d, k, 1000000);
      CHECK(arfima_autocov(d, k) == doctest::Approx(oracle).epsilon(2e-4));
    }
  }
  const auto seq = arfima_autocov_sequence(0.35, 60);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    CHECK(seq[k] == doctest::Approx(arfima_autocov(0.35, k)).epsilon(1e-11));
  }
}

TEST_CASE("hyperbolic decay") {
  const double ratio = arfima_autocov(0.4, 100) / arfima_autocov(0.4, 50);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 2 * 0.4 - 1)).epsilon(0.02));
}

TEST_CASE("domain") {
  CHECK_THROWS_AS(arfima_autocov(0.5, 1), DomainError);
  CHECK_THROWS_AS(arfima_autocov(-0.6, 1), DomainError);
  CHECK_THROWS_AS(ArfimaSampler(0.5, 100), DomainError);
  CHECK_THROWS_AS(ArfimaSampler(1.5, 100), DomainError);
  CHECK_THROWS_AS(ArfimaSampler(0.2, 1), InputError);
}

TEST_CASE("memory split") {
  auto s = split_memory(1.2);
  CHECK(s.integration_order == 1);
  CHECK(s.stationary_d == doctest::Approx(0.2));
  s = split_memory(-0.8);
  CHECK(s.integration_order == -1);
  CHECK(s.stationary_d == doctest::Approx(0.2));
  s = split_memory(0.5);
  CHECK(s.integration_order == 0);
  CHECK(s.stationary_d == 0.5);
  s = split_memory(2.2);
  CHECK(s.integration_order == 2);
}

TEST_CASE("d = 0 is white noise") {
  const std::size_t n = 1 << 14;
  const TimeSeries x = generate({0.0, n, 5, 1.0});
  REQUIRE(x.size() == n);
  for (std::size_t lag = 1; lag <= 10; ++lag) CHECK(std::abs(acf(x.values, lag)) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("lag-one correlation at d = 0.2") {
  const std::size_t n = 1 << 14;
  const ArfimaSampler s(0.2, n);
  double sum = 0.0;
  for (int r = 0; r < 200; ++r) sum += acf(s.sample(derive_seed(8, r)).values, 1);
  CHECK(sum / 200 == doctest::Approx(0.25).epsilon(0.04));
  CHECK(std::abs(sum / 200 - 0.25) < 0.01);
}

TEST_CASE("differencing d = 1.2 gives d = 0.2") {
  const std::size_t n = 4096;
  const ArfimaSampler s(1.2, n);
  double sum = 0.0;
  for (int r = 0; r < 200; ++r) {
    const auto x = s.sample(derive_seed(9, r)).values;
    REQUIRE(x.size() == n);
    std::vector<double> dx(n - 1);
    for (std::size_t t = 1; t < n; ++t) dx[t - 1] = x[t] - x[t - 1];
    sum += acf(dx, 1);
  }
  CHECK(std::abs(sum / 200 - 0.25) < 0.015);
}

TEST_CASE("d = -0.8 is a differenced d = 0.2 core") {
  const ArfimaSampler s(-0.8, 1000);
  CHECK(s.sample(1).size() == 1000);
}

TEST_CASE("covariance of the stationary core") {
  const std::size_t n = 512;
  const ArfimaSampler s(0.3, n);
  std::vector<double> cov(21, 0.0);
  double pairs[21] = {};
  for (int r = 0; r < 500; ++r) {
    const auto x = s.sample(derive_seed(10, r)).values;
    for (std::size_t k = 0; k <= 20; ++k) {
      for (std::size_t t = 0; t + k < n; ++t) cov[k] += x[t] * x[t + k];
      pairs[k] += static_cast<double>(n - k);
    }
  }
  for (std::size_t k = 0; k <= 20; ++k) {
    cov[k] /= pairs[k];
    CAPTURE(k);
    if (k == 0) {
      CHECK(cov[0] == doctest::Approx(arfima_autocov(0.3, 0)).epsilon(0.05));
    } else {
      CHECK(std::abs(cov[k] - arfima_autocov(0.3, k)) < 0.02);
    }
  }
}

TEST_CASE("marginal Gaussianity") {
  const ArfimaSampler s(0.2, 1 << 14);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0, cnt = 0;
  for (int r = 0; r < 62; ++r) {
    for (double v : s.sample(derive_seed(11, r)).values) {
      m1 += v;
      m2 += v * v;
      m3 += v * v * v;
      m4 += v * v * v * v;
      cnt += 1;
    }
  }
  m1 /= cnt;
  const double var = m2 / cnt - m1 * m1;
  const double skew = (m3 / cnt - 3 * m1 * m2 / cnt + 2 * m1 * m1 * m1) / std::pow(var, 1.5);
  const double kurt = (m4 / cnt - 4 * m1 * m3 / cnt + 6 * m1 * m1 * m2 / cnt - 3 * std::pow(m1, 4)) / (var * var) - 3;
  CHECK(cnt >= 1e6);
  CHECK(std::abs(skew) < 0.1);
  CHECK(std::abs(kurt) < 0.2);
}

TEST_CASE("determinism") {
  const auto a = generate({0.2, 1000, 42, 1.0}).values;
  const auto b = generate({0.2, 1000, 42, 1.0}).values;
  const auto c = generate({0.2, 1000, 43, 1.0}).values;
  CHECK(a == b);
  CHECK(a != c);
  const ArfimaSampler s(1.2, 3000);
  std::vector<std::vector<double>> serial(8), threaded(8);
  for (std::size_t i = 0; i < 8; ++i) serial[i] = s.sample(derive_seed(1, i)).values;
  parallel_for(8, 4, [&](std::size_t i) { threaded[i] = s.sample(derive_seed(1, i)).values; });
  CHECK(serial == threaded);
}

TEST_CASE("outlier injection") {
  const TimeSeries x = generate({1.2, 4096, 3, 1.0});
  const TimeSeries same = inject_outliers(x, {0.0, 5.0, 1}).series;
  CHECK(same.values == x.values);
  const TimeSeries zero = inject_outliers(x, {1.0, 0.0, 1}).series;
  CHECK(zero.values == x.values);
  const auto c = inject_outliers(x, {0.01, 5.0, 1});
  REQUIRE(c.indices.size() == 40);
  const double bump = 5.0 * sample_sd(x.values);
  for (std::size_t i = 1; i < c.indices.size(); ++i) CHECK(c.indices[i] > c.indices[i - 1]);
  std::size_t changed = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (c.series.values[t] != x.values[t]) {
      ++changed;
      CHECK(c.series.values[t] - x.values[t] == doctest::Approx(bump).epsilon(1e-12));
    }
  }
  CHECK(changed == 40);
  CHECK_THROWS_AS(inject_outliers(x, {1.5, 5.0, 1}), InputError);
}

}  // TEST_SUITE
