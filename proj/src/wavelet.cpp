#include "waverobe/wavelet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "waverobe/errors.hpp"

namespace waverobe {
namespace {

using cld = std::complex<long double>;

long double binomial(int n, int k) {
  long double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Horner evaluation of p and p' at z; coefficients in increasing degree.
void eval_poly(const std::vector<long double>& c, cld z, cld& p, cld& dp) {
  p = 0;
  dp = 0;
  for (std::size_t i = c.size(); i-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[i];
  }
}

// Roots of sum_k binom(M-1+k, k) y^k: companion-matrix eigenvalues polished
// by Newton steps in extended precision.
std::vector<cld> daubechies_poly_roots(int m) {
  const int deg = m - 1;
  if (deg == 0) return {};
  std::vector<long double> c(deg + 1);
  for (int k = 0; k <= deg; ++k) c[k] = binomial(m - 1 + k, k);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -static_cast<double>(c[i] / c[deg]);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<cld> roots;
  for (int i = 0; i < deg; ++i) {
    cld z(solver.eigenvalues()[i].real(), solver.eigenvalues()[i].imag());
    for (int it = 0; it < 50; ++it) {
      cld p, dp;
      eval_poly(c, z, p, dp);
      if (std::abs(dp) == 0) break;
      const cld step = p / dp;
      z -= step;
      if (std::abs(step) <= 1e-19L * std::max<long double>(1, std::abs(z))) break;
    }
    roots.push_back(z);
  }
  return roots;
}

std::vector<double> daubechies_lowpass(int m) {
  // H(zeta) = sum_k h_k zeta^k = c (1 + zeta)^M prod_i (zeta - z_i), where each
  // root y_i of the Daubechies polynomial maps to the pair z, 1/z solving
  // z^2 - (2 - 4 y_i) z + 1 = 0. Keeping |z_i| > 1 gives the extremal-phase
  // filter with its energy at the front.
  std::vector<cld> poly{cld(1)};
  auto multiply = [&poly](cld root_factor_const, cld root_factor_lin) {
    std::vector<cld> out(poly.size() + 1, cld(0));
    for (std::size_t i = 0; i < poly.size(); ++i) {
      out[i] += poly[i] * root_factor_const;
      out[i + 1] += poly[i] * root_factor_lin;
    }
    poly = std::move(out);
  };
  for (int i = 0; i < m; ++i) multiply(cld(1), cld(1));
  for (const cld& y : daubechies_poly_roots(m)) {
    const cld b = cld(1) - cld(2) * y;
    const cld disc = std::sqrt(b * b - cld(1));
    cld z = b + disc;
    if (std::abs(z) < 1) z = b - disc;
    multiply(-z, cld(1));
  }
  long double total = 0;
  for (const cld& c : poly) total += c.real();
  const long double scale = std::sqrt(2.0L) / total;
  std::vector<double> h(poly.size());
  for (std::size_t k = 0; k < poly.size(); ++k) h[k] = static_cast<double>(poly[k].real() * scale);
  return h;
}

}  // namespace

WaveletSpec daubechies_spec(int vanishing_moments) {
  if (vanishing_moments < 1 || vanishing_moments > kMaxVanishingMoments) {
    throw ConfigError("unsupported number of vanishing moments " +
                      std::to_string(vanishing_moments) + " (expected 1.." +
                      std::to_string(kMaxVanishingMoments) + ")");
  }
  const int m = vanishing_moments;
  WaveletSpec spec;
  spec.vanishing_moments = m;
  spec.support_length = 2 * m - 1;
  spec.lowpass = daubechies_lowpass(m);
  const std::size_t len = spec.lowpass.size();
  spec.highpass.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    spec.highpass[k] = sign * spec.lowpass[len - 1 - k];
  }
  spec.decay_alpha =
      m - 0.5 * std::log2(static_cast<double>(binomial(2 * m - 1, m - 1)));
  return spec;
}

int default_vanishing_moments(double d) { return d <= 2.0 ? 2 : 4; }

std::size_t num_coeffs(std::size_t n, int j, int support_length) {
  const long long t = support_length;
  const long long base = static_cast<long long>(n) - t + 1;
  if (base < 0 || j >= 62) return 0;
  const long long count = (base >> j) - t + 1;
  return count > 0 ? static_cast<std::size_t>(count) : 0;
}

int max_scale(std::size_t n, int support_length, std::size_t min_count) {
  int j = 0;
  while (num_coeffs(n, j + 1, support_length) >= min_count) ++j;
  return j;
}

std::span<const double> ScalePyramid::scale(int j) const {
  if (!has_scale(j)) {
    throw RangeError("scale " + std::to_string(j) + " is not available (pyramid has scales 1.." +
                     std::to_string(max_scale()) + ")");
  }
  return details[static_cast<std::size_t>(j - 1)];
}

ScalePyramid decompose(std::span<const double> x, const WaveletSpec& spec, int j_max) {
  const std::size_t len = spec.filter_length();
  const int t = spec.support_length;
  if (len == 0) throw ConfigError("wavelet has no filter taps");
  if (x.size() < len) {
    throw InputError("series of length " + std::to_string(x.size()) +
                     " is shorter than the wavelet filter (" + std::to_string(len) + " taps)");
  }
  if (num_coeffs(x.size(), 1, t) == 0) {
    throw InputError("series of length " + std::to_string(x.size()) +
                     " yields no boundary-free wavelet coefficient");
  }
  const int available = max_scale(x.size(), t, 1);
  const int last = j_max <= 0 ? std::max(1, max_scale(x.size(), t, 2)) : std::min(j_max, available);

  ScalePyramid pyr;
  pyr.n = x.size();
  pyr.spec = spec;
  std::vector<double> approx(x.begin(), x.end());
  for (int j = 1; j <= last; ++j) {
    const std::size_t count = (approx.size() - len) / 2 + 1;
    std::vector<double> next(count), detail(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double* a = approx.data() + 2 * k;
      double lo = 0.0, hi = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        lo += spec.lowpass[i] * a[i];
        hi += spec.highpass[i] * a[i];
      }
      next[k] = lo;
      detail[k] = hi;
    }
    detail.resize(std::min(count, num_coeffs(x.size(), j, t)));
    pyr.details.push_back(std::move(detail));
    approx = std::move(next);
    if (approx.size() < len) break;
  }
  return pyr;
}

MemoryRangeStatus check_memory_range(const WaveletSpec& spec, double d, double beta) {
  if (!(d <= spec.vanishing_moments)) return MemoryRangeStatus::violated;
  if (d <= (1.0 + beta) / 2.0 - spec.decay_alpha) return MemoryRangeStatus::borderline;
  return MemoryRangeStatus::ok;
}

}  // namespace waverobe
