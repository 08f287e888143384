#include "waverobe/arfima.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "waverobe/errors.hpp"
#include "waverobe/fft.hpp"
#include "waverobe/rng.hpp"

namespace waverobe {
namespace {

void require_stationary(double d) {
  if (!std::isfinite(d) || std::abs(d) >= 0.5 - kStationaryMargin) {
    std::ostringstream msg;
    msg << "stationary ARFIMA needs |d| < 0.5, got d = " << d;
    throw DomainError(msg.str());
  }
}

double variance_at_zero(double d) {
  // Gamma(1 - 2d) / Gamma(1 - d)^2
  return std::exp(std::lgamma(1.0 - 2.0 * d) - 2.0 * std::lgamma(1.0 - d));
}

std::vector<double> sqrt_circulant_spectrum(double d, std::size_t core_length,
                                            std::size_t& embedding) {
  embedding = 2 * next_pow2(core_length);
  for (int attempt = 0; attempt < 2; ++attempt, embedding *= 2) {
    const std::size_t half = embedding / 2;
    const std::vector<double> gamma = arfima_autocov_sequence(d, half + 1);
    std::vector<std::complex<double>> row(embedding);
    for (std::size_t k = 0; k <= half; ++k) row[k] = gamma[k];
    for (std::size_t k = half + 1; k < embedding; ++k) row[k] = gamma[embedding - k];
    fft_inplace(row);
    double peak = 0.0;
    for (const auto& v : row) peak = std::max(peak, v.real());
    bool ok = true;
    std::vector<double> out(embedding);
    for (std::size_t k = 0; k < embedding; ++k) {
      double lambda = row[k].real();
      if (lambda < 0.0) {
        if (lambda < -1e-10 * peak) {
          ok = false;
          break;
        }
        lambda = 0.0;
      }
      out[k] = std::sqrt(lambda / static_cast<double>(embedding));
    }
    if (ok) return out;
  }
  throw NumericError("circulant embedding has negative eigenvalues for d = " + std::to_string(d));
}

}  // namespace

MemorySplit split_memory(double d) {
  if (!std::isfinite(d)) throw DomainError("memory parameter must be finite");
  const int m = static_cast<int>(std::ceil(d - 0.5));
  return {d - m, m};
}

double arfima_autocov(double d, std::size_t k) {
  require_stationary(d);
  const double g0 = variance_at_zero(d);
  if (k == 0) return g0;
  if (d == 0.0) return 0.0;
  // Gamma(k+d)/Gamma(k+1-d) * Gamma(1-d)/Gamma(d), arguments of the first
  // ratio are positive for k >= 1.
  const double kk = static_cast<double>(k);
  const double ratio = std::exp(std::lgamma(kk + d) - std::lgamma(kk + 1.0 - d));
  return g0 * ratio * std::tgamma(1.0 - d) / std::tgamma(d);
}

std::vector<double> arfima_autocov_sequence(double d, std::size_t count) {
  require_stationary(d);
  std::vector<double> g(count);
  if (count == 0) return g;
  g[0] = variance_at_zero(d);
  for (std::size_t k = 1; k < count; ++k) {
    const double kk = static_cast<double>(k);
    g[k] = g[k - 1] * (kk - 1.0 + d) / (kk - d);
  }
  return g;
}

ArfimaSampler::ArfimaSampler(double d, std::size_t n, double innovation_sd)
    : d_(d), n_(n), split_(split_memory(d)), innovation_sd_(innovation_sd) {
  if (n < 2) throw InputError("ARFIMA sample length must be at least 2");
  if (!(innovation_sd > 0.0)) throw InputError("innovation sd must be positive");
  if (std::abs(split_.stationary_d) >= 0.5 - kStationaryMargin) {
    std::ostringstream msg;
    msg << "d = " << d << " has stationary part " << split_.stationary_d
        << " on the boundary |d0| = 0.5; circulant embedding needs |d0| < 0.5";
    throw DomainError(msg.str());
  }
  core_length_ = n + static_cast<std::size_t>(std::max(0, -split_.integration_order));
  std::size_t embedding = 0;
  sqrt_eigen_ = sqrt_circulant_spectrum(split_.stationary_d, core_length_, embedding);
}

TimeSeries ArfimaSampler::sample(std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t embedding = sqrt_eigen_.size();
  std::vector<std::complex<double>> z(embedding);
  for (std::size_t k = 0; k < embedding; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    z[k] = sqrt_eigen_[k] * std::complex<double>(re, im);
  }
  fft_inplace(z);
  std::vector<double> x(core_length_);
  for (std::size_t t = 0; t < core_length_; ++t) x[t] = innovation_sd_ * z[t].real();

  for (int m = 0; m < split_.integration_order; ++m) {
    std::partial_sum(x.begin(), x.end(), x.begin());
  }
  for (int m = 0; m < -split_.integration_order; ++m) {
    for (std::size_t t = x.size() - 1; t > 0; --t) x[t] -= x[t - 1];
    x.erase(x.begin());
  }
  std::ostringstream prov;
  prov << "ARFIMA(0," << d_ << ",0) n=" << n_ << " seed=" << seed;
  return {std::move(x), prov.str()};
}

TimeSeries generate(const ArfimaConfig& cfg) {
  return ArfimaSampler(cfg.d, cfg.n, cfg.innovation_sd).sample(cfg.seed);
}

double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

ContaminatedSeries inject_outliers(const TimeSeries& x, const OutlierSpec& spec) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw InputError("outlier fraction must lie in [0, 1]");
  }
  ContaminatedSeries out{x, {}};
  const std::size_t n = x.size();
  const auto count =
      static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(n) + 1e-9));
  if (count == 0) return out;

  Rng rng = make_rng(spec.seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  out.indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.indices.begin(), out.indices.end());

  const double bump = spec.magnitude_multiplier * sample_sd(x.values);
  for (std::size_t idx : out.indices) out.series.values[idx] += bump;
  out.series.provenance += " +outliers";
  return out;
}

}  // namespace waverobe
