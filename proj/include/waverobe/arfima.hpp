#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "waverobe/wavelet.hpp"

namespace waverobe {

struct ArfimaConfig {
  double d = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double innovation_sd = 1.0;
};

/// d = stationary_d + integration_order with stationary_d in (-0.5, 0.5].
struct MemorySplit {
  double stationary_d;
  int integration_order;
};

MemorySplit split_memory(double d);

/// Stationary cores must keep |d0| below 0.5 by at least this margin.
inline constexpr double kStationaryMargin = 1e-6;

/// Autocovariance of ARFIMA(0, d, 0) with unit innovations,
/// Gamma(1-2d) Gamma(k+d) / (Gamma(d) Gamma(1-d) Gamma(k+1-d)).
/// Throws DomainError unless |d| < 0.5.
double arfima_autocov(double d, std::size_t k);

/// gamma(0..count-1) by the ratio recursion gamma(k) = gamma(k-1)(k-1+d)/(k-d).
std::vector<double> arfima_autocov_sequence(double d, std::size_t count);

/// Exact Gaussian sampler by circulant embedding. The embedding is built
/// once per (d, n); sample() is const and safe to call concurrently.
class ArfimaSampler {
 public:
  ArfimaSampler(double d, std::size_t n, double innovation_sd = 1.0);

  TimeSeries sample(std::uint64_t seed) const;

  double d() const { return d_; }
  std::size_t size() const { return n_; }
  std::size_t embedding_size() const { return sqrt_eigen_.size(); }

 private:
  double d_;
  std::size_t n_;
  MemorySplit split_;
  std::size_t core_length_;
  double innovation_sd_;
  std::vector<double> sqrt_eigen_;  // sqrt(lambda_k / N)
};

/// One realization; deterministic given cfg.seed.
TimeSeries generate(const ArfimaConfig& cfg);

struct OutlierSpec {
  double fraction = 0.0;
  double magnitude_multiplier = 5.0;
  std::uint64_t seed = 0;
};

struct ContaminatedSeries {
  TimeSeries series;
  std::vector<std::size_t> indices;  ///< perturbed positions, ascending
};

/// Adds magnitude_multiplier * sd(x) to floor(fraction * n) distinct
/// positions drawn uniformly without replacement.
ContaminatedSeries inject_outliers(const TimeSeries& x, const OutlierSpec& spec);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(const std::vector<double>& x);

}  // namespace waverobe
