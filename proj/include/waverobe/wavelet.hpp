#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace waverobe {

/// A real sample x_1..x_n together with where it came from.
struct TimeSeries {
  std::vector<double> values;
  std::string provenance;

  std::size_t size() const { return values.size(); }
};

/// Extremal-phase Daubechies filter pair.
struct WaveletSpec {
  int vanishing_moments = 0;       ///< M
  std::vector<double> lowpass;     ///< h_0..h_{2M-1}, sum h_k = sqrt(2)
  std::vector<double> highpass;    ///< g_k = (-1)^k h_{2M-1-k}
  int support_length = 0;          ///< T = 2M - 1
  /// Lower bound on the Fourier decay exponent of psi-hat,
  /// M - log2(binom(2M-1, M-1)) / 2. Informational only.
  double decay_alpha = 0.0;

  std::size_t filter_length() const { return lowpass.size(); }
};

inline constexpr int kMaxVanishingMoments = 10;

/// Builds the Daubechies filter with M vanishing moments (1 <= M <= 10) by
/// spectral factorization. Throws ConfigError for unsupported M.
WaveletSpec daubechies_spec(int vanishing_moments);

/// Wavelet used for a given memory parameter in the simulation studies:
/// M = 2 for d <= 2 and M = 4 beyond.
int default_vanishing_moments(double d);

/// Number of boundary-free coefficients at scale j:
/// max(floor(2^{-j}(n - T + 1) - T + 1), 0).
std::size_t num_coeffs(std::size_t n, int j, int support_length);

/// Largest j with num_coeffs(n, j, T) >= min_count, or 0 if none.
int max_scale(std::size_t n, int support_length, std::size_t min_count = 2);

/// Detail coefficients W_{j,0..n_j-1} for j = 1..max_scale().
struct ScalePyramid {
  std::vector<std::vector<double>> details;  ///< details[j - 1] holds scale j
  std::size_t n = 0;
  WaveletSpec spec;

  int max_scale() const { return static_cast<int>(details.size()); }
  bool has_scale(int j) const { return j >= 1 && j <= max_scale(); }
  /// Throws RangeError when j is not present.
  std::span<const double> scale(int j) const;
};

/// Pyramidal filter bank with the samples taken as scale-0 approximation
/// coefficients. Only coefficients whose filter support lies inside the
/// sample are formed, and scale j keeps the first num_coeffs(n, j, T) of
/// them. Scales run from 1 to min(j_max, last j with n_j >= 1); j_max <= 0
/// selects the largest j with n_j >= 2.
ScalePyramid decompose(std::span<const double> x, const WaveletSpec& spec, int j_max = 0);

enum class MemoryRangeStatus { ok, borderline, violated };

/// Checks (1 + beta)/2 - alpha < d <= M. d above M is a violation; d at or
/// below the lower bound is only flagged as borderline because decay_alpha
/// is a conservative lower bound.
MemoryRangeStatus check_memory_range(const WaveletSpec& spec, double d, double beta = 1.0);

}  // namespace waverobe
