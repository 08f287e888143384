#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "waverobe/robust_scale.hpp"
#include "waverobe/wavelet.hpp"

namespace waverobe {

/// Linear weights w_0..w_ell with sum w_i = 0 and 2 log 2 sum i w_i = 1.
struct RegressionWeights {
  std::vector<double> w;
  int ell = 1;
};

/// w = D B (B^T D B)^{-1} b with B = [1 i], b = (0, 1/(2 log 2)) and
/// D = diag(2^{-i}).
RegressionWeights default_weights(int ell);

/// Same construction with a caller-supplied positive diagonal D.
RegressionWeights regression_weights(int ell, std::span<const double> diagonal);

/// Per-scale estimates for scales j0..j0+ell. Throws RangeError naming the
/// first missing or too-short scale.
ScaleSpectrum scale_spectrum(const ScalePyramid& pyr, int j0, int ell, EstimatorKind kind,
                             QnConvention qn = QnConvention::all_pairs);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;

  bool contains(const ConfidenceInterval& other) const {
    return lo <= other.lo && other.hi <= hi;
  }
  double width() const { return hi - lo; }
};

struct MemoryEstimate {
  double d_hat = 0.0;
  EstimatorKind kind = EstimatorKind::cl;
  int j0 = 1;
  int ell = 1;
  RegressionWeights weights;
  std::optional<double> se;
  std::optional<ConfidenceInterval> ci;
  ScaleSpectrum spectrum;
};

/// sum_i w_i log(values_i). Throws EstimationError on a non-positive value.
double regress_log_spectrum(const ScaleSpectrum& spectrum, const RegressionWeights& weights);

MemoryEstimate estimate_d(const ScalePyramid& pyr, int j0, int ell, EstimatorKind kind,
                          QnConvention qn = QnConvention::all_pairs);

/// Point estimate from an already computed spectrum.
MemoryEstimate estimate_from_spectrum(ScaleSpectrum spectrum);

/// Variance of sqrt(n 2^{-j0}) (d_hat - d) for a regression starting at j0
/// with ell + 1 scales, evaluated at memory parameter d.
using VarianceModel = std::function<double(double d, int j0, int ell, EstimatorKind kind)>;

/// Attaches se = sqrt(variance / (n 2^{-j0})) and the symmetric Gaussian
/// interval at `level`.
void attach_interval(MemoryEstimate& est, std::size_t n, double standardized_variance,
                     double level);

/// Two-sided standard normal quantile for a confidence level.
double z_quantile(double level);

struct ScanResult {
  std::vector<MemoryEstimate> estimates;  ///< J0 = 1 .. coarse - 1
  std::optional<int> recommended_j0;
};

/// Smallest J0 such that every interval from J0 up to the coarsest J0 lies
/// inside the widest interval of that tail. Estimates without an interval
/// are ignored; empty input gives no recommendation.
std::optional<int> recommend_j0(std::span<const MemoryEstimate> scan);

/// Estimates for J0 = 1..coarse-1 with J0 + ell = coarse. When a variance
/// model is given each estimate carries an interval evaluated at its own
/// d_hat.
ScanResult j0_scan(const ScalePyramid& pyr, int coarse, EstimatorKind kind, double level,
                   const VarianceModel& variance = {},
                   QnConvention qn = QnConvention::all_pairs);

}  // namespace waverobe
