#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace waverobe {

/// The three scale-spectrum estimators.
enum class EstimatorKind { cl, mad, cr };

inline constexpr std::array<EstimatorKind, 3> kAllKinds{EstimatorKind::cl, EstimatorKind::mad,
                                                        EstimatorKind::cr};

std::string_view to_string(EstimatorKind kind);
/// Accepts "cl", "mad", "cr" in any case; throws InputError otherwise.
EstimatorKind parse_kind(std::string_view text);

/// Rank convention of the CR estimator. all_pairs is the n^2 ordered pairs
/// with k = floor(n^2/4); standard is the usual Qn over pairs i < k.
enum class QnConvention { all_pairs, standard };

std::string_view to_string(QnConvention qn);

/// Per-scale estimates sigma^2_{*,j} for j = j0 .. j0 + values.size() - 1.
struct ScaleSpectrum {
  int j0 = 1;
  std::vector<double> values;
  std::vector<std::size_t> counts;
  EstimatorKind kind = EstimatorKind::cl;
  QnConvention qn = QnConvention::all_pairs;

  int last_scale() const { return j0 + static_cast<int>(values.size()) - 1; }
};

/// Mean of squares, no centering.
double scale_cl(std::span<const double> w);

/// (m(Phi) * median |w_i|)^2. Even-length medians average the two central
/// order statistics.
double scale_mad(std::span<const double> w);

/// Smallest length accepted by scale_cr.
inline constexpr std::size_t kMinCrLength = 5;

/// (c(Phi) * k-th smallest of the n^2 distances |w_i - w_k| over all ordered
/// pairs, diagonal included)^2 with k = floor(n^2 / 4). O(n log n) selection
/// over the implicitly sorted difference matrix. Throws DegenerateInputError
/// for n < 5.
double scale_cr(std::span<const double> w);

/// Direct enumeration of all n^2 distances; the reference for scale_cr.
double scale_cr_bruteforce(std::span<const double> w);

/// The usual Qn^2: pairs i < k only and rank binom(floor(n/2) + 1, 2).
double scale_qn_standard(std::span<const double> w);

double scale_estimate(std::span<const double> w, EstimatorKind kind,
                      QnConvention qn = QnConvention::all_pairs);

/// Influence function IF(x, kind, Phi) of the scale (not squared scale)
/// functional at the standard Gaussian.
double influence(double x, EstimatorKind kind);

/// E[IF(Z, kind)^2] for Z ~ N(0, 1).
double if_second_moment(EstimatorKind kind);

/// c_p = E[IF(Z, kind) He_p(Z)] with He_p the probabilists' Hermite
/// polynomial (He_2 = x^2 - 1). Exact for CL.
double hermite_coeff(EstimatorKind kind, int p);

/// c_p / sqrt(p!) for p = 0..p_max; their squares sum to E[IF^2] as p_max
/// grows. Tables are computed once per kind and cached.
std::vector<double> normalized_hermite_coeffs(EstimatorKind kind, int p_max);

/// He_p(x) by the three-term recurrence.
double hermite_poly(int p, double x);

}  // namespace waverobe
