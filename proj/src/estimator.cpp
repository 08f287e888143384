#include "waverobe/estimator.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "waverobe/errors.hpp"
#include "waverobe/normal.hpp"

namespace waverobe {

RegressionWeights regression_weights(int ell, std::span<const double> diagonal) {
  if (ell < 1) throw InputError("regression needs ell >= 1, got " + std::to_string(ell));
  const auto size = static_cast<Eigen::Index>(ell) + 1;
  if (static_cast<Eigen::Index>(diagonal.size()) != size) {
    throw InputError("weight matrix diagonal must have ell + 1 entries");
  }
  Eigen::MatrixXd design(size, 2);
  Eigen::VectorXd dvec(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!(diagonal[static_cast<std::size_t>(i)] > 0.0)) {
      throw InputError("weight matrix diagonal must be positive");
    }
    design(i, 0) = 1.0;
    design(i, 1) = static_cast<double>(i);
    dvec(i) = diagonal[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd db = dvec.asDiagonal() * design;
  const Eigen::Matrix2d gram = design.transpose() * db;
  if (std::abs(gram.determinant()) < 1e-300) throw NumericError("singular regression system");
  const Eigen::Vector2d b(0.0, 1.0 / (2.0 * std::numbers::ln2));
  const Eigen::VectorXd w = db * gram.fullPivLu().solve(b);
  return {std::vector<double>(w.data(), w.data() + w.size()), ell};
}

RegressionWeights default_weights(int ell) {
  if (ell < 1) throw InputError("regression needs ell >= 1, got " + std::to_string(ell));
  std::vector<double> diag(static_cast<std::size_t>(ell) + 1);
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = std::ldexp(1.0, -static_cast<int>(i));
  return regression_weights(ell, diag);
}

ScaleSpectrum scale_spectrum(const ScalePyramid& pyr, int j0, int ell, EstimatorKind kind,
                             QnConvention qn) {
  if (j0 < 1) throw RangeError("j0 must be at least 1, got " + std::to_string(j0));
  if (ell < 1) throw RangeError("ell must be at least 1, got " + std::to_string(ell));
  ScaleSpectrum out;
  out.j0 = j0;
  out.kind = kind;
  out.qn = qn;
  const std::size_t need = kind == EstimatorKind::cr ? kMinCrLength : 1;
  for (int j = j0; j <= j0 + ell; ++j) {
    if (!pyr.has_scale(j)) {
      throw RangeError("scale " + std::to_string(j) + " is not available; the pyramid stops at scale " +
                       std::to_string(pyr.max_scale()));
    }
    const auto w = pyr.scale(j);
    if (w.size() < need) {
      throw RangeError("scale " + std::to_string(j) + " has " + std::to_string(w.size()) +
                       " coefficients; " + std::string(to_string(kind)) + " needs at least " +
                       std::to_string(need));
    }
    out.values.push_back(scale_estimate(w, kind, qn));
    out.counts.push_back(w.size());
  }
  return out;
}

double regress_log_spectrum(const ScaleSpectrum& spectrum, const RegressionWeights& weights) {
  if (spectrum.values.size() != weights.w.size()) {
    throw InputError("spectrum and weights differ in length");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < weights.w.size(); ++i) {
    const double v = spectrum.values[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw EstimationError("scale " + std::to_string(spectrum.j0 + static_cast<int>(i)) +
                            " has non-positive " + std::string(to_string(spectrum.kind)) +
                            " scale estimate; log-regression is undefined");
    }
    d += weights.w[i] * std::log(v);
  }
  return d;
}

MemoryEstimate estimate_from_spectrum(ScaleSpectrum spectrum) {
  MemoryEstimate est;
  est.kind = spectrum.kind;
  est.j0 = spectrum.j0;
  est.ell = static_cast<int>(spectrum.values.size()) - 1;
  est.weights = default_weights(est.ell);
  est.d_hat = regress_log_spectrum(spectrum, est.weights);
  est.spectrum = std::move(spectrum);
  return est;
}

MemoryEstimate estimate_d(const ScalePyramid& pyr, int j0, int ell, EstimatorKind kind,
                          QnConvention qn) {
  return estimate_from_spectrum(scale_spectrum(pyr, j0, ell, kind, qn));
}

double z_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  return normal_quantile(0.5 + level / 2.0);
}

void attach_interval(MemoryEstimate& est, std::size_t n, double standardized_variance,
                     double level) {
  if (!(standardized_variance >= 0.0) || !std::isfinite(standardized_variance)) {
    throw NumericError("variance model returned " + std::to_string(standardized_variance));
  }
  const double effective = std::ldexp(static_cast<double>(n), -est.j0);
  const double se = std::sqrt(standardized_variance / effective);
  const double half = z_quantile(level) * se;
  est.se = se;
  est.ci = ConfidenceInterval{est.d_hat - half, est.d_hat + half, level};
}

std::optional<int> recommend_j0(std::span<const MemoryEstimate> scan) {
  std::vector<const MemoryEstimate*> with_ci;
  for (const auto& e : scan) {
    if (e.ci) with_ci.push_back(&e);
  }
  if (with_ci.empty()) return std::nullopt;
  for (std::size_t start = 0; start < with_ci.size(); ++start) {
    const ConfidenceInterval* widest = nullptr;
    for (std::size_t k = start; k < with_ci.size(); ++k) {
      const auto& ci = *with_ci[k]->ci;
      if (!widest || ci.width() > widest->width()) widest = &ci;
    }
    bool nested = true;
    for (std::size_t k = start; k < with_ci.size() && nested; ++k) {
      nested = widest->contains(*with_ci[k]->ci);
    }
    if (nested) return with_ci[start]->j0;
  }
  return std::nullopt;
}

ScanResult j0_scan(const ScalePyramid& pyr, int coarse, EstimatorKind kind, double level,
                   const VarianceModel& variance, QnConvention qn) {
  if (coarse < 2) throw RangeError("coarse scale must be at least 2");
  const std::size_t need = kind == EstimatorKind::cr ? kMinCrLength : 1;
  if (!pyr.has_scale(coarse) || pyr.scale(coarse).size() < need) {
    int feasible = 0;
    for (int j = 1; j <= pyr.max_scale(); ++j) {
      if (pyr.scale(j).size() >= need) feasible = j;
    }
    throw RangeError("coarse scale " + std::to_string(coarse) + " exceeds the maximal feasible scale " +
                     std::to_string(feasible) + " for " + std::string(to_string(kind)));
  }
  ScanResult out;
  for (int j0 = 1; j0 < coarse; ++j0) {
    MemoryEstimate est = estimate_d(pyr, j0, coarse - j0, kind, qn);
    if (variance) attach_interval(est, pyr.n, variance(est.d_hat, j0, coarse - j0, kind), level);
    out.estimates.push_back(std::move(est));
  }
  out.recommended_j0 = recommend_j0(out.estimates);
  return out;
}

}  // namespace waverobe
