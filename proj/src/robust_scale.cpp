#include "waverobe/robust_scale.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "waverobe/errors.hpp"
#include "waverobe/normal.hpp"

namespace waverobe {
namespace {

void require_nonempty(std::span<const double> w, const char* what) {
  if (w.empty()) throw InputError(std::string(what) + ": empty input");
}

// q-th smallest (1-based) of y[j] - y[i] over i < j, for sorted y.
// Each row i is an increasing sequence over columns j > i. Candidate column
// windows shrink around a weighted median of the row medians until the
// pivot's rank brackets q.
double select_pair_difference(const std::vector<double>& y, std::size_t q) {
  const std::size_t n = y.size();
  std::vector<std::size_t> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = i + 1;
    hi[i] = n - 1;
  }
  std::vector<std::size_t> first_ge(n), first_gt(n);
  std::vector<std::pair<double, std::size_t>> medians;
  medians.reserve(n);

  for (;;) {
    medians.clear();
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (lo[i] > hi[i]) continue;
      const std::size_t width = hi[i] - lo[i] + 1;
      const std::size_t mid = lo[i] + (hi[i] - lo[i]) / 2;
      medians.emplace_back(y[mid] - y[i], width);
      total += width;
    }
    if (medians.empty()) throw NumericError("pair-difference selection lost its target");
    std::sort(medians.begin(), medians.end());
    double pivot = medians.back().first;
    std::size_t acc = 0;
    for (const auto& [value, weight] : medians) {
      acc += weight;
      if (2 * acc >= total) {
        pivot = value;
        break;
      }
    }

    // Ranks of the pivot among all pairs, by two pointers.
    std::size_t count_less = 0, count_leq = 0;
    std::size_t p_less = 1, p_leq = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      p_less = std::max(p_less, i + 1);
      while (p_less < n && y[p_less] - y[i] < pivot) ++p_less;
      p_leq = std::max(p_leq, p_less);
      while (p_leq < n && y[p_leq] - y[i] <= pivot) ++p_leq;
      first_ge[i] = p_less;
      first_gt[i] = p_leq;
      count_less += p_less - (i + 1);
      count_leq += p_leq - (i + 1);
    }

    if (count_less < q && q <= count_leq) return pivot;
    if (q <= count_less) {
      for (std::size_t i = 0; i + 1 < n; ++i) hi[i] = std::min(hi[i], first_ge[i] - 1);
    } else {
      for (std::size_t i = 0; i + 1 < n; ++i) lo[i] = std::max(lo[i], first_gt[i]);
    }
  }
}

// Rank among the doubled off-diagonal multiset for the all-pairs Qn over
// all n^2 ordered pairs with k = floor(n^2 / 4).
std::size_t cr_pair_rank(std::size_t n) {
  const std::size_t k = n * n / 4;
  const std::size_t r = k - n;  // n diagonal zeros come first
  return (r + 1) / 2;
}

double influence_cl(double x) { return 0.5 * (x * x - 1.0); }

double influence_cr(double x) {
  const double c = qn_constant();
  const double a = 1.0 / c;
  // int phi(y) phi(y + a) dy = exp(-a^2 / 4) / (2 sqrt(pi))
  const double denom = std::exp(-a * a / 4.0) / (2.0 * std::sqrt(std::numbers::pi));
  return c * (0.25 - normal_cdf(x + a) + normal_cdf(x - a)) / denom;
}

double influence_mad(double x) {
  const double m = mad_constant();
  const double q = 1.0 / m;
  const double upper = (x <= q ? 1.0 : 0.0) - 0.75;
  const double lower = (x <= -q ? 1.0 : 0.0) - 0.25;
  return -m * (upper - lower) / (2.0 * normal_pdf(q));
}

// E[f(Z) h_p(Z)] for p = 0..p_max with orthonormal Hermite h_p, by fixed
// Gauss-Legendre on unit pieces of [-38, 38] cut at the breakpoints. Each
// piece has an entire integrand, so 30 nodes reach double precision.
std::vector<double> gaussian_projections(double (*f)(double), std::span<const double> breaks,
                                         int p_max) {
  using rule = boost::math::quadrature::gauss<double, 30>;
  std::vector<double> cuts;
  for (int k = -38; k <= 38; ++k) cuts.push_back(k);
  cuts.insert(cuts.end(), breaks.begin(), breaks.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> out(static_cast<std::size_t>(p_max) + 1, 0.0);
  std::vector<double> roots(static_cast<std::size_t>(p_max) + 2);
  for (int k = 0; k <= p_max + 1; ++k) roots[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(k));
  const auto& nodes = rule::abscissa();
  const auto& weights = rule::weights();
  auto accumulate = [&](double x, double w) {
    const double base = w * f(x) * normal_pdf(x);
    double prev = 0.0, cur = 1.0;
    for (int p = 0; p <= p_max; ++p) {
      out[static_cast<std::size_t>(p)] += base * cur;
      const double next =
          (x * cur - roots[static_cast<std::size_t>(p)] * prev) / roots[static_cast<std::size_t>(p) + 1];
      prev = cur;
      cur = next;
    }
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double half = 0.5 * (cuts[i + 1] - cuts[i]);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] == 0.0) {
        accumulate(mid, half * weights[k]);
      } else {
        accumulate(mid - half * nodes[k], half * weights[k]);
        accumulate(mid + half * nodes[k], half * weights[k]);
      }
    }
  }
  return out;
}

double influence_cr_squared(double x) {
  const double v = influence_cr(x);
  return v * v;
}

double influence_mad_squared(double x) {
  const double v = influence_mad(x);
  return v * v;
}

std::array<double, 2> mad_breaks() {
  const double q = 1.0 / mad_constant();
  return {-q, q};
}

std::vector<double> compute_normalized_coeffs(EstimatorKind kind, int p_max) {
  if (kind == EstimatorKind::cl) {
    std::vector<double> out(static_cast<std::size_t>(p_max) + 1, 0.0);
    if (p_max >= 2) out[2] = 1.0 / std::numbers::sqrt2;
    return out;
  }
  if (kind == EstimatorKind::mad) {
    const auto breaks = mad_breaks();
    return gaussian_projections(&influence_mad, breaks, p_max);
  }
  return gaussian_projections(&influence_cr, {}, p_max);
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::cl:
      return "CL";
    case EstimatorKind::mad:
      return "MAD";
    case EstimatorKind::cr:
      return "CR";
  }
  return "?";
}

EstimatorKind parse_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "cl") return EstimatorKind::cl;
  if (lower == "mad") return EstimatorKind::mad;
  if (lower == "cr") return EstimatorKind::cr;
  throw InputError("unknown estimator '" + std::string(text) + "' (expected cl, mad or cr)");
}

double scale_cl(std::span<const double> w) {
  require_nonempty(w, "scale_cl");
  double s = 0.0;
  for (double v : w) s += v * v;
  return s / static_cast<double>(w.size());
}

double scale_mad(std::span<const double> w) {
  require_nonempty(w, "scale_mad");
  std::vector<double> a(w.size());
  std::transform(w.begin(), w.end(), a.begin(), [](double v) { return std::abs(v); });
  const std::size_t n = a.size();
  const std::size_t mid = n / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  double med = a[mid];
  if (n % 2 == 0) {
    const double below = *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (below + med);
  }
  const double s = mad_constant() * med;
  return s * s;
}

double scale_cr(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n < kMinCrLength) {
    throw DegenerateInputError("scale_cr needs at least " + std::to_string(kMinCrLength) +
                               " values, got " + std::to_string(n));
  }
  std::vector<double> y(w.begin(), w.end());
  std::sort(y.begin(), y.end());
  const double s = qn_constant() * select_pair_difference(y, cr_pair_rank(n));
  return s * s;
}

double scale_cr_bruteforce(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n < kMinCrLength) {
    throw DegenerateInputError("scale_cr needs at least " + std::to_string(kMinCrLength) +
                               " values, got " + std::to_string(n));
  }
  std::vector<double> dist;
  dist.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) dist.push_back(std::abs(w[i] - w[k]));
  }
  const std::size_t k = n * n / 4;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  const double s = qn_constant() * dist[k - 1];
  return s * s;
}

double scale_qn_standard(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n < 2) throw DegenerateInputError("standard Qn needs at least 2 values");
  std::vector<double> y(w.begin(), w.end());
  std::sort(y.begin(), y.end());
  const std::size_t h = n / 2 + 1;
  const double s = qn_constant() * select_pair_difference(y, h * (h - 1) / 2);
  return s * s;
}

std::string_view to_string(QnConvention qn) {
  return qn == QnConvention::standard ? "standard" : "all_pairs";
}

double scale_estimate(std::span<const double> w, EstimatorKind kind, QnConvention qn) {
  switch (kind) {
    case EstimatorKind::cl:
      return scale_cl(w);
    case EstimatorKind::mad:
      return scale_mad(w);
    case EstimatorKind::cr:
      return qn == QnConvention::standard ? scale_qn_standard(w) : scale_cr(w);
  }
  throw InputError("unknown estimator kind");
}

double influence(double x, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::cl:
      return influence_cl(x);
    case EstimatorKind::mad:
      return influence_mad(x);
    case EstimatorKind::cr:
      return influence_cr(x);
  }
  return 0.0;
}

double if_second_moment(EstimatorKind kind) {
  if (kind == EstimatorKind::cl) return 0.5;
  static std::once_flag once;
  static std::array<double, 2> moments{};
  std::call_once(once, [] {
    const auto breaks = mad_breaks();
    moments[0] = gaussian_projections(&influence_mad_squared, breaks, 0)[0];
    moments[1] = gaussian_projections(&influence_cr_squared, {}, 0)[0];
  });
  return kind == EstimatorKind::mad ? moments[0] : moments[1];
}

std::vector<double> normalized_hermite_coeffs(EstimatorKind kind, int p_max) {
  if (p_max < 0) return {};
  static std::mutex mutex;
  static std::map<EstimatorKind, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto& table = cache[kind];
  if (static_cast<int>(table.size()) <= p_max) {
    table = compute_normalized_coeffs(kind, std::max(p_max, 40));
  }
  return {table.begin(), table.begin() + p_max + 1};
}

double hermite_coeff(EstimatorKind kind, int p) {
  if (p < 0) return 0.0;
  if (kind == EstimatorKind::cl) return p == 2 ? 1.0 : 0.0;
  const double normalized = normalized_hermite_coeffs(kind, p)[static_cast<std::size_t>(p)];
  return normalized * std::sqrt(std::tgamma(p + 1.0));
}

double hermite_poly(int p, double x) {
  if (p <= 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < p; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace waverobe
