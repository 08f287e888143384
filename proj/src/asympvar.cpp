#include "waverobe/asympvar.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "waverobe/arfima.hpp"
#include "waverobe/errors.hpp"
#include "waverobe/fft.hpp"
#include "waverobe/parallel.hpp"
#include "waverobe/rng.hpp"

namespace waverobe {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

cd transfer(const std::vector<double>& taps, double omega) {
  const cd step = std::polar(1.0, -omega);
  cd z = 1.0, acc = 0.0;
  for (double t : taps) {
    acc += t * z;
    z *= step;
  }
  return acc / std::numbers::sqrt2;
}

// m0(w) = 1 - i mu w + O(w^2)
double lowpass_mean(const WaveletSpec& spec) {
  double mu = 0.0;
  for (std::size_t k = 0; k < spec.lowpass.size(); ++k) mu += static_cast<double>(k) * spec.lowpass[k];
  return mu / std::numbers::sqrt2;
}

cd psi_hat_with_mean(double xi, const WaveletSpec& spec, double mu) {
  cd r = transfer(spec.highpass, xi / 2.0);
  double omega = xi / 4.0;
  for (int depth = 0; depth < 20 || std::abs(omega) > 1e-9; ++depth) {
    r *= transfer(spec.lowpass, omega);
    omega /= 2.0;
  }
  // prod_{k>=0} m0(omega 2^-k) = exp(-2 i mu omega) to second order
  return r * std::polar(1.0, -2.0 * mu * omega);
}

double grid_lambda(int g, int grid) { return -kPi + 2.0 * kPi * (g + 0.5) / grid; }

cd phi_hat_with_mean(double x, const WaveletSpec& spec, double mu) {
  cd r = 1.0;
  double omega = x / 2.0;
  for (int depth = 0; depth < 20 || std::abs(omega) > 1e-9; ++depth) {
    r *= transfer(spec.lowpass, omega);
    omega /= 2.0;
  }
  return r * std::polar(1.0, -2.0 * mu * omega);
}

// conj(phi_hat(x)) psi_hat(x), sharing the cascade.
cd phi_psi_product(double x, const WaveletSpec& spec, double mu) {
  const cd half = phi_hat_with_mean(x / 2.0, spec, mu);
  return std::conj(transfer(spec.lowpass, x / 2.0) * half) * (transfer(spec.highpass, x / 2.0) * half);
}

// m1(x/2) prod_{j=2}^{u} m0(x/2^j), so that psi_hat(x) = A_u(x) phi_hat(x 2^-u).
cd scale_transfer(double x, int u, const WaveletSpec& spec) {
  cd r = transfer(spec.highpass, x / 2.0);
  double omega = x / 4.0;
  for (int j = 2; j <= u; ++j, omega /= 2.0) r *= transfer(spec.lowpass, omega);
  return r;
}

// Half-width of the extension of the interpolation grid beyond [-pi, pi].
constexpr int kExtend = 4;

// d-independent products behind D_inf for one wavelet and truncation.
//   self[g * width + l + l_max]  = |psi_hat(lambda_g + 2 pi l)|^2
//   rest[i * 2 l_max + slot(m)]  = conj(phi_hat) psi_hat at y_i + 2 pi m, m != 0,
// with y_i = -pi + (i - kExtend) 2 pi / grid.
struct WaveletTables {
  int grid = 0;
  int l_max = 0;
  std::vector<double> self;
  std::vector<cd> rest;
};

using TableKey = std::tuple<std::vector<double>, int, int>;

std::shared_ptr<const WaveletTables> wavelet_tables(const WaveletSpec& spec, int grid, int l_max) {
  static std::mutex mutex;
  static std::map<TableKey, std::shared_ptr<const WaveletTables>> cache;
  TableKey key{spec.lowpass, grid, l_max};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double mu = lowpass_mean(spec);
  auto t = std::make_shared<WaveletTables>();
  t->grid = grid;
  t->l_max = l_max;
  const std::size_t width = 2 * static_cast<std::size_t>(l_max) + 1;
  t->self.resize(static_cast<std::size_t>(grid) * width);
  parallel_for(static_cast<std::size_t>(grid), 0, [&](std::size_t g) {
    const double lambda = grid_lambda(static_cast<int>(g), grid);
    for (int l = -l_max; l <= l_max; ++l) {
      t->self[g * width + static_cast<std::size_t>(l + l_max)] =
          std::norm(psi_hat_with_mean(lambda + 2.0 * kPi * l, spec, mu));
    }
  });
  const std::size_t points = static_cast<std::size_t>(grid + 2 * kExtend + 1);
  const std::size_t slots = 2 * static_cast<std::size_t>(l_max);
  const double h = 2.0 * kPi / grid;
  t->rest.resize(points * slots);
  parallel_for(points, 0, [&](std::size_t i) {
    const double y = -kPi + (static_cast<double>(i) - kExtend) * h;
    std::size_t slot = 0;
    for (int m = -l_max; m <= l_max; ++m) {
      if (m == 0) continue;
      t->rest[i * slots + slot++] = phi_psi_product(y + 2.0 * kPi * m, spec, mu);
    }
  });
  std::lock_guard lock(mutex);
  return cache.emplace(std::move(key), std::move(t)).first->second;
}

// Per scale gap u >= 1 on the grid eta_k = -2^u pi + (k + 1/2) 2 pi / grid,
// k < 2^u grid: conj(A_u(eta_k)) and the m = 0 product at y_k = eta_k 2^-u.
struct LevelTables {
  std::vector<cd> conj_transfer;
  std::vector<cd> center;
};

using LevelKey = std::tuple<std::vector<double>, int, int>;

std::shared_ptr<const LevelTables> level_tables(const WaveletSpec& spec, int grid, int u) {
  static std::mutex mutex;
  static std::map<LevelKey, std::shared_ptr<const LevelTables>> cache;
  LevelKey key{spec.lowpass, grid, u};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double mu = lowpass_mean(spec);
  const std::size_t size = static_cast<std::size_t>(grid) << u;
  const double top = std::ldexp(kPi, u);
  const double h = 2.0 * kPi / grid;
  auto t = std::make_shared<LevelTables>();
  t->conj_transfer.resize(size);
  t->center.resize(size);
  parallel_for(size, 0, [&](std::size_t k) {
    const double eta = -top + (static_cast<double>(k) + 0.5) * h;
    t->conj_transfer[k] = std::conj(scale_transfer(eta, u, spec));
    t->center[k] = phi_psi_product(std::ldexp(eta, -u), spec, mu);
  });
  std::lock_guard lock(mutex);
  return cache.emplace(std::move(key), std::move(t)).first->second;
}

// Six-point Lagrange interpolation on the extended uniform y grid.
cd interpolate_rest(const std::vector<cd>& values, int grid, double y) {
  const double h = 2.0 * kPi / grid;
  const double t = (y + kPi) / h + kExtend;
  int i0 = static_cast<int>(std::floor(t)) - 2;
  i0 = std::clamp(i0, 0, static_cast<int>(values.size()) - 6);
  cd out = 0.0;
  for (int j = 0; j < 6; ++j) {
    double w = 1.0;
    for (int k = 0; k < 6; ++k) {
      if (k != j) w *= (t - (i0 + k)) / static_cast<double>(j - k);
    }
    out += w * values[static_cast<std::size_t>(i0 + j)];
  }
  return out;
}

// Folded between-scale density for one d.
//   u = 0:  P(lambda_g) = sum_l |xi|^{-2d} |psi_hat(xi)|^2, xi = lambda_g + 2 pi l
//   u >= 1: P(eta_k) = sum_l |xi|^{-2d} conj(psi_hat(xi)) psi_hat(2^-u xi),
//           xi = eta_k + 2^{u+1} pi l, |l| <= l_max,
// so that int D^{(r)}_u(lambda) e^{i lambda tau} dlambda equals
// 2^{-u/2} int P(eta) e^{i eta (tau - r 2^-u)} deta.
class FoldedDensity {
 public:
  FoldedDensity(double d, const WaveletSpec& spec, int grid, int l_max)
      : d_(d), spec_(spec), grid_(grid), l_max_(l_max),
        tables_(wavelet_tables(spec, grid, l_max)) {
    const std::size_t width = 2 * static_cast<std::size_t>(l_max) + 1;
    base_.assign(static_cast<std::size_t>(grid), 0.0);
    for (int g = 0; g < grid; ++g) {
      const double lambda = grid_lambda(g, grid);
      double acc = 0.0;
      for (int l = -l_max; l <= l_max; ++l) {
        acc += std::pow(std::abs(lambda + 2.0 * kPi * l), -2.0 * d) *
               tables_->self[static_cast<std::size_t>(g) * width + static_cast<std::size_t>(l + l_max)];
      }
      base_[static_cast<std::size_t>(g)] = acc;
    }
    const std::size_t points = static_cast<std::size_t>(grid + 2 * kExtend + 1);
    const std::size_t slots = 2 * static_cast<std::size_t>(l_max);
    const double h = 2.0 * kPi / grid;
    rest_.assign(points, 0.0);
    for (std::size_t i = 0; i < points; ++i) {
      const double y = -kPi + (static_cast<double>(i) - kExtend) * h;
      cd acc = 0.0;
      std::size_t slot = 0;
      for (int m = -l_max; m <= l_max; ++m) {
        if (m == 0) continue;
        acc += std::pow(std::abs(y + 2.0 * kPi * m), -2.0 * d) * tables_->rest[i * slots + slot++];
      }
      rest_[i] = acc;
    }
  }

  std::vector<cd> level(int u) const {
    if (u == 0) return {base_.begin(), base_.end()};
    const auto lv = level_tables(spec_, grid_, u);
    const std::size_t size = lv->center.size();
    const double top = std::ldexp(kPi, u);
    const double h = 2.0 * kPi / grid_;
    const double scale = std::pow(2.0, -2.0 * u * d_);
    std::vector<cd> out(size);
    for (std::size_t k = 0; k < size; ++k) {
      const double y = std::ldexp(-top + (static_cast<double>(k) + 0.5) * h, -u);
      const cd q = std::pow(std::abs(y), -2.0 * d_) * lv->center[k] + interpolate_rest(rest_, grid_, y);
      out[k] = scale * lv->conj_transfer[k] * q;
    }
    return out;
  }

  // Largest increment from l_max < |l| <= 2 l_max at 16 probe points,
  // relative to the largest modulus of `folded` (u = 0) or of its l = 0
  // term (u >= 1; the folded sum itself vanishes at d = 0 by orthogonality).
  double tail_ratio(int u, const std::vector<cd>& folded) const {
    const double mu = lowpass_mean(spec_);
    double peak = 0.0;
    if (u == 0) {
      for (const cd& v : folded) peak = std::max(peak, std::abs(v));
    } else {
      const auto lv = level_tables(spec_, grid_, u);
      const double scale = std::pow(2.0, -2.0 * u * d_);
      for (std::size_t k = 0; k < folded.size(); ++k) {
        const double y = std::ldexp(-std::ldexp(kPi, u) + (static_cast<double>(k) + 0.5) * 2.0 * kPi / grid_, -u);
        peak = std::max(peak, scale * std::abs(lv->conj_transfer[k] * lv->center[k]) *
                                  std::pow(std::abs(y), -2.0 * d_));
      }
    }
    const std::size_t size = folded.size();
    const double top = std::ldexp(kPi, u);
    const double h = 2.0 * kPi / grid_;
    constexpr int kProbes = 16;
    double worst = 0.0;
    for (int probe = 0; probe < kProbes; ++probe) {
      const std::size_t k = (static_cast<std::size_t>(probe) * size) / kProbes + size / (2 * kProbes);
      const double eta = -top + (static_cast<double>(k) + 0.5) * h;
      double inc = 0.0;
      if (u == 0) {
        for (int l = l_max_ + 1; l <= 2 * l_max_; ++l) {
          for (int sign : {-1, 1}) {
            const double xi = eta + 2.0 * kPi * sign * l;
            inc += std::pow(std::abs(xi), -2.0 * d_) * std::norm(psi_hat_with_mean(xi, spec_, mu));
          }
        }
      } else {
        const double y = std::ldexp(eta, -u);
        cd acc = 0.0;
        for (int m = l_max_ + 1; m <= 2 * l_max_; ++m) {
          for (int sign : {-1, 1}) {
            const double x = y + 2.0 * kPi * sign * m;
            acc += std::pow(std::abs(x), -2.0 * d_) * phi_psi_product(x, spec_, mu);
          }
        }
        inc = std::pow(2.0, -2.0 * u * d_) * std::abs(scale_transfer(eta, u, spec_)) * std::abs(acc);
      }
      worst = std::max(worst, inc);
    }
    return peak > 0.0 ? worst / peak : worst;
  }

 private:
  double d_;
  WaveletSpec spec_;
  int grid_;
  int l_max_;
  std::shared_ptr<const WaveletTables> tables_;
  std::vector<double> base_;
  std::vector<cd> rest_;
};

void require_finite_d(double d) {
  if (!std::isfinite(d)) throw DomainError("memory parameter must be finite");
}

void require_below_vanishing_moments(double d, const WaveletSpec& spec) {
  if (d >= spec.vanishing_moments + 0.5) {
    std::ostringstream msg;
    msg << "d = " << d << " makes int |xi|^{-2d} |psi_hat|^2 diverge at 0 (needs d < M + 1/2 = "
        << spec.vanishing_moments + 0.5 << ")";
    throw DomainError(msg.str());
  }
}

void require_tail(double ratio, double d, int u, int l_max) {
  if (!(ratio < 1e-2)) {
    std::ostringstream msg;
    msg << "aliasing sum for D_inf does not converge at d = " << d << ", u = " << u
        << " (tail ratio " << ratio << " at l_max = " << l_max << ")";
    throw DomainError(msg.str());
  }
}

constexpr int kMaxGap = 12;

// Coefficient weights c_p^2 / p! for p = 0..p_max.
std::vector<double> hermite_weights(EstimatorKind kind, int p_max) {
  std::vector<double> out(static_cast<std::size_t>(p_max) + 1, 0.0);
  if (kind == EstimatorKind::cl) {
    if (p_max >= 2) out[2] = 0.5;
    return out;
  }
  const std::vector<double> a = normalized_hermite_coeffs(kind, p_max);
  for (int p = 2; p <= p_max; ++p) out[static_cast<std::size_t>(p)] = a[p] * a[p];
  return out;
}

double hermite_series(const std::vector<double>& weights, double rho) {
  double sum = 0.0, power = rho;
  for (std::size_t p = 2; p < weights.size(); ++p) {
    power *= rho;
    sum += weights[p] * power;
  }
  return sum;
}

void validate_truncation(const Truncation& t) {
  if (t.grid < 64) throw ConfigError("truncation grid must be at least 64");
  if (t.l_max < 10) throw ConfigError("truncation l_max must be at least 10");
  if (t.p_max < 2) throw ConfigError("truncation p_max must be at least 2");
  if (t.tau_max < 1 || 2 * t.tau_max >= t.grid) {
    throw ConfigError("truncation tau_max must lie in [1, grid/2)");
  }
}

struct SeriesSums {
  std::vector<double> by_gap;  // C(u)
  double hermite_residual = 0.0;
  double lag_residual = 0.0;
};

SeriesSums sum_correlations(const BetweenScaleCorrelations& corr, EstimatorKind kind) {
  const Truncation& t = corr.truncation();
  const std::vector<double> weights = hermite_weights(kind, t.p_max);
  const double second_moment = if_second_moment(kind);
  double captured = 0.0;
  for (double w : weights) captured += w;
  const double tail_mass = std::max(0.0, second_moment - captured);
  const int lags = 2 * t.tau_max + 1;

  SeriesSums out;
  out.by_gap.assign(static_cast<std::size_t>(corr.ell()) + 1, 0.0);
  for (int u = 0; u <= corr.ell(); ++u) {
    const std::vector<double>& rho = corr.rho(u);
    const int components = 1 << u;
    double total = 0.0;
    for (int r = 0; r < components; ++r) {
      for (int k = 0; k < lags; ++k) {
        const double v = rho[static_cast<std::size_t>(r * lags + k)];
        const bool self = u == 0 && k == t.tau_max;
        if (self) {
          total += second_moment;
          continue;
        }
        total += hermite_series(weights, v);
        out.hermite_residual += tail_mass * std::pow(std::abs(v), t.p_max + 1);
      }
      const double edge = std::abs(hermite_series(weights, rho[static_cast<std::size_t>(r * lags)])) +
                          std::abs(hermite_series(weights, rho[static_cast<std::size_t>(r * lags + lags - 1)]));
      out.lag_residual += edge * t.tau_max;
    }
    out.by_gap[static_cast<std::size_t>(u)] = total;
  }
  return out;
}

double max_abs_entry(const CovMatrix& c) {
  double m = 0.0;
  for (double v : c.entries) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

std::complex<double> psi_hat(double xi, const WaveletSpec& spec) {
  return psi_hat_with_mean(xi, spec, lowpass_mean(spec));
}

double k_integral(double d, const WaveletSpec& spec, int refinement) {
  require_finite_d(d);
  require_below_vanishing_moments(d, spec);
  if (refinement < 1) throw ConfigError("quadrature refinement must be at least 1");
  const double mu = lowpass_mean(spec);
  auto f = [&](double xi) {
    return std::pow(xi, -2.0 * d) * std::norm(psi_hat_with_mean(xi, spec, mu));
  };
  auto pieces = [&](double a, double b, int count) {
    double sum = 0.0;
    const double w = (b - a) / count;
    for (int i = 0; i < count; ++i) {
      sum += boost::math::quadrature::gauss<double, 30>::integrate(f, a + i * w, a + (i + 1) * w);
    }
    return sum;
  };

  // Octaves below pi, down to where the xi^{2M - 2d} behaviour takes over.
  double low = 0.0;
  double a = kPi;
  for (int k = 0; k < 200; ++k) {
    const double b = a;
    a = b / 2.0;
    const double piece = pieces(a, b, refinement);
    low += piece;
    if (k > 8 && piece < 1e-16 * low) break;
  }
  const double slope = 2.0 * spec.vanishing_moments - 2.0 * d + 1.0;
  low += f(a) * a / slope;

  // Octaves [2^k pi, 2^{k+1} pi] in pieces no wider than the 4 pi period of
  // m1(xi/2), then a geometric tail.
  constexpr int kOctaves = 12;
  double high = 0.0;
  std::vector<double> octave(kOctaves, 0.0);
  for (int k = 0; k < kOctaves; ++k) {
    const int first = 1 << k;
    const int count = std::max(1, first / 4) * refinement;
    octave[static_cast<std::size_t>(k)] = pieces(first * kPi, 2.0 * first * kPi, count);
    high += octave[static_cast<std::size_t>(k)];
  }
  const double ratio = std::pow(octave[kOctaves - 1] / octave[kOctaves - 4], 1.0 / 3.0);
  if (!(ratio < 0.999)) {
    std::ostringstream msg;
    msg << "int |xi|^{-2d} |psi_hat|^2 does not converge at infinity for d = " << d
        << " (octave ratio " << ratio << ")";
    throw DomainError(msg.str());
  }
  high += octave[kOctaves - 1] * ratio / (1.0 - ratio);
  return 2.0 * (low + high);
}

double SpectralTable::max_modulus() const {
  double m = 0.0;
  for (const auto& column : values) {
    for (const auto& v : column) m = std::max(m, std::abs(v));
  }
  return m;
}

SpectralTable d_infinity(int u, double d, const WaveletSpec& spec, int grid, int l_max) {
  if (u < 0) throw RangeError("scale gap u must be non-negative");
  if (u > kMaxGap) throw RangeError("scale gap u must not exceed " + std::to_string(kMaxGap));
  if (l_max < 10) throw ConfigError("l_max must be at least 10");
  if (grid < 8 || grid % 2 != 0) throw ConfigError("grid must be even and at least 8");
  require_finite_d(d);
  require_below_vanishing_moments(d, spec);

  const FoldedDensity density(d, spec, grid, l_max);
  const std::vector<cd> folded = density.level(u);

  SpectralTable table;
  table.u = u;
  table.d = d;
  table.l_max = l_max;
  table.tail_ratio = density.tail_ratio(u, folded);
  require_tail(table.tail_ratio, d, u, l_max);
  table.lambda.resize(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) table.lambda[static_cast<std::size_t>(g)] = grid_lambda(g, grid);

  const int components = 1 << u;
  const double norm = std::pow(2.0, -0.5 * u);
  table.values.assign(static_cast<std::size_t>(components),
                      std::vector<cd>(static_cast<std::size_t>(grid), 0.0));
  // D^{(r)}(lambda) = 2^{-u/2} sum_{l' < 2^u} P(lambda + 2 pi l') e^{-i r (lambda + 2 pi l') 2^-u},
  // where lambda_g + 2 pi l' sits at index g + grid l' + (2^u - 1) grid / 2 of the
  // folded grid for u >= 1 (mod its 2^{u+1} pi period).
  const std::size_t size = folded.size();
  const std::size_t offset = u == 0 ? 0 : (static_cast<std::size_t>(components) - 1) * grid / 2;
  for (int g = 0; g < grid; ++g) {
    const double lambda = table.lambda[static_cast<std::size_t>(g)];
    for (int lp = 0; lp < components; ++lp) {
      const std::size_t k =
          (static_cast<std::size_t>(g) + static_cast<std::size_t>(grid) * lp + offset) % size;
      const double xi = lambda + 2.0 * kPi * lp;
      cd z = norm * folded[k];
      const cd step = std::polar(1.0, -std::ldexp(xi, -u));
      for (int r = 0; r < components; ++r) {
        table.values[static_cast<std::size_t>(r)][static_cast<std::size_t>(g)] += z;
        z *= step;
      }
    }
  }
  return table;
}

BetweenScaleCorrelations::BetweenScaleCorrelations(double d, int ell, const WaveletSpec& spec,
                                                   Truncation trunc)
    : d_(d), ell_(ell), trunc_(trunc) {
  validate_truncation(trunc);
  if (ell < 0) throw RangeError("ell must be non-negative");
  if (ell > kMaxGap) throw RangeError("ell must not exceed " + std::to_string(kMaxGap));
  require_finite_d(d);
  require_below_vanishing_moments(d, spec);
  const int grid = trunc.grid;
  const int lags = 2 * trunc.tau_max + 1;
  const double step = 2.0 * kPi / grid;
  rho_.resize(static_cast<std::size_t>(ell) + 1);
  coef_.resize(static_cast<std::size_t>(ell) + 1);
  sq_norm_.resize(static_cast<std::size_t>(ell) + 1);

  const FoldedDensity density(d, spec, grid, trunc.l_max);
  for (int u = 0; u <= ell; ++u) {
    std::vector<cd> folded = density.level(u);
    const double tail = density.tail_ratio(u, folded);
    require_tail(tail, d, u, trunc.l_max);
    tail_ratio_ = std::max(tail_ratio_, tail);
    double sq = 0.0;
    for (const cd& v : folded) sq += std::norm(v);
    sq_norm_[static_cast<std::size_t>(u)] = step * sq;

    const long long size = static_cast<long long>(folded.size());
    fft_inplace(folded, true);
    const int components = 1 << u;
    const double norm = std::pow(2.0, -0.5 * u);
    auto& coef = coef_[static_cast<std::size_t>(u)];
    coef.assign(static_cast<std::size_t>(components) * lags, 0.0);
    for (int r = 0; r < components; ++r) {
      for (int tau = -trunc.tau_max; tau <= trunc.tau_max; ++tau) {
        // lag s = m 2^-u with m = tau 2^u - r; eta_k = -2^u pi + step (k + 1/2)
        const long long m = static_cast<long long>(tau) * components - r;
        const long long idx = ((m % size) + size) % size;
        const cd phase =
            std::polar(1.0, kPi * static_cast<double>(m) * (1.0 / static_cast<double>(size) - 1.0));
        const cd a = norm * step * phase * folded[static_cast<std::size_t>(idx)];
        coef[static_cast<std::size_t>(r * lags + tau + trunc.tau_max)] = a.real();
        imag_residual_ = std::max(imag_residual_, std::abs(a.imag()));
      }
    }
    if (u == 0) k_grid_ = coef[static_cast<std::size_t>(trunc.tau_max)];
  }
  if (!(k_grid_ > 0.0)) throw NumericError("K(d) from the spectral grid is not positive");
  imag_residual_ /= k_grid_;

  for (int u = 0; u <= ell; ++u) {
    const double scale = std::pow(2.0, u * d) / k_grid_;
    auto& rho = rho_[static_cast<std::size_t>(u)];
    const auto& coef = coef_[static_cast<std::size_t>(u)];
    rho.resize(coef.size());
    for (std::size_t k = 0; k < coef.size(); ++k) rho[k] = scale * coef[k];
  }
  rho_[0][static_cast<std::size_t>(trunc.tau_max)] = 1.0;
}

double CovMatrix::min_eigenvalue() const {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = (*this)(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

CovMatrix cov_v(const BetweenScaleCorrelations& corr, EstimatorKind kind) {
  const SeriesSums sums = sum_correlations(corr, kind);
  CovMatrix cov;
  cov.dim = corr.ell() + 1;
  cov.entries.assign(static_cast<std::size_t>(cov.dim * cov.dim), 0.0);
  cov.kind = kind;
  cov.flavor = CovFlavor::v;
  cov.truncation = corr.truncation();
  for (int i = 0; i < cov.dim; ++i) {
    for (int j = 0; j < cov.dim; ++j) {
      const int u = std::abs(i - j);
      cov(i, j) = 4.0 * std::ldexp(1.0, std::min(i, j)) * sums.by_gap[static_cast<std::size_t>(u)];
    }
  }
  const double scale = max_abs_entry(cov);
  const double spread = 4.0 * std::ldexp(1.0, corr.ell());
  cov.residual = scale > 0.0 ? spread * (sums.hermite_residual + sums.lag_residual) / scale : 0.0;
  return cov;
}

CovMatrix cov_v(double d, int ell, EstimatorKind kind, const WaveletSpec& spec, Truncation trunc) {
  return cov_v(BetweenScaleCorrelations(d, ell, spec, trunc), kind);
}

CovMatrix cov_u(const BetweenScaleCorrelations& corr, EstimatorKind kind, double fstar0) {
  // Evaluated from the raw Fourier coefficients, term by term in p.
  const Truncation& t = corr.truncation();
  const std::vector<double> weights = hermite_weights(kind, t.p_max);
  const double k = corr.k_grid();
  const double d = corr.d();

  std::vector<std::vector<double>> power_sums(static_cast<std::size_t>(corr.ell()) + 1,
                                              std::vector<double>(weights.size(), 0.0));
  for (int u = 0; u <= corr.ell(); ++u) {
    const auto& coef = corr.coefficients(u);
    auto& sums = power_sums[static_cast<std::size_t>(u)];
    for (std::size_t idx = 0; idx < coef.size(); ++idx) {
      if (u == 0 && idx == static_cast<std::size_t>(t.tau_max)) continue;
      double power = coef[idx];
      for (std::size_t p = 2; p < weights.size(); ++p) {
        power *= coef[idx];
        sums[p] += power;
      }
    }
  }

  CovMatrix cov;
  cov.dim = corr.ell() + 1;
  cov.entries.assign(static_cast<std::size_t>(cov.dim * cov.dim), 0.0);
  cov.kind = kind;
  cov.flavor = CovFlavor::u;
  cov.truncation = t;
  const double prefactor = 4.0 * fstar0 * fstar0;
  for (int i = 0; i < cov.dim; ++i) {
    for (int j = 0; j < cov.dim; ++j) {
      const int hi = std::max(i, j), lo = std::min(i, j), u = hi - lo;
      double total = 0.0;
      for (std::size_t p = 2; p < weights.size(); ++p) {
        if (weights[p] == 0.0) continue;
        const double pp = static_cast<double>(p);
        const double exponent = d * (2.0 + pp) * hi + d * (2.0 - pp) * lo + lo;
        total += weights[p] / std::pow(k, pp - 2.0) * std::pow(2.0, exponent) *
                 power_sums[static_cast<std::size_t>(u)][p];
      }
      if (u == 0) {
        // lag-0 self term, carried in full
        total += k * k * if_second_moment(kind) * std::pow(2.0, 4.0 * d * hi + lo);
      }
      cov(i, j) = prefactor * total;
    }
  }
  const CovMatrix v = cov_v(corr, kind);
  cov.residual = v.residual;
  return cov;
}

CovMatrix cov_u(double d, int ell, EstimatorKind kind, double fstar0, const WaveletSpec& spec,
                Truncation trunc) {
  return cov_u(BetweenScaleCorrelations(d, ell, spec, trunc), kind, fstar0);
}

CovMatrix cov_u_cl_closed_form(const BetweenScaleCorrelations& corr, double fstar0) {
  CovMatrix cov;
  cov.dim = corr.ell() + 1;
  cov.entries.assign(static_cast<std::size_t>(cov.dim * cov.dim), 0.0);
  cov.kind = EstimatorKind::cl;
  cov.flavor = CovFlavor::u;
  cov.truncation = corr.truncation();
  for (int i = 0; i < cov.dim; ++i) {
    for (int j = 0; j < cov.dim; ++j) {
      const int hi = std::max(i, j), lo = std::min(i, j);
      cov(i, j) = 4.0 * kPi * fstar0 * fstar0 * std::pow(2.0, 4.0 * corr.d() * hi + lo) *
                  corr.squared_norm_integral(hi - lo);
    }
  }
  return cov;
}

double quadratic_form(const CovMatrix& cov, const RegressionWeights& weights) {
  if (static_cast<int>(weights.w.size()) != cov.dim) {
    throw InputError("weight vector length does not match the covariance dimension");
  }
  double q = 0.0;
  for (int i = 0; i < cov.dim; ++i) {
    for (int j = 0; j < cov.dim; ++j) q += weights.w[i] * cov(i, j) * weights.w[j];
  }
  return q;
}

double asymptotic_relative_efficiency(const BetweenScaleCorrelations& corr, EstimatorKind kind) {
  const RegressionWeights w = default_weights(corr.ell());
  return quadratic_form(cov_v(corr, EstimatorKind::cl), w) / quadratic_form(cov_v(corr, kind), w);
}

std::vector<std::vector<double>> simulate_standardized_errors(
    double d, std::size_t n, int j0, int ell, const std::vector<EstimatorKind>& kinds, int reps,
    std::uint64_t seed, const WaveletSpec& spec, unsigned threads, QnConvention qn) {
  if (reps < 1) throw InputError("replication count must be positive");
  if (j0 < 1 || ell < 1) throw RangeError("need j0 >= 1 and ell >= 1");
  const ArfimaSampler sampler(d, n);
  const double root = std::sqrt(std::ldexp(static_cast<double>(n), -j0));
  std::vector<std::vector<double>> out(kinds.size(), std::vector<double>(static_cast<std::size_t>(reps)));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const TimeSeries x = sampler.sample(derive_seed(seed, r));
    const ScalePyramid pyr = decompose(x.values, spec, j0 + ell);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      out[k][r] = root * (estimate_d(pyr, j0, ell, kinds[k], qn).d_hat - d);
    }
  });
  return out;
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) throw InputError("sample variance needs at least two values");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

double mc_variance(double d, std::size_t n, int j0, int ell, EstimatorKind kind, int reps,
                   std::uint64_t seed, const WaveletSpec& spec, unsigned threads) {
  if (reps < 50) throw InputError("mc_variance needs at least 50 replications");
  return sample_variance(
      simulate_standardized_errors(d, n, j0, ell, {kind}, reps, seed, spec, threads)[0]);
}

double mc_variance(double d, std::size_t n, int j0, int ell, EstimatorKind kind, int reps,
                   std::uint64_t seed, unsigned threads) {
  return mc_variance(d, n, j0, ell, kind, reps, seed,
                     daubechies_spec(default_vanishing_moments(d)), threads);
}

bool rate_condition_holds(std::size_t n, int j0, double beta) {
  return static_cast<double>(n) * std::pow(2.0, -(1.0 + 2.0 * beta) * j0) < 1.0;
}

}  // namespace waverobe
