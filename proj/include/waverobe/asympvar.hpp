#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "waverobe/estimator.hpp"
#include "waverobe/robust_scale.hpp"
#include "waverobe/wavelet.hpp"

namespace waverobe {

/// Fourier transform of the wavelet, int psi(t) exp(-i xi t) dt, from the
/// infinite product of the filter transfer functions.
std::complex<double> psi_hat(double xi, const WaveletSpec& spec);

/// K(d) = int |xi|^{-2d} |psi_hat(xi)|^2 dxi by Gauss-Legendre on dyadic
/// octaves, each split into pieces at most 4 pi / refinement wide. Throws
/// DomainError when the integral diverges (d >= M + 1/2 or a non-decaying tail).
double k_integral(double d, const WaveletSpec& spec, int refinement = 1);

/// Numerical truncation of the infinite sums behind the covariance matrices.
struct Truncation {
  int grid = 2048;     ///< lambda grid size G on (-pi, pi)
  int l_max = 64;      ///< aliasing sum over |l| <= l_max
  int p_max = 20;      ///< Hermite expansion order
  int tau_max = 512;   ///< lag sum over |tau| <= tau_max
};

/// D_{infinity,u}(lambda; d) sampled on the midpoint grid
/// lambda_g = -pi + 2 pi (g + 1/2) / G.
struct SpectralTable {
  int u = 0;
  double d = 0.0;
  int l_max = 0;
  std::vector<double> lambda;
  /// values[r][g] for r = 0..2^u - 1.
  std::vector<std::vector<std::complex<double>>> values;
  /// Largest modulus of the |l| in (l_max, 2 l_max] increment relative to the
  /// largest modulus of the table, probed on a subgrid.
  double tail_ratio = 0.0;

  int grid() const { return static_cast<int>(lambda.size()); }
  double max_modulus() const;
};

SpectralTable d_infinity(int u, double d, const WaveletSpec& spec, int grid = 2048,
                         int l_max = 64);

/// Normalized between-scale correlations
/// rho_u(r, tau) = 2^{u d} int D^{(r)}_{inf,u}(lambda; d) e^{i lambda tau} dlambda / K(d)
/// for u = 0..ell, computed once and shared by every estimator kind.
class BetweenScaleCorrelations {
 public:
  BetweenScaleCorrelations(double d, int ell, const WaveletSpec& spec, Truncation trunc = {});

  double d() const { return d_; }
  int ell() const { return ell_; }
  const Truncation& truncation() const { return trunc_; }
  /// K(d) from the grid, int_{-pi}^{pi} D_{inf,0}.
  double k_grid() const { return k_grid_; }
  /// rho[u][r * (2 tau_max + 1) + tau + tau_max]
  const std::vector<double>& rho(int u) const { return rho_[static_cast<std::size_t>(u)]; }
  /// Raw Fourier coefficients int D^{(r)} e^{i lambda tau} (real parts), same layout.
  const std::vector<double>& coefficients(int u) const { return coef_[static_cast<std::size_t>(u)]; }
  /// int_{-pi}^{pi} |D_{inf,u}(lambda)|^2 dlambda by direct grid quadrature.
  double squared_norm_integral(int u) const { return sq_norm_[static_cast<std::size_t>(u)]; }
  /// Largest tail ratio across the spectral tables.
  double tail_ratio() const { return tail_ratio_; }
  /// Largest |imaginary part| seen among the Fourier coefficients.
  double imag_residual() const { return imag_residual_; }

 private:
  double d_;
  int ell_;
  Truncation trunc_;
  double k_grid_ = 0.0;
  double tail_ratio_ = 0.0;
  double imag_residual_ = 0.0;
  std::vector<std::vector<double>> rho_;
  std::vector<std::vector<double>> coef_;
  std::vector<double> sq_norm_;
};

enum class CovFlavor { u, v };

/// Symmetric (ell+1) x (ell+1) covariance matrix, row-major.
struct CovMatrix {
  int dim = 0;
  std::vector<double> entries;
  EstimatorKind kind = EstimatorKind::cl;
  CovFlavor flavor = CovFlavor::v;
  Truncation truncation;
  /// Bound on the neglected Hermite orders and lags, relative to the largest entry.
  double residual = 0.0;

  double operator()(int i, int j) const {
    return entries[static_cast<std::size_t>(i * dim + j)];
  }
  double& operator()(int i, int j) { return entries[static_cast<std::size_t>(i * dim + j)]; }
  double min_eigenvalue() const;
};

/// Limiting covariance U_*(d) of the scale estimates, scaled by f*(0)^2.
CovMatrix cov_u(const BetweenScaleCorrelations& corr, EstimatorKind kind, double fstar0 = 1.0);
CovMatrix cov_u(double d, int ell, EstimatorKind kind, double fstar0, const WaveletSpec& spec,
                Truncation trunc = {});

/// Closed form of U_CL: 4 pi f*(0)^2 2^{4d(i v j) + (i ^ j)} int |D_{inf,|i-j|}|^2.
CovMatrix cov_u_cl_closed_form(const BetweenScaleCorrelations& corr, double fstar0 = 1.0);

/// Limiting covariance V_*(d) of the log-scale estimates; free of f*(0).
CovMatrix cov_v(const BetweenScaleCorrelations& corr, EstimatorKind kind);
CovMatrix cov_v(double d, int ell, EstimatorKind kind, const WaveletSpec& spec,
                Truncation trunc = {});

/// w^T C w.
double quadratic_form(const CovMatrix& cov, const RegressionWeights& weights);

/// w^T V_CL w / w^T V_* w with default weights.
double asymptotic_relative_efficiency(const BetweenScaleCorrelations& corr, EstimatorKind kind);

/// Standardized errors sqrt(n 2^{-j0}) (d_hat - d) of `reps` independent
/// ARFIMA(0, d, 0) replications, one vector per requested kind (same
/// realizations for every kind). Replication r uses derive_seed(seed, r).
std::vector<std::vector<double>> simulate_standardized_errors(
    double d, std::size_t n, int j0, int ell, const std::vector<EstimatorKind>& kinds, int reps,
    std::uint64_t seed, const WaveletSpec& spec, unsigned threads = 0,
    QnConvention qn = QnConvention::all_pairs);

/// Empirical variance of sqrt(n 2^{-j0}) (d_hat - d). Uses M = 2 for d <= 2
/// and M = 4 otherwise unless a spec is given.
double mc_variance(double d, std::size_t n, int j0, int ell, EstimatorKind kind, int reps,
                   std::uint64_t seed, unsigned threads = 0);
double mc_variance(double d, std::size_t n, int j0, int ell, EstimatorKind kind, int reps,
                   std::uint64_t seed, const WaveletSpec& spec, unsigned threads = 0);

/// n 2^{-(1 + 2 beta) j0} < 1, the bias-negligibility condition for a
/// given smoothness beta of the short-memory part.
bool rate_condition_holds(std::size_t n, int j0, double beta);

/// Unbiased sample variance.
double sample_variance(const std::vector<double>& x);

}  // namespace waverobe
