#pragma once

namespace waverobe {

// Standard Gaussian helpers evaluated at full double precision.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

/// m(Phi) = 1 / Phi^{-1}(3/4), the Fisher-consistency factor of the MAD.
double mad_constant();

/// c(Phi) = 1 / (sqrt(2) Phi^{-1}(5/8)), the Fisher-consistency factor of Qn.
double qn_constant();

}  // namespace waverobe
