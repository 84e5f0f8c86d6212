#ifndef VARLIN_SPECIAL_HPP
#define VARLIN_SPECIAL_HPP

namespace varlin {

// Rational-approximation erf/erfc (Cody's scheme), self-contained so results
// do not depend on the platform libm.  Absolute error below 1e-15 for erf
// and relative below ~1e-13 for erfc on the ranges used here.
double erf_cody(double x);
double erfc_cody(double x);

// Standard normal distribution function, absolute error <= 1e-13.
double normal_cdf(double x);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Chi-square upper tail with k degrees of freedom.
double chi_square_sf(double x, int dof);

}  // namespace varlin

#endif
