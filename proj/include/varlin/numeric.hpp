#ifndef VARLIN_NUMERIC_HPP
#define VARLIN_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace varlin {

// Neumaier variant of Kahan summation.  Used wherever lattice sums of many
// signed terms feed a tolerance of 1e-9 or tighter.
struct Accum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// (p-1)!! for even p: E[Z^p] of a standard normal.
inline double odd_double_factorial(int p) {
  double r = 1.0;
  for (int k = p - 1; k >= 1; k -= 2) r *= double(k);
  return r;
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, residual_rms = 0.0, slope_se = 0.0;
};

// Least squares y = a + b x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= double(n); my /= double(n);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual_rms = std::sqrt(ss / double(n));
  if (n > 2) f.slope_se = std::sqrt((ss / double(n - 2)) / sxx);
  return f;
}

inline double sqr(double x) { return x * x; }

}  // namespace varlin

#endif
