#include "varlin/expanding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/numeric.hpp"
#include "varlin/rng.hpp"

namespace varlin {

namespace {

const double kTwoPi = 2.0 * 3.14159265358979323846;

// average of the observable over [a, b)
double interval_average(const ExpandingModel& e, double a, double b) {
  if (b <= a) return e.observable(a);
  switch (e.obs_kind) {
    case 0: return (std::sin(kTwoPi * b) - std::sin(kTwoPi * a)) / (kTwoPi * (b - a));
    case 1: {
      const int cells = int(e.step_values.size());
      double total = 0;
      int c0 = std::min(cells - 1, int(std::floor(a * cells)));
      int c1 = std::min(cells - 1, int(std::floor(b * cells - 1e-15)));
      for (int c = c0; c <= c1; ++c) {
        double lo = std::max(a, double(c) / cells);
        double hi = std::min(b, double(c + 1) / cells);
        if (hi > lo) total += e.step_values[size_t(c)] * (hi - lo);
      }
      return total / (b - a);
    }
    default: return 0.0;
  }
}

}  // namespace

double expanding_conditional_value(const ExpandingModel& e, double x, int j, int depth) {
  // forward symbols of the next `depth` steps
  std::vector<int> sym(size_t(depth), 0);
  double y = x;
  for (int t = 0; t < depth; ++t) {
    double z = double(e.branches) * y + e.shift_at(j + t);
    sym[size_t(t)] = int(std::floor(z));
    y = z - std::floor(z);
    if (y >= 1.0) y = 0.0;
  }
  // backward branch inverses applied to [0, 1)
  double a = 0.0, b = 1.0;
  for (int t = depth - 1; t >= 0; --t) {
    double c = e.shift_at(j + t);
    a = (a + double(sym[size_t(t)]) - c) / double(e.branches);
    b = (b + double(sym[size_t(t)]) - c) / double(e.branches);
  }
  if (b - a < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x)))
    return e.observable(x);  // cylinder below machine resolution: full refinement
  return interval_average(e, a, b);
}

WindowApproxResult window_approximation(const ArrayModel& m, int r, double p, int orbit_points,
                                        uint64_t seed) {
  if (m.kind != ModelKind::SequentialExpanding)
    throw PreconditionError("window approximation applies to expanding-map models");
  if (r < 1) throw PreconditionError("approximation depth must be >= 1");
  validate_model(m);
  const ExpandingModel& e = m.expanding;
  const int n = m.n;

  std::vector<Accum> pw(size_t(n) + 1);
  std::vector<Accum> pw2(size_t(n) + 1);
  for (int rep = 0; rep < orbit_points; ++rep) {
    std::vector<double> orbit = sample_orbit(m, n, seed, rep);
    for (int j = 1; j <= n; ++j) {
      double xi = e.observable(orbit[size_t(j)]);
      double approx = expanding_conditional_value(e, orbit[size_t(j)], j, r);
      double d = std::pow(std::fabs(xi - approx), p);
      pw[size_t(j)].add(d);
      pw2[size_t(j)].add(d * d);
    }
  }
  WindowApproxResult out;
  out.r = r;
  out.p = p;
  double best_mean = -1.0, best_var = 0.0;
  for (int j = 1; j <= n; ++j) {
    double mu = pw[size_t(j)].value() / double(orbit_points);
    if (mu > best_mean) {
      best_mean = mu;
      double m2 = pw2[size_t(j)].value() / double(orbit_points);
      best_var = std::max(0.0, m2 - mu * mu);
      out.argmax_j = j;
    }
  }
  out.beta_hat = std::pow(std::max(0.0, best_mean), 1.0 / p);
  if (best_mean > 0) {
    double se_mean = std::sqrt(best_var / double(orbit_points));
    out.se = out.beta_hat * se_mean / (p * best_mean);
  }
  out.approx = m;
  out.approx.id = m.id + "-approx-r" + fmt_int(r);
  out.approx.expanding.approx_depth = r;
  return out;
}

}  // namespace varlin
