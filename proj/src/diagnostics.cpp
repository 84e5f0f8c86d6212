#include "varlin/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varlin/errors.hpp"
#include "varlin/parallel.hpp"
#include "varlin/special.hpp"

namespace varlin {

double kolmogorov_to_normal(const LatticePmf& pmf, double sigma, bool* degenerate) {
  if (!(sigma > 0)) throw PreconditionError("sigma must be positive");
  pmf.validate();
  int atoms = 0;
  for (double w : pmf.w)
    if (w > 0) ++atoms;
  if (degenerate) *degenerate = atoms <= 1;
  double best = 0;
  double cum = 0;
  for (size_t i = 0; i < pmf.w.size(); ++i) {
    if (pmf.w[i] == 0.0) continue;
    double t = pmf.value(i) / sigma;
    double phi = normal_cdf(t);
    best = std::max(best, std::fabs(cum - phi));  // left limit
    cum += pmf.w[i];
    best = std::max(best, std::fabs(cum - phi));  // right limit
  }
  return best;
}

LineFit rate_fit(const RateSeries& series, double log_correction_power) {
  if (series.n.size() < 4) throw PreconditionError("rate fit needs at least 4 rows");
  for (size_t i = 1; i < series.sigma.size(); ++i)
    if (!(series.sigma[i] > series.sigma[i - 1]))
      throw PreconditionError("sigma must be strictly increasing across the series");
  std::vector<double> x, y;
  for (size_t i = 0; i < series.n.size(); ++i) {
    double ls = std::log(series.sigma[i]);
    x.push_back(ls);
    y.push_back(std::log(series.stat[i]) - log_correction_power * std::log(ls));
  }
  return fit_line(x, y);
}

CumulantGrowth cumulant_growth(const std::vector<LatticePmf>& pmfs,
                               const std::vector<double>& sigmas, int k, double ratio_cap) {
  if (k < 3 || k > 8) throw PreconditionError("cumulant order must lie in 3..8");
  if (pmfs.size() != sigmas.size() || pmfs.empty())
    throw PreconditionError("series shape mismatch");
  CumulantGrowth out;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pmfs.size(); ++i) {
    MomentsCumulants mc = moments_and_cumulants(pmfs[i], k);
    double gk = mc.cumulant[size_t(k)];
    double floor = 1e-10 * std::pow(mc.moment[2], double(k) / 2.0);
    // Gamma_k(S/sigma) sigma^{k-2} = Gamma_k(S) / sigma^2
    double norm = std::fabs(gk) / (sigmas[i] * sigmas[i]);
    bool excl = std::fabs(gk) < floor;
    out.normalized.push_back(norm);
    out.excluded.push_back(excl);
    if (!excl) {
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
      if (norm > prev + 1e-15) decreasing = false;
      prev = norm;
    }
  }
  if (hi == 0) {  // everything vanished: bounded by convention
    out.bounded = true;
    out.max_min_ratio = 1.0;
    return out;
  }
  out.max_min_ratio = hi / lo;
  out.bounded = out.max_min_ratio <= ratio_cap || decreasing;
  return out;
}

double moment_gap(const LatticePmf& pmf, double sigma, int p) {
  if (p % 2 != 0 || p < 4 || p > 12)
    throw PreconditionError("moment gap requires even p in [4, 12]");
  pmf.validate();
  Accum raw;
  for (size_t i = 0; i < pmf.w.size(); ++i) {
    double v = pmf.value(i);
    double pw = 1;
    for (int q = 0; q < p; ++q) pw *= v;
    raw.add(pmf.w[i] * pw);
  }
  double target = std::pow(sigma, double(p)) * odd_double_factorial(p);
  return std::fabs(raw.value() - target) / std::pow(sigma, double(p) - 1.0);
}

std::vector<MdpPoint> mdp_curve(const LatticePmf& pmf, double sigma, double a_n,
                                const std::vector<double>& x_grid) {
  if (!(a_n >= 1.0)) throw PreconditionError("speed must satisfy a_n >= 1");
  std::vector<MdpPoint> out;
  for (double x : x_grid) {
    MdpPoint pt;
    pt.x = x;
    double threshold = x * sigma * a_n;
    double p = tail_probability(pmf, threshold, true);
    if (p < 1e-280) {
      pt.dropped = true;
    } else {
      pt.value = std::log(p) / (a_n * a_n);
      pt.deviation = std::fabs(pt.value + 0.5 * x * x);
    }
    out.push_back(pt);
  }
  return out;
}

AsipResult asip_residual(const ArrayModel& m, const SequencePartition& sp,
                         const std::vector<int>& n_grid, int replicates, double p0, double eps,
                         uint64_t seed, int threads) {
  if (n_grid.empty()) throw PreconditionError("empty n grid");
  const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
  if (n_max > m.n) throw PreconditionError("n grid exceeds the model row");
  AsipResult out;
  VarianceProfile vp = variance_profile(m);
  std::vector<int> bk_of_n(n_grid.size(), 0);
  for (size_t gi = 0; gi < n_grid.size(); ++gi) {
    int k = sp.k_of(n_grid[gi]);
    bk_of_n[gi] = k == 0 ? 0 : sp.partition.blocks[size_t(k) - 1].b;
  }
  std::vector<std::vector<double>> residual(n_grid.size(),
                                            std::vector<double>(size_t(replicates), 0.0));
  parallel_for(size_t(replicates), threads, [&](size_t r) {
    SamplePath path = sample_path(m, n_max, seed, int(r));
    std::vector<double> prefix(size_t(n_max) + 1, 0.0);
    for (int j = 1; j <= n_max; ++j)
      prefix[size_t(j)] = prefix[size_t(j) - 1] + path.values[size_t(j) - 1];
    for (size_t gi = 0; gi < n_grid.size(); ++gi)
      residual[gi][r] = std::fabs(prefix[size_t(n_grid[gi])] - prefix[size_t(bk_of_n[gi])]);
  });
  bool mono = true;
  double prev = std::numeric_limits<double>::infinity();
  for (size_t gi = 0; gi < n_grid.size(); ++gi) {
    std::vector<double>& res = residual[gi];
    std::sort(res.begin(), res.end());
    size_t idx = size_t(std::ceil(0.99 * double(replicates))) - 1;
    idx = std::min(idx, res.size() - 1);
    double q = res[idx];
    double vn = vp.var[size_t(n_grid[gi])];
    double norm = q / std::pow(vn, 1.0 / p0 + eps);
    out.n.push_back(n_grid[gi]);
    out.quantile.push_back(q);
    out.normalized.push_back(norm);
    if (norm > prev + 1e-12) mono = false;
    prev = norm;
  }
  out.non_increasing = mono;
  return out;
}

FddResult fdd_check(const ArrayModel& m, const BlockPartition& part, const CoboundaryDecomp& dec,
                    const std::vector<double>& t_grid, int replicates, uint64_t seed,
                    int threads) {
  if (replicates < 100) throw PreconditionError("fdd check needs >= 100 replicates");
  for (double t : t_grid)
    if (!(t > 0.0 && t <= 1.0))
      throw PreconditionError("fdd grid must lie in (0, 1]");
  FddResult out;
  VarianceProfile vp = variance_profile(m);
  // v_n(t) at the requested grid
  const int n = part.n;
  std::vector<double> runmax(size_t(n) + 1, 0.0);
  for (int k = 1; k <= n; ++k)
    runmax[size_t(k)] = std::max(runmax[size_t(k) - 1], vp.var[size_t(k)]);
  std::vector<int> v_of(t_grid.size(), 0);
  for (size_t i = 0; i < t_grid.size(); ++i) {
    double target = t_grid[i] * vp.var[size_t(n)];
    int v = int(std::lower_bound(runmax.begin() + 1, runmax.end(), target) - runmax.begin());
    v_of[i] = std::min(v, n);
  }
  std::vector<std::vector<double>> W(t_grid.size(), std::vector<double>(size_t(replicates)));
  parallel_for(size_t(replicates), threads, [&](size_t r) {
    SamplePath path = sample_path(m, n, seed, int(r));
    double s = 0;
    size_t gi = 0;
    std::vector<double> prefix(size_t(n) + 1, 0.0);
    (void)gi;
    for (int j = 1; j <= n; ++j) {
      s += path.values[size_t(j) - 1];
      prefix[size_t(j)] = s;
    }
    for (size_t i = 0; i < t_grid.size(); ++i) W[i][r] = prefix[size_t(v_of[i])] / dec.sigma;
  });
  const double dkw = std::sqrt(std::log(2.0 / 0.05) / (2.0 * double(replicates)));
  for (size_t i = 0; i < t_grid.size(); ++i) {
    std::vector<double> xs = W[i];
    std::sort(xs.begin(), xs.end());
    double root_t = std::sqrt(t_grid[i]);
    double best = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
      double phi = normal_cdf(xs[k] / root_t);
      best = std::max(best, std::fabs(double(k) / double(replicates) - phi));
      best = std::max(best, std::fabs(double(k + 1) / double(replicates) - phi));
    }
    out.t.push_back(t_grid[i]);
    out.dk.push_back(best);
    out.dkw_radius.push_back(dkw);
  }
  // empirical covariance error against min(s, t)
  double err = 0;
  for (size_t i = 0; i < t_grid.size(); ++i)
    for (size_t j2 = i; j2 < t_grid.size(); ++j2) {
      double m1 = 0, m2 = 0, cross = 0;
      for (int r = 0; r < replicates; ++r) {
        m1 += W[i][size_t(r)];
        m2 += W[j2][size_t(r)];
        cross += W[i][size_t(r)] * W[j2][size_t(r)];
      }
      m1 /= double(replicates);
      m2 /= double(replicates);
      double cov = cross / double(replicates) - m1 * m2;
      err = std::max(err, std::fabs(cov - std::min(t_grid[i], t_grid[j2])));
    }
  out.cov_err = err;
  return out;
}

}  // namespace varlin
