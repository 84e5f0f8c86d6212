#ifndef VARLIN_DIAGNOSTICS_HPP
#define VARLIN_DIAGNOSTICS_HPP

#include <cstdint>
#include <vector>

#include "varlin/linearize.hpp"
#include "varlin/martingale.hpp"
#include "varlin/model.hpp"
#include "varlin/numeric.hpp"
#include "varlin/oracle.hpp"

namespace varlin {

struct RateSeries {
  std::vector<double> n, sigma, stat;
  void push(double n_, double sigma_, double stat_) {
    n.push_back(n_);
    sigma.push_back(sigma_);
    stat.push_back(stat_);
  }
};

// sup_t |P(S/sigma <= t) - Phi(t)|, evaluated at both one-sided limits of
// every lattice jump.
double kolmogorov_to_normal(const LatticePmf& pmf, double sigma, bool* degenerate = nullptr);

// Least-squares slope of log(stat / ln^power sigma) against log sigma.
LineFit rate_fit(const RateSeries& series, double log_correction_power);

struct CumulantGrowth {
  std::vector<double> normalized;  // |Gamma_k(S/sigma)| sigma^{k-2}
  std::vector<bool> excluded;      // below the cancellation floor
  bool bounded = false;
  double max_min_ratio = 0;
};

CumulantGrowth cumulant_growth(const std::vector<LatticePmf>& pmfs,
                               const std::vector<double>& sigmas, int k,
                               double ratio_cap = 10.0);

// |E[S^p] - sigma^p (p-1)!!| / sigma^{p-1} for even p in [4, 12].
double moment_gap(const LatticePmf& pmf, double sigma, int p);

struct MdpPoint {
  double x = 0;
  double value = 0;      // ln P(S >= x sigma a) / a^2
  double deviation = 0;  // |value + x^2/2|
  bool dropped = false;  // tail below the exactness floor
};

std::vector<MdpPoint> mdp_curve(const LatticePmf& pmf, double sigma, double a_n,
                                const std::vector<double>& x_grid);

struct AsipResult {
  std::vector<int> n;
  std::vector<double> quantile;    // empirical 0.99 quantile of |S_n - S_{b_{k_n}}|
  std::vector<double> normalized;  // quantile / V_n^{1/p0 + eps}
  bool non_increasing = false;
};

AsipResult asip_residual(const ArrayModel& m, const SequencePartition& sp,
                         const std::vector<int>& n_grid, int replicates, double p0, double eps,
                         uint64_t seed, int threads);

struct FddResult {
  std::vector<double> t, dk, dkw_radius;
  double cov_err = 0;  // max_{s,t} |Cov(W(s), W(t)) - min(s,t)|
};

FddResult fdd_check(const ArrayModel& m, const BlockPartition& part, const CoboundaryDecomp& dec,
                    const std::vector<double>& t_grid, int replicates, uint64_t seed, int threads);

}  // namespace varlin

#endif
