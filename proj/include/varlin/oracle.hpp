#ifndef VARLIN_ORACLE_HPP
#define VARLIN_ORACLE_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "varlin/model.hpp"

namespace varlin {

// Law of a partial sum on the value lattice {offset + k*step}.
struct LatticePmf {
  double offset = 0.0;
  double step = 1.0;
  std::vector<double> w;

  double value(size_t i) const { return offset + double(i) * step; }
  double total_mass() const;
  void validate() const;  // mass within 1e-12 of 1, entries >= 0
};

struct VarianceProfile {
  std::vector<double> var;  // var[k] = Var(S_k), k = 0..n
  double sigma = 0.0;       // sqrt(var[n])
};

// Exact law of sum_{j=a..b} xi_j by forward dynamic programming over
// (state, lattice position).  Budget limits the DP table entries.
LatticePmf exact_sum_pmf(const ArrayModel& m, int a, int b, std::size_t budget = std::size_t(1) << 23);

// Exact Var(sum_{j=a..b} xi_j) via the forward (mass, first, second moment)
// recursion; O((b-a) * states^2).
double variance_of_range(const ArrayModel& m, int a, int b);

// Prefix variances Var(S_k) for k = 0..n in one pass.
VarianceProfile variance_profile(const ArrayModel& m);

// Exact Cov(xi_i, xi_j) by propagating the joint law of (state_i, state_j).
double covariance(const ArrayModel& m, int i, int j);

// Exact variance of sum_j mask_j * xi_j (mask indexed 1..n, entry n+1 sized
// vector with [0] unused); one forward pass.
double masked_variance(const ArrayModel& m, const std::vector<double>& mask);

// Variances of all masked prefixes: out[k] = Var(sum_{j<=k} mask_j xi_j).
std::vector<double> masked_prefix_variances(const ArrayModel& m, const std::vector<double>& mask);

// Cov(S_A, S_B) for disjoint masked index sets, by polarization.
double masked_cross_covariance(const ArrayModel& m, const std::vector<double>& mask_a,
                               const std::vector<double>& mask_b);

// Exact marginal law of a single xi_j (window models: joint over the kernel).
LatticePmf marginal_pmf(const ArrayModel& m, int j);

// max_j ||xi_j||_2 and max_j ||xi_j||_p, exact.
double max_l2_norm(const ArrayModel& m);
double max_lp_norm(const ArrayModel& m, double p);
double max_sup_norm(const ArrayModel& m);

struct MomentsCumulants {
  std::vector<double> moment;    // centered moments, index 2..p (index 0,1 unused)
  std::vector<double> cumulant;  // cumulants, same indexing
  double mean = 0.0;
};

// Exact centered moments and cumulants up to order p (2 <= p <= 16).
MomentsCumulants moments_and_cumulants(const LatticePmf& pmf, int p);

// Exact P(S >= t) (upper) or P(S <= t) (lower) by lattice suffix sums.
double tail_probability(const LatticePmf& pmf, double threshold, bool upper);
double log_tail_probability(const LatticePmf& pmf, double threshold, bool upper);

void save_pmf_csv(const LatticePmf& pmf, const std::string& path);
void save_variance_profile_csv(const VarianceProfile& vp, const std::string& path);

// Incremental Var(S_{a..m}) as m grows; drives the greedy block scan.
class PrefixVarianceScanner {
 public:
  PrefixVarianceScanner(const ArrayModel& m, int a);
  ~PrefixVarianceScanner();
  PrefixVarianceScanner(PrefixVarianceScanner&&) noexcept;
  bool advance();          // extend the range end by one index; false past n
  int end() const;         // current b (a-1 before the first advance)
  double variance() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace varlin

#endif
