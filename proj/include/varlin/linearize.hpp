#ifndef VARLIN_LINEARIZE_HPP
#define VARLIN_LINEARIZE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

namespace varlin {

struct GrowthConstants {
  double K = 0;  // uniform L2 bound on the summands
  int r = 1;     // separation lag
  double C = 0, D = 1, Q = 0;
  double sum_rho = 0;
  double eps0 = 0;
  double sigma = 0;
  double beta = 0;
  double p0 = 0;
  double little_o_factor = 0.1;
  bool qn_floor_ok = false;     // Q >= eps0
  bool qn_little_o_ok = false;  // Q <= little_o_factor * sigma^2
};

// Minimal r in 1..n with sum_{m=1..floor(n/r)} rho(r m) <= 1/4.
// Throws PreconditionError when no r qualifies (infeasible mixing).
int find_separation(const std::vector<double>& rho, int n);

GrowthConstants growth_constants(const MixingProfile& profile, double K, double sigma,
                                 double beta, double p0, double eps0,
                                 double little_o_factor = 0.1);

struct Block {
  int a = 0, b = 0;       // block interval [a, b]
  int core_end = 0;       // last index of the core
  double variance = 0;    // Var(S_{a..b})
  double core_variance = 0;
  double max_intermediate = 0;       // max over m in [a,b] of Var(S_{a..m})
  double core_short_variance = 0;    // Var of the core minus its last index
};

struct BlockPartition {
  int n = 0;
  int r = 1;
  double Q = 0, A = 0;
  double total_variance = 0;
  std::vector<Block> blocks;
  int k() const { return int(blocks.size()); }
};

// Greedy construction: grow each core until its variance first reaches
// A = 2Q, append an r-lag gap, let the last block absorb the remainder.
// Checks the per-block [Q, 9Q] range and the k-block variance sandwich and
// throws InvariantError on violation.
BlockPartition partition_blocks(const ArrayModel& m, const GrowthConstants& gc, int n);

// Monte Carlo variant for models without an exact oracle (expanding maps):
// the greedy threshold gets a 3-standard-error guard band and the invariant
// checks widen by the same margin.
struct McPartition {
  BlockPartition partition;
  std::vector<double> block_se;  // standard error of each block variance
  double total_se = 0;
};

McPartition partition_blocks_mc(const ArrayModel& m, const GrowthConstants& gc, int n,
                                int replicates, uint64_t seed);

struct CheckRow {
  std::string id;
  double lhs = 0, rhs = 0;
  bool pass = false;
};

// Exact certification of the partition: core-family comparability (1/2, 3/2),
// the prefix variance ratio bound, and the gap covariance bound.
std::vector<CheckRow> verify_partition(const ArrayModel& m, const BlockPartition& p,
                                       const GrowthConstants& gc);

struct SequencePartition {
  BlockPartition partition;   // blocks independent of n, no tail absorption
  GrowthConstants constants;
  double A1 = 0, A2 = 0;      // min block L2 norm, max intermediate L2 norm
  double R1 = 0, R2 = 0;      // pointwise bounds on Var(S_{b_k}) / k
  double slope = 0;           // fitted Var(S_{b_k}) vs k slope over the top 15/16
  std::vector<double> suffix_l2_max;  // per block: max_a ||sum_{k=a..b_j} xi_k||_2
  int k_of(int n) const;      // number of complete blocks within 1..n
};

SequencePartition sequence_partition(const ArrayModel& m, int n_max);

struct BetaEstimate {
  double beta_hat = 0;       // max over block windows of ||max_l |S|||_{p0} / sqrt(Q)
  double std_error = 0;
  double beta_analytic = 0;  // C_eps * p0 * (1 + j_n * K_inf)
  int j_n = 0;
  bool analytic_available = false;
};

BetaEstimate estimate_beta(const ArrayModel& m, const GrowthConstants& gc,
                           const BlockPartition& part, const MixingProfile& profile, double p0,
                           int replicates, uint64_t seed, int threads);

void save_partition_csv(const BlockPartition& p, const std::string& path);
void save_checks_csv(const std::vector<CheckRow>& rows, const std::string& path);

}  // namespace varlin

#endif
