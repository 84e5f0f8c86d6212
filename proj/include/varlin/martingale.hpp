#ifndef VARLIN_MARTINGALE_HPP
#define VARLIN_MARTINGALE_HPP

#include <cstdint>
#include <vector>

#include "varlin/linearize.hpp"
#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

namespace varlin {

// R_j(s) = E[sum_{s'>j} xi_{s'} | state_j = s], one backward sweep for all j.
std::vector<std::vector<double>> future_conditional_sums(const ArrayModel& m, int n);
std::vector<double> future_conditional_sum(const ArrayModel& m, int j);

// Coboundary pieces d_j = xi_j + R_j - R_{j-1} regrouped over the blocks:
// D_j = Xi_j + R_{b_j} - R_{b_{j-1}} is a martingale difference for the
// block filtration.
struct CoboundaryDecomp {
  int n = 0;
  double sigma = 0;
  double p0 = 0;
  std::vector<std::vector<double>> R;  // R[j][s], j = 1..n (R[0] is the zero scalar)
  double R_p0_norm = 0, R_2_norm = 0;
  // per block, conditional on the state at the previous block end
  std::vector<std::vector<double>> cond_mean;  // E[D_j | s] (block 1: single entry)
  std::vector<std::vector<double>> cond_m2;    // E[D_j^2 | s]
  std::vector<double> d2;                      // E[D_j^2]
  std::vector<double> dp0;                     // E[|D_j|^{p0}]
  double max_abs_cond_mean = 0;
  double mlemma_lhs = 0, mlemma_rhs = 0;  // ||R||_{p0} vs min(K_{p0}, sqrt(Q) beta) Pi_{p0}
};

CoboundaryDecomp martingale_differences(const ArrayModel& m, const BlockPartition& part,
                                        const MixingProfile& profile, const GrowthConstants& gc,
                                        double p0);

// Telescoping residual max_m |sum_{j<=m} d_j - (S_m + R_m - R_0)| along one
// sampled path.
double telescoping_residual(const ArrayModel& m, const CoboundaryDecomp& dec, uint64_t seed,
                            int replicate);

struct TimeChange {
  int v = 1;      // v_n(t)
  int block = 1;  // block containing v_n(t)
  double gap = 0;  // |sigma^2_{b_block} - t sigma^2|
  double gap_bound = 0;
};

TimeChange time_change(const VarianceProfile& vp, const BlockPartition& part,
                       const GrowthConstants& gc, double t);

struct PathGrid {
  std::vector<double> t;
  std::vector<int> v_of_t;
  std::vector<int> j_of_t;  // 1-based block index
};

PathGrid make_path_grid(const VarianceProfile& vp, const BlockPartition& part, int grid_size);

struct PathSample {
  std::vector<double> W, calW, M, QV;  // step functions sampled on the grid
  std::vector<double> block_dev;       // per block: max_{m in B_j} |S_{b_j} - S_m|
  double sup_w_calw = 0;               // sup_t |W - calW| = max_j block_dev_j / sigma
  double sup_calw_m = 0;               // sup_t |calW - M| = max_j |R_{b_j}| / sigma
};

PathSample eval_path_functions(const ArrayModel& m, const BlockPartition& part,
                               const CoboundaryDecomp& dec, const PathGrid& grid, uint64_t seed,
                               int replicate);

struct QuadraticVariation {
  PathGrid grid;
  std::vector<double> mean_qv;   // MC mean of <M>_t on the grid
  double e_qv1_exact = 0;        // sum_j E[D_j^2] / sigma^2
  double e_qv1_mc = 0;
  double ky_fan = 0;             // inf{eps : P(sup_t |<M>_t - t| > eps) < eps}
  double qv1_bound = 0;          // ||sup_t |<M>_t - t|||_{p0/2}^{q/(q+1)}, q = p0/2
  std::vector<double> sup_dev;   // per replicate
  std::vector<double> det_gap;   // |sum_{j<=j_n(t)} E[D_j^2]/sigma^2 - t| on the grid
  double det_gap_sup = 0, det_gap_bound = 0;
  // coupled-pair Prokhorov bounds ||sup_t |Q1 - Q2|||_q^{q/(q+1)}, q = p0,
  // for the pairs (W, calW) and (calW, M) living on the same paths, plus the
  // block-count max-norm route through the per-block norms
  double coupling_w_calw = 0;
  double coupling_w_calw_maxnorm = 0;
  double coupling_calw_m = 0;
};

QuadraticVariation quadratic_variation(const ArrayModel& m, const BlockPartition& part,
                                       const CoboundaryDecomp& dec, const MixingProfile& profile,
                                       const GrowthConstants& gc, int replicates, int grid_size,
                                       uint64_t seed, int threads);

struct MemoryCoefficient {
  bool exact_zero = false;
  double bound = 0;  // tail bound assembled from the mixing profile
};

MemoryCoefficient memory_coefficient(const ArrayModel& m, const MixingProfile& profile,
                                     const GrowthConstants& gc, double p, int mem);

struct SequentialConstants {
  double q_n = 0, a_n = 0, iota_n = 0;
  double Pi_p0 = 0, Pi_p0_half = 0;
  double C1 = 0, A1 = 0, A2 = 0;
  double K_p0 = 0;
  double lyapunov = 0;  // sum_j ||D_j/sigma||_{p0}^{p0}
};

SequentialConstants sequential_constants(const MixingProfile& profile, const GrowthConstants& gc,
                                         double K_p0, double sigma, double p0);

struct RateBounds {
  double frak_q = 0, w = 0;
  double rhs_fclt = 0;     // A1 (sigma^-(p0-2)/(2p0) |ln s|^3/4 + q^{p0/(2p0+4)} |ln q|^1/2)
  double rhs_fclt_mc = 0;  // A2 analog with w
  double memory_term = 0;
};

RateBounds rate_bounds(const GrowthConstants& gc, const SequentialConstants& seq, double l_n,
                       double p0, double r_memory);

struct MaxIneqRow {
  int m = 0;
  double lhs = 0, rhs = 0;  // ||S over m blocks||_p vs (2p sum b_i)^{1/2}
};

// Exact evaluation of the maximal-inequality bound on the block sums.
std::vector<MaxIneqRow> maximal_inequality_check(const ArrayModel& m, const BlockPartition& part,
                                                 double p, int max_blocks);

}  // namespace varlin

#endif
