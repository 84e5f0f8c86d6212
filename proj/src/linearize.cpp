#include "varlin/linearize.hpp"

#include <algorithm>
#include <cmath>

#include "varlin/calibration.hpp"
#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/numeric.hpp"
#include "varlin/parallel.hpp"

namespace varlin {

int find_separation(const std::vector<double>& rho, int n) {
  if (int(rho.size()) < n + 1) throw PreconditionError("rho sequence must cover lags 1..n");
  for (int r = 1; r <= n; ++r) {
    double s = 0;
    for (int m = 1; m * r <= n; ++m) s += rho[size_t(m * r)];
    if (s <= 0.25 + 1e-15) return r;
  }
  throw PreconditionError("infeasible mixing: no separation lag r <= n satisfies the 1/4 bound");
}

GrowthConstants growth_constants(const MixingProfile& profile, double K, double sigma,
                                 double beta, double p0, double eps0, double little_o_factor) {
  GrowthConstants g;
  g.K = K;
  g.sigma = sigma;
  g.beta = beta;
  g.p0 = p0;
  g.eps0 = eps0;
  g.little_o_factor = little_o_factor;
  Accum sr;
  for (int j = 1; j <= profile.n; ++j) sr.add(profile.rho[size_t(j)]);
  g.sum_rho = sr.value();
  g.r = find_separation(profile.rho, profile.n);
  g.C = 2.0 * K * g.sum_rho;
  g.D = 1.0 + 2.0 * g.sum_rho;
  g.Q = 2.0 * K * K * g.D * double(g.r) + 4.0 * g.C * K * std::sqrt(g.D * double(g.r));
  g.qn_floor_ok = g.Q >= eps0;
  g.qn_little_o_ok = g.Q <= little_o_factor * sigma * sigma;
  return g;
}

namespace {

struct CoreScan {
  int start = 0, end = 0;
  double variance = 0, short_variance = 0;
  bool found = false;
};

CoreScan scan_core(const ArrayModel& m, int start, double A) {
  CoreScan out;
  out.start = start;
  PrefixVarianceScanner sc(m, start);
  double prev = 0;
  while (sc.advance()) {
    if (sc.variance() >= A) {
      out.end = sc.end();
      out.variance = sc.variance();
      out.short_variance = prev;
      out.found = true;
      return out;
    }
    prev = sc.variance();
  }
  return out;
}

void fill_block_stats(const ArrayModel& m, Block& blk) {
  PrefixVarianceScanner sc(m, blk.a);
  blk.max_intermediate = 0;
  while (sc.end() < blk.b && sc.advance()) {
    blk.max_intermediate = std::max(blk.max_intermediate, sc.variance());
    if (sc.end() == blk.core_end) blk.core_variance = sc.variance();
    if (sc.end() == blk.b) blk.variance = sc.variance();
  }
}

BlockPartition greedy_blocks(const ArrayModel& m, const GrowthConstants& gc, int n,
                             bool absorb_tail) {
  const double A = 2.0 * gc.Q;
  BlockPartition part;
  part.n = n;
  part.r = gc.r;
  part.Q = gc.Q;
  part.A = A;
  part.total_variance = variance_of_range(m, 1, n);
  if (!gc.qn_floor_ok)
    throw PreconditionError("growth constants invalid: Q below the configured floor");
  if (part.total_variance < 2.0 * A)
    throw PreconditionError("degenerate variance: Var(S_n) = " + fmt_double(part.total_variance) +
                            " < 2 A = " + fmt_double(2.0 * A));

  std::vector<CoreScan> cores;
  int start = 1;
  while (start <= n) {
    CoreScan cs = scan_core(m, start, A);
    if (!cs.found) break;
    cores.push_back(cs);
    start = cs.end + gc.r + 1;
  }
  if (cores.empty()) throw InvariantError("no core reached the target variance");

  for (size_t i = 0; i < cores.size(); ++i) {
    Block blk;
    blk.a = cores[i].start;
    blk.core_end = cores[i].end;
    blk.core_short_variance = cores[i].short_variance;
    if (i + 1 < cores.size())
      blk.b = cores[i + 1].start - 1;
    else
      blk.b = absorb_tail ? n : std::min(n, cores[i].end + gc.r);
    fill_block_stats(m, blk);
    part.blocks.push_back(blk);
  }
  return part;
}

double rel_tol(double scale) { return 1e-9 * std::max(1.0, std::fabs(scale)); }

void assert_partition_invariants(const BlockPartition& p, bool absorbed) {
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const Block& b = p.blocks[i];
    if (b.variance < p.Q - rel_tol(p.Q))
      throw InvariantError("block " + fmt_int(int(i) + 1) + " variance " + fmt_double(b.variance) +
                           " below Q = " + fmt_double(p.Q));
    if (b.max_intermediate > 9.0 * p.Q + rel_tol(9.0 * p.Q))
      throw InvariantError("block " + fmt_int(int(i) + 1) + " intermediate variance " +
                           fmt_double(b.max_intermediate) + " above 9Q = " + fmt_double(9.0 * p.Q));
  }
  if (absorbed) {
    double k = double(p.k());
    if (p.Q * k > p.total_variance + rel_tol(p.total_variance) ||
        p.total_variance > 18.0 * p.Q * k + rel_tol(18.0 * p.Q * k))
      throw InvariantError("variance sandwich failed: Q k = " + fmt_double(p.Q * k) +
                           ", Var = " + fmt_double(p.total_variance) +
                           ", 18 Q k = " + fmt_double(18.0 * p.Q * k));
  }
}

}  // namespace

BlockPartition partition_blocks(const ArrayModel& m, const GrowthConstants& gc, int n) {
  if (n < 1 || n > m.n) throw PreconditionError("partition length outside the model row");
  BlockPartition p = greedy_blocks(m, gc, n, true);
  assert_partition_invariants(p, true);
  return p;
}

std::vector<CheckRow> verify_partition(const ArrayModel& m, const BlockPartition& p,
                                       const GrowthConstants& gc) {
  std::vector<CheckRow> rows;
  const int n = p.n;
  std::vector<double> core_mask(size_t(n) + 1, 0.0);
  for (const Block& b : p.blocks)
    for (int j = b.a; j <= b.core_end; ++j) core_mask[size_t(j)] = 1.0;
  std::vector<double> core_prefix = masked_prefix_variances(m, core_mask);
  VarianceProfile vp = variance_profile(m);

  // cumulative core variances
  double cum = 0;
  for (int k = 1; k <= p.k(); ++k) {
    const Block& b = p.blocks[size_t(k) - 1];
    cum += b.core_variance;
    double u = core_prefix[size_t(b.core_end)];
    CheckRow lo{"core_comparability_lower[" + fmt_int(k) + "]", 0.5 * cum, u,
                0.5 * cum <= u + rel_tol(u)};
    CheckRow hi{"core_comparability_upper[" + fmt_int(k) + "]", u, 1.5 * cum,
                u <= 1.5 * cum + rel_tol(cum)};
    rows.push_back(lo);
    rows.push_back(hi);

    double vb = vp.var[size_t(b.b)];
    double ratio_dev = std::fabs(vb / u - 1.0);
    rows.push_back({"prefix_ratio[" + fmt_int(k) + "]", ratio_dev, p.Q / p.A,
                    ratio_dev <= p.Q / p.A + 1e-9});
  }

  // gap covariance bound per block with a nonempty gap
  for (int k = 1; k <= p.k(); ++k) {
    const Block& b = p.blocks[size_t(k) - 1];
    if (b.core_end >= b.b) continue;
    std::vector<double> gap(size_t(n) + 1, 0.0), rest(size_t(n) + 1, 0.0);
    for (int j = 1; j <= n; ++j) {
      bool in_gap = j > b.core_end && j <= b.b;
      gap[size_t(j)] = in_gap ? 1.0 : 0.0;
      rest[size_t(j)] = in_gap ? 0.0 : 1.0;
    }
    double var_gap = masked_variance(m, gap);
    double var_rest = masked_variance(m, rest);
    double cross = 0.5 * (p.total_variance - var_gap - var_rest);
    double rhs = gc.C * std::sqrt(std::max(0.0, var_gap));
    rows.push_back({"gap_covariance[" + fmt_int(k) + "]", std::fabs(cross), rhs,
                    std::fabs(cross) <= rhs + rel_tol(std::sqrt(std::max(1.0, var_gap)))});
  }
  return rows;
}

namespace {

// running mean/variance pair over the replicate axis
struct VarAcc {
  double sum = 0, sumsq = 0;
  void reset() { sum = sumsq = 0; }
  void add(double x) {
    sum += x;
    sumsq += x * x;
  }
  double variance(int r) const {
    double mean = sum / double(r);
    return std::max(0.0, sumsq / double(r) - mean * mean);
  }
  // relative error of a variance estimate from r replicates
  static double se(double var, int r) { return var * std::sqrt(2.0 / double(std::max(2, r - 1))); }
};

}  // namespace

McPartition partition_blocks_mc(const ArrayModel& m, const GrowthConstants& gc, int n,
                                int replicates, uint64_t seed) {
  if (replicates < 100) throw PreconditionError("mc partition needs >= 100 replicates");
  if (!gc.qn_floor_ok)
    throw PreconditionError("growth constants invalid: Q below the configured floor");
  const double A = 2.0 * gc.Q;
  McPartition out;
  BlockPartition& part = out.partition;
  part.n = n;
  part.r = gc.r;
  part.Q = gc.Q;
  part.A = A;

  // index-major sweep: all replicate paths advance one index per step, so
  // memory stays O(replicates)
  std::vector<std::vector<double>> all;
  all.resize(size_t(replicates));
  for (int r = 0; r < replicates; ++r) all[size_t(r)] = sample_path(m, n, seed, r).values;

  std::vector<double> block_sum(size_t(replicates), 0.0);
  std::vector<double> full_sum(size_t(replicates), 0.0);
  VarAcc acc;
  int start = 1;
  int core_end = 0;
  double core_var = 0, short_var = 0, max_int = 0;
  bool in_gap = false;
  int gap_left = 0;
  std::vector<Block> blocks;
  std::vector<double> ses;
  double prev_var = 0;
  for (int j = 1; j <= n; ++j) {
    acc.reset();
    for (int r = 0; r < replicates; ++r) {
      double v = all[size_t(r)][size_t(j) - 1];
      block_sum[size_t(r)] += v;
      full_sum[size_t(r)] += v;
      acc.add(block_sum[size_t(r)]);
    }
    double var = acc.variance(replicates);
    double se = VarAcc::se(var, replicates);
    max_int = std::max(max_int, var);
    if (!in_gap) {
      if (core_end == 0 && var >= A + 3.0 * se) {
        core_end = j;
        core_var = var;
        short_var = prev_var;
        in_gap = gc.r > 0;
        gap_left = gc.r;
        if (gap_left == 0) in_gap = false;
      }
      prev_var = var;
    } else {
      --gap_left;
    }
    bool close_block = core_end > 0 && ((in_gap && gap_left == 0) || j == n);
    if (close_block || (j == n && core_end > 0)) {
      Block b;
      b.a = start;
      b.b = j;
      b.core_end = core_end;
      b.variance = var;
      b.core_variance = core_var;
      b.core_short_variance = short_var;
      b.max_intermediate = max_int;
      blocks.push_back(b);
      ses.push_back(VarAcc::se(var, replicates));
      start = j + 1;
      core_end = 0;
      core_var = short_var = max_int = prev_var = 0;
      in_gap = false;
      std::fill(block_sum.begin(), block_sum.end(), 0.0);
    }
  }
  if (blocks.empty()) throw PreconditionError("no core reached the guarded target variance");
  // absorb a trailing remainder into the last block
  if (blocks.back().b < n) {
    Block& last = blocks.back();
    std::fill(block_sum.begin(), block_sum.end(), 0.0);
    VarAcc tail;
    double mx = last.max_intermediate;
    for (int j = last.a; j <= n; ++j) {
      tail.reset();
      for (int r = 0; r < replicates; ++r) {
        double v = all[size_t(r)][size_t(j) - 1];
        block_sum[size_t(r)] += v;
        tail.add(block_sum[size_t(r)]);
      }
      mx = std::max(mx, tail.variance(replicates));
    }
    last.b = n;
    last.variance = tail.variance(replicates);
    last.max_intermediate = mx;
    ses.back() = VarAcc::se(last.variance, replicates);
  }
  part.blocks = std::move(blocks);
  out.block_se = std::move(ses);
  VarAcc tot;
  for (int r = 0; r < replicates; ++r) tot.add(full_sum[size_t(r)]);
  part.total_variance = tot.variance(replicates);
  out.total_se = VarAcc::se(part.total_variance, replicates);

  if (part.total_variance < 2.0 * A - 3.0 * out.total_se)
    throw PreconditionError("degenerate variance under the Monte Carlo estimate");
  for (size_t i = 0; i < part.blocks.size(); ++i) {
    const Block& b = part.blocks[i];
    double se = out.block_se[i];
    if (b.variance < gc.Q - 3.0 * se)
      throw InvariantError("mc block " + fmt_int(int(i) + 1) + " variance below Q beyond 3 se");
    if (b.max_intermediate > 9.0 * gc.Q + 3.0 * se)
      throw InvariantError("mc block " + fmt_int(int(i) + 1) + " intermediate above 9Q beyond 3 se");
  }
  double k = double(part.k());
  if (gc.Q * k > part.total_variance + 3.0 * out.total_se ||
      part.total_variance > 18.0 * gc.Q * k + 3.0 * out.total_se)
    throw InvariantError("mc variance sandwich failed beyond 3 se");
  return out;
}

int SequencePartition::k_of(int n) const {
  int k = 0;
  for (const Block& b : partition.blocks)
    if (b.b <= n) ++k;
  return k;
}

SequencePartition sequence_partition(const ArrayModel& m, int n_max) {
  if (n_max < 1 || n_max > m.n) throw PreconditionError("length outside the model row");
  SequencePartition sp;
  MixingProfile prof = dobrushin_phi_profile(m);
  double K = max_l2_norm(m);
  VarianceProfile vp = variance_profile(m);
  sp.constants = growth_constants(prof, K, vp.sigma, 0.0, 0.0, 1e-9);
  sp.partition = greedy_blocks(m, sp.constants, n_max, false);
  assert_partition_invariants(sp.partition, false);

  double a1 = std::numeric_limits<double>::infinity(), a2 = 0;
  for (const Block& b : sp.partition.blocks) {
    a1 = std::min(a1, std::sqrt(b.variance));
    a2 = std::max(a2, std::sqrt(b.max_intermediate));
  }
  sp.A1 = a1;
  sp.A2 = a2;

  // Var(S_{b_k}) against k, pointwise and fitted over the top of the range
  double r1 = std::numeric_limits<double>::infinity(), r2 = 0;
  std::vector<double> xs, ys;
  for (int k = 1; k <= sp.partition.k(); ++k) {
    int bk = sp.partition.blocks[size_t(k) - 1].b;
    double v = vp.var[size_t(bk)];
    r1 = std::min(r1, v / double(k));
    r2 = std::max(r2, v / double(k));
    if (bk >= n_max / 16) {
      xs.push_back(double(k));
      ys.push_back(v);
    }
  }
  sp.R1 = r1;
  sp.R2 = r2;
  sp.slope = xs.size() >= 2 ? fit_line(xs, ys).slope : 0.0;

  for (const Block& b : sp.partition.blocks) {
    double best = 0;
    for (int a = b.a; a <= b.b; ++a) best = std::max(best, variance_of_range(m, a, b.b));
    sp.suffix_l2_max.push_back(std::sqrt(best));
  }
  return sp;
}

BetaEstimate estimate_beta(const ArrayModel& m, const GrowthConstants& gc,
                           const BlockPartition& part, const MixingProfile& profile, double p0,
                           int replicates, uint64_t seed, int threads) {
  if (!(p0 > 2.0)) throw PreconditionError("beta estimation requires p0 > 2");
  if (replicates < 1) throw PreconditionError("need at least one replicate");
  BetaEstimate out;
  const int k = part.k();
  std::vector<std::vector<double>> maxpow;
  maxpow.resize(size_t(replicates));
  parallel_for(size_t(replicates), threads, [&](size_t r) {
    SamplePath path = sample_path(m, part.n, seed, int(r));
    std::vector<double> row(size_t(k), 0.0);
    for (int i = 0; i < k; ++i) {
      const Block& b = part.blocks[size_t(i)];
      double s = 0, mx = 0;
      for (int j = b.a; j <= b.b; ++j) {
        s += path.values[size_t(j) - 1];
        mx = std::max(mx, std::fabs(s));
      }
      row[size_t(i)] = std::pow(mx, p0);
    }
    maxpow[r] = std::move(row);
  });
  double best_mean = 0, best_sd = 0;
  for (int i = 0; i < k; ++i) {
    Accum mean;
    for (int r = 0; r < replicates; ++r) mean.add(maxpow[size_t(r)][size_t(i)]);
    double mu = mean.value() / double(replicates);
    if (mu > best_mean) {
      double ss = 0;
      for (int r = 0; r < replicates; ++r) ss += sqr(maxpow[size_t(r)][size_t(i)] - mu);
      best_mean = mu;
      best_sd = std::sqrt(ss / double(std::max(1, replicates - 1)));
    }
  }
  double root_q = std::sqrt(gc.Q);
  out.beta_hat = std::pow(best_mean, 1.0 / p0) / root_q;
  if (best_mean > 0)
    out.std_error = out.beta_hat * best_sd / (best_mean * p0 * std::sqrt(double(replicates)));

  const double eps = 1.0 / 6.0;
  out.analytic_available = false;
  for (int j = 1; j <= profile.n; ++j) {
    if (profile.phi[size_t(j)] < 0.5 - eps) {
      out.j_n = j;
      out.analytic_available = true;
      break;
    }
  }
  if (out.analytic_available)
    out.beta_analytic = kPeligradCeps * p0 * (1.0 + double(out.j_n) * max_sup_norm(m));
  return out;
}

void save_partition_csv(const BlockPartition& p, const std::string& path) {
  CsvWriter csv(path, "j,a_j,b_j,core_end,block_variance");
  for (int k = 1; k <= p.k(); ++k) {
    const Block& b = p.blocks[size_t(k) - 1];
    csv.row({fmt_int(k), fmt_int(b.a), fmt_int(b.b), fmt_int(b.core_end), fmt_double(b.variance)});
  }
}

void save_checks_csv(const std::vector<CheckRow>& rows, const std::string& path) {
  CsvWriter csv(path, "check_id,lhs,rhs,pass");
  for (const CheckRow& r : rows)
    csv.row({r.id, fmt_double(r.lhs), fmt_double(r.rhs), r.pass ? "1" : "0"});
}

}  // namespace varlin
