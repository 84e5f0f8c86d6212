#include "varlin/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varlin/calibration.hpp"
#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/numeric.hpp"
#include "varlin/parallel.hpp"

namespace varlin {

namespace {

void require_chain(const ArrayModel& m) {
  if (m.kind != ModelKind::IidLattice && m.kind != ModelKind::InhomMarkov)
    throw PreconditionError("martingale decomposition requires a finite-state chain model");
}

}  // namespace

std::vector<std::vector<double>> future_conditional_sums(const ArrayModel& m, int n) {
  require_chain(m);
  const ChainCore& c = m.chain;
  const int S = c.num_states;
  std::vector<std::vector<double>> R(size_t(n) + 1);
  R[size_t(n)].assign(size_t(S), 0.0);
  for (int j = n - 1; j >= 1; --j) {
    const Matrix& P = c.step_from(j);
    const std::vector<double>& g = m.obs(j + 1);
    const std::vector<double>& nxt = R[size_t(j) + 1];
    std::vector<double> cur(size_t(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double v = 0;
      for (int s2 = 0; s2 < S; ++s2) v += P(s, s2) * (g[size_t(s2)] + nxt[size_t(s2)]);
      cur[size_t(s)] = v;
    }
    R[size_t(j)] = std::move(cur);
  }
  R[0].assign(1, 0.0);  // empty past: the centered future sum has mean zero
  return R;
}

std::vector<double> future_conditional_sum(const ArrayModel& m, int j) {
  if (j < 1 || j > m.n) throw PreconditionError("index outside the model row");
  return future_conditional_sums(m, m.n)[size_t(j)];
}

namespace {

// forward DP over one block: per end state, mass / E[Xi 1] / E[Xi^2 1],
// conditional on the state right before the block (start_state < 0: root)
struct BlockCond {
  std::vector<double> mass, m1, m2;
};

BlockCond block_forward(const ArrayModel& m, int a, int b, int start_state) {
  const ChainCore& c = m.chain;
  const int S = c.num_states;
  BlockCond st;
  st.mass.assign(size_t(S), 0.0);
  st.m1.assign(size_t(S), 0.0);
  st.m2.assign(size_t(S), 0.0);
  if (start_state < 0) {
    st.mass = c.marginal(a);
  } else {
    const Matrix& P = c.step_from(a - 1);
    for (int s = 0; s < S; ++s) st.mass[size_t(s)] = P(start_state, s);
  }
  const std::vector<double>& g0 = m.obs(a);
  for (int s = 0; s < S; ++s) {
    double v = g0[size_t(s)];
    st.m1[size_t(s)] = v * st.mass[size_t(s)];
    st.m2[size_t(s)] = v * v * st.mass[size_t(s)];
  }
  for (int t = a; t < b; ++t) {
    const Matrix& P = c.step_from(t);
    const std::vector<double>& g = m.obs(t + 1);
    std::vector<double> nm(size_t(S), 0.0), n1(size_t(S), 0.0), n2(size_t(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double ms = st.mass[size_t(s)], a1 = st.m1[size_t(s)], a2 = st.m2[size_t(s)];
      for (int s2 = 0; s2 < S; ++s2) {
        double p = P(s, s2);
        if (p == 0.0) continue;
        nm[size_t(s2)] += p * ms;
        n1[size_t(s2)] += p * a1;
        n2[size_t(s2)] += p * a2;
      }
    }
    for (int s2 = 0; s2 < S; ++s2) {
      double v = g[size_t(s2)];
      n2[size_t(s2)] += 2.0 * v * n1[size_t(s2)] + v * v * nm[size_t(s2)];
      n1[size_t(s2)] += v * nm[size_t(s2)];
    }
    st.mass.swap(nm);
    st.m1.swap(n1);
    st.m2.swap(n2);
  }
  return st;
}

// conditional lattice law of the block sum: w[(state, pos)]
struct BlockLaw {
  long long L = 0;
  double offset = 0;
  std::vector<double> w;  // size L * states
};

BlockLaw block_lattice_law(const ArrayModel& m, int a, int b, int start_state) {
  const ChainCore& c = m.chain;
  const int S = c.num_states;
  std::vector<std::vector<long long>> code(size_t(b - a + 1));
  Accum off;
  long long width = 0;
  for (int t = a; t <= b; ++t) {
    const std::vector<double>& g = m.obs(t);
    double lo = *std::min_element(g.begin(), g.end());
    off.add(lo);
    std::vector<long long> k(size_t(S), 0);
    long long kmax = 0;
    for (int s = 0; s < S; ++s) {
      k[size_t(s)] = std::llround((g[size_t(s)] - lo) / m.step);
      kmax = std::max(kmax, k[size_t(s)]);
    }
    code[size_t(t - a)] = std::move(k);
    width += kmax;
  }
  BlockLaw law;
  law.L = width + 1;
  law.offset = off.value();
  law.w.assign(size_t(law.L) * S, 0.0);
  std::vector<double> nxt(size_t(law.L) * S, 0.0);
  if (start_state < 0) {
    const std::vector<double>& init = c.marginal(a);
    for (int s = 0; s < S; ++s)
      law.w[size_t(s) * law.L + size_t(code[0][size_t(s)])] += init[size_t(s)];
  } else {
    const Matrix& P = c.step_from(a - 1);
    for (int s = 0; s < S; ++s)
      law.w[size_t(s) * law.L + size_t(code[0][size_t(s)])] += P(start_state, s);
  }
  long long used = 0;
  for (int s = 0; s < S; ++s) used = std::max(used, code[0][size_t(s)]);
  for (int t = a; t < b; ++t) {
    const Matrix& P = c.step_from(t);
    std::fill(nxt.begin(), nxt.end(), 0.0);
    long long nu = 0;
    for (int s2 = 0; s2 < S; ++s2) {
      long long shift = code[size_t(t + 1 - a)][size_t(s2)];
      double* dst = nxt.data() + size_t(s2) * law.L + shift;
      for (int s = 0; s < S; ++s) {
        double p = P(s, s2);
        if (p == 0.0) continue;
        const double* src = law.w.data() + size_t(s) * law.L;
        for (long long pos = 0; pos <= used; ++pos) dst[pos] += p * src[pos];
      }
      nu = std::max(nu, used + shift);
    }
    law.w.swap(nxt);
    used = nu;
  }
  return law;
}

}  // namespace

CoboundaryDecomp martingale_differences(const ArrayModel& m, const BlockPartition& part,
                                        const MixingProfile& profile, const GrowthConstants& gc,
                                        double p0) {
  require_chain(m);
  const ChainCore& c = m.chain;
  const int S = c.num_states;
  const int n = part.n;
  CoboundaryDecomp dec;
  dec.n = n;
  dec.sigma = std::sqrt(part.total_variance);
  dec.p0 = p0;
  dec.R = future_conditional_sums(m, n);

  double rp = 0, r2 = 0;
  for (int j = 1; j <= n; ++j) {
    const std::vector<double>& pi = c.marginal(j);
    double sp = 0, s2 = 0;
    for (int s = 0; s < S; ++s) {
      double a = std::fabs(dec.R[size_t(j)][size_t(s)]);
      sp += pi[size_t(s)] * std::pow(a, p0);
      s2 += pi[size_t(s)] * a * a;
    }
    rp = std::max(rp, std::pow(sp, 1.0 / p0));
    r2 = std::max(r2, std::sqrt(s2));
  }
  dec.R_p0_norm = rp;
  dec.R_2_norm = r2;

  const int k = part.k();
  dec.cond_mean.resize(size_t(k));
  dec.cond_m2.resize(size_t(k));
  dec.d2.assign(size_t(k), 0.0);
  dec.dp0.assign(size_t(k), 0.0);
  const std::vector<double> root_marg = {1.0};
  for (int i = 0; i < k; ++i) {
    const Block& blk = part.blocks[size_t(i)];
    const std::vector<double>& R_end = dec.R[size_t(blk.b)];  // zero vector at b = n
    const int prev_end = (i == 0) ? 0 : part.blocks[size_t(i) - 1].b;
    const int starts = (i == 0) ? 1 : S;
    const std::vector<double>& prev_marg = (i == 0) ? root_marg : c.marginal(prev_end);
    dec.cond_mean[size_t(i)].assign(size_t(starts), 0.0);
    dec.cond_m2[size_t(i)].assign(size_t(starts), 0.0);
    double e2 = 0, ep = 0;
    for (int s0 = 0; s0 < starts; ++s0) {
      int start_state = (i == 0) ? -1 : s0;
      double r_start = (i == 0) ? 0.0 : dec.R[size_t(prev_end)][size_t(s0)];
      BlockCond bc = block_forward(m, blk.a, blk.b, start_state);
      double mean = 0, mom2 = 0;
      for (int s = 0; s < S; ++s) {
        double dr = R_end[size_t(s)] - r_start;
        mean += bc.m1[size_t(s)] + bc.mass[size_t(s)] * dr;
        mom2 += bc.m2[size_t(s)] + 2.0 * dr * bc.m1[size_t(s)] + dr * dr * bc.mass[size_t(s)];
      }
      dec.cond_mean[size_t(i)][size_t(s0)] = mean;
      dec.cond_m2[size_t(i)][size_t(s0)] = mom2;
      double wgt = prev_marg[size_t(s0)];
      e2 += wgt * mom2;
      BlockLaw law = block_lattice_law(m, blk.a, blk.b, start_state);
      Accum pw;
      for (int s = 0; s < S; ++s)
        for (long long pos = 0; pos < law.L; ++pos) {
          double w = law.w[size_t(s) * law.L + size_t(pos)];
          if (w == 0.0) continue;
          double v = law.offset + double(pos) * m.step + R_end[size_t(s)] - r_start;
          pw.add(w * std::pow(std::fabs(v), p0));
        }
      ep += wgt * pw.value();
      dec.max_abs_cond_mean = std::max(dec.max_abs_cond_mean, std::fabs(mean));
    }
    dec.d2[size_t(i)] = e2;
    dec.dp0[size_t(i)] = ep;
  }
  if (dec.max_abs_cond_mean > 1e-10)
    throw InvariantError("martingale property violated: max |E[D_j | state]| = " +
                         fmt_double(dec.max_abs_cond_mean));

  double Pi = 1.0;
  for (int j = 1; j <= profile.n; ++j) Pi += interpolate_bound(profile, p0, j);
  double K_p0 = max_lp_norm(m, p0);
  dec.mlemma_lhs = dec.R_p0_norm;
  dec.mlemma_rhs = std::min(K_p0, std::sqrt(gc.Q) * gc.beta) * Pi;
  return dec;
}

double telescoping_residual(const ArrayModel& m, const CoboundaryDecomp& dec, uint64_t seed,
                            int replicate) {
  require_chain(m);
  std::vector<int> st = sample_states(m, dec.n, seed, replicate);
  double worst = 0;
  double sum_d = 0, sum_xi = 0;
  double r_prev = 0.0;  // R_0
  for (int j = 1; j <= dec.n; ++j) {
    double xi = m.obs(j)[size_t(st[size_t(j) - 1])];
    double rj = dec.R[size_t(j)][size_t(st[size_t(j) - 1])];
    sum_d += xi + rj - r_prev;
    sum_xi += xi;
    worst = std::max(worst, std::fabs(sum_d - (sum_xi + rj)));
    r_prev = rj;
  }
  return worst;
}

TimeChange time_change(const VarianceProfile& vp, const BlockPartition& part,
                       const GrowthConstants& gc, double t) {
  if (t < 0.0 || t > 1.0) throw PreconditionError("time must lie in [0, 1]");
  const int n = part.n;
  const double target = t * vp.var[size_t(n)];
  TimeChange out;
  double run = 0;
  out.v = n;
  for (int k2 = 1; k2 <= n; ++k2) {
    run = std::max(run, vp.var[size_t(k2)]);
    if (run >= target) { out.v = k2; break; }
  }
  out.block = part.k();
  for (int i = 0; i < part.k(); ++i)
    if (out.v <= part.blocks[size_t(i)].b) { out.block = i + 1; break; }
  double sb = vp.var[size_t(part.blocks[size_t(out.block) - 1].b)];
  out.gap = std::fabs(sb - t * vp.var[size_t(n)]);
  out.gap_bound = kTimeChangeGapC * (gc.K * (1.0 + gc.C) + gc.Q + gc.C * std::sqrt(gc.Q));
  return out;
}

PathGrid make_path_grid(const VarianceProfile& vp, const BlockPartition& part, int grid_size) {
  PathGrid g;
  g.t.resize(size_t(grid_size));
  g.v_of_t.resize(size_t(grid_size));
  g.j_of_t.resize(size_t(grid_size));
  const int n = part.n;
  std::vector<double> runmax(size_t(n) + 1, 0.0);
  for (int k = 1; k <= n; ++k)
    runmax[size_t(k)] = std::max(runmax[size_t(k) - 1], vp.var[size_t(k)]);
  std::vector<int> block_of(size_t(n) + 1, part.k());
  {
    int blk = 1;
    for (int k = 1; k <= n; ++k) {
      while (blk <= part.k() && k > part.blocks[size_t(blk) - 1].b) ++blk;
      block_of[size_t(k)] = std::min(blk, part.k());
    }
  }
  const double total = vp.var[size_t(n)];
  for (int i = 0; i < grid_size; ++i) {
    double t = double(i + 1) / double(grid_size);
    g.t[size_t(i)] = t;
    double target = t * total;
    int v = int(std::lower_bound(runmax.begin() + 1, runmax.end(), target) - runmax.begin());
    v = std::min(v, n);
    g.v_of_t[size_t(i)] = v;
    g.j_of_t[size_t(i)] = block_of[size_t(v)];
  }
  return g;
}

PathSample eval_path_functions(const ArrayModel& m, const BlockPartition& part,
                               const CoboundaryDecomp& dec, const PathGrid& grid, uint64_t seed,
                               int replicate) {
  require_chain(m);
  const int n = part.n;
  std::vector<int> st = sample_states(m, n, seed, replicate);
  std::vector<double> prefix(size_t(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j)
    prefix[size_t(j)] = prefix[size_t(j) - 1] + m.obs(j)[size_t(st[size_t(j) - 1])];

  const int k = part.k();
  std::vector<double> mart(size_t(k) + 1, 0.0);
  std::vector<double> qv(size_t(k) + 1, 0.0);
  double r_prev = 0.0;
  int prev_end = 0;
  const double s2 = dec.sigma * dec.sigma;
  for (int i = 1; i <= k; ++i) {
    const Block& b = part.blocks[size_t(i) - 1];
    double xi_sum = prefix[size_t(b.b)] - prefix[size_t(b.a) - 1];
    double r_end = dec.R[size_t(b.b)][size_t(st[size_t(b.b) - 1])];
    mart[size_t(i)] = mart[size_t(i) - 1] + xi_sum + r_end - r_prev;
    double cm2 = (i == 1) ? dec.cond_m2[0][0]
                          : dec.cond_m2[size_t(i) - 1][size_t(st[size_t(prev_end) - 1])];
    qv[size_t(i)] = qv[size_t(i) - 1] + cm2 / s2;
    r_prev = r_end;
    prev_end = b.b;
  }

  PathSample out;
  const size_t G = grid.t.size();
  out.W.resize(G);
  out.calW.resize(G);
  out.M.resize(G);
  out.QV.resize(G);
  for (size_t i = 0; i < G; ++i) {
    int v = grid.v_of_t[i];
    int j = grid.j_of_t[i];
    out.W[i] = prefix[size_t(v)] / dec.sigma;
    out.calW[i] = prefix[size_t(part.blocks[size_t(j) - 1].b)] / dec.sigma;
    out.M[i] = mart[size_t(j)] / dec.sigma;
    out.QV[i] = qv[size_t(j)];
  }
  out.block_dev.resize(size_t(k));
  for (int i = 1; i <= k; ++i) {
    const Block& b = part.blocks[size_t(i) - 1];
    double end_val = prefix[size_t(b.b)];
    double dev = 0;
    for (int mIdx = b.a; mIdx <= b.b; ++mIdx)
      dev = std::max(dev, std::fabs(end_val - prefix[size_t(mIdx)]));
    out.block_dev[size_t(i) - 1] = dev;
    out.sup_w_calw = std::max(out.sup_w_calw, dev / dec.sigma);
    double r_end = dec.R[size_t(b.b)][size_t(st[size_t(b.b) - 1])];
    out.sup_calw_m = std::max(out.sup_calw_m, std::fabs(r_end) / dec.sigma);
  }
  return out;
}

namespace {

double ky_fan_from_sups(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  const int N = int(s.size());
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= N; ++j) {
    double lo = (j == 0) ? 0.0 : s[size_t(j) - 1];
    double hi = (j == N) ? std::numeric_limits<double>::infinity() : s[size_t(j)];
    double frac = double(N - j) / double(N);  // P(sup > eps) for eps in [lo, hi)
    if (frac < hi) best = std::min(best, std::max(lo, frac) + 1e-12);
  }
  return best;
}

}  // namespace

QuadraticVariation quadratic_variation(const ArrayModel& m, const BlockPartition& part,
                                       const CoboundaryDecomp& dec, const MixingProfile& profile,
                                       const GrowthConstants& gc, int replicates, int grid_size,
                                       uint64_t seed, int threads) {
  if (replicates < 100) throw PreconditionError("quadratic variation needs >= 100 replicates");
  QuadraticVariation out;
  VarianceProfile vp = variance_profile(m);
  out.grid = make_path_grid(vp, part, grid_size);
  const size_t G = out.grid.t.size();

  std::vector<std::vector<double>> qv_rows;
  qv_rows.resize(size_t(replicates));
  std::vector<double> sups(size_t(replicates), 0.0);
  const int kb = part.k();
  std::vector<double> sup_wc(size_t(replicates), 0.0), sup_cm(size_t(replicates), 0.0);
  std::vector<std::vector<double>> blk_dev;
  blk_dev.resize(size_t(replicates));
  parallel_for(size_t(replicates), threads, [&](size_t r) {
    PathSample ps = eval_path_functions(m, part, dec, out.grid, seed, int(r));
    double sup = 0;
    for (size_t i = 0; i < G; ++i) sup = std::max(sup, std::fabs(ps.QV[i] - out.grid.t[i]));
    sups[r] = sup;
    sup_wc[r] = ps.sup_w_calw;
    sup_cm[r] = ps.sup_calw_m;
    blk_dev[r] = std::move(ps.block_dev);
    qv_rows[r] = std::move(ps.QV);
  });
  out.sup_dev = sups;
  out.mean_qv.assign(G, 0.0);
  for (size_t i = 0; i < G; ++i) {
    Accum a;
    for (int r = 0; r < replicates; ++r) a.add(qv_rows[size_t(r)][i]);
    out.mean_qv[i] = a.value() / double(replicates);
  }
  out.e_qv1_mc = out.mean_qv[G - 1];

  const double s2 = dec.sigma * dec.sigma;
  Accum exact;
  for (double v : dec.d2) exact.add(v);
  out.e_qv1_exact = exact.value() / s2;

  out.ky_fan = ky_fan_from_sups(sups);
  const double q = dec.p0 / 2.0;
  Accum pw;
  for (double v : sups) pw.add(std::pow(v, q));
  double norm = std::pow(pw.value() / double(replicates), 1.0 / q);
  out.qv1_bound = std::pow(norm, q / (q + 1.0));

  out.det_gap.assign(G, 0.0);
  std::vector<double> cum(size_t(part.k()) + 1, 0.0);
  for (int i = 1; i <= part.k(); ++i)
    cum[size_t(i)] = cum[size_t(i) - 1] + dec.d2[size_t(i) - 1] / s2;
  for (size_t i = 0; i < G; ++i) {
    out.det_gap[i] = std::fabs(cum[size_t(out.grid.j_of_t[i])] - out.grid.t[i]);
    out.det_gap_sup = std::max(out.det_gap_sup, out.det_gap[i]);
  }
  double Pi = 1.0;
  for (int j = 1; j <= profile.n; ++j) Pi += interpolate_bound(profile, dec.p0, j);
  out.det_gap_bound = kQvGapC *
                      (gc.K * gc.D + gc.Q + gc.C * std::sqrt(gc.Q) +
                       dec.R_2_norm * (dec.R_2_norm + std::sqrt(Pi) * gc.beta * dec.sigma)) /
                      s2;

  // coupled-pair bounds: d_P(Q1, Q2) <= ||sup_t |Q1 - Q2|||_q^{q/(q+1)}
  const double qp = dec.p0;
  auto norm_q = [&](const std::vector<double>& xs) {
    Accum acc;
    for (double v : xs) acc.add(std::pow(v, qp));
    return std::pow(acc.value() / double(xs.size()), 1.0 / qp);
  };
  out.coupling_w_calw = std::pow(norm_q(sup_wc), qp / (qp + 1.0));
  out.coupling_calw_m = std::pow(norm_q(sup_cm), qp / (qp + 1.0));
  // max-norm route: ||max_j Z_j||_q <= k^{1/q} max_j ||Z_j||_q
  double max_block_norm = 0;
  for (int j = 0; j < kb; ++j) {
    Accum acc;
    for (int r = 0; r < replicates; ++r)
      acc.add(std::pow(blk_dev[size_t(r)][size_t(j)] / dec.sigma, qp));
    max_block_norm = std::max(max_block_norm, std::pow(acc.value() / double(replicates), 1.0 / qp));
  }
  out.coupling_w_calw_maxnorm =
      std::pow(std::pow(double(kb), 1.0 / qp) * max_block_norm, qp / (qp + 1.0));
  return out;
}

MemoryCoefficient memory_coefficient(const ArrayModel& m, const MixingProfile& profile,
                                     const GrowthConstants& gc, double p, int mem) {
  MemoryCoefficient out;
  if (mem >= m.memory || mem >= m.n) {
    out.exact_zero = true;
    out.bound = 0.0;
    return out;
  }
  double K_p = max_lp_norm(m, p);
  double cap = std::min(K_p, gc.beta * std::sqrt(gc.Q));
  Accum tail;
  for (int k = mem + 1; k <= profile.n; ++k) tail.add(interpolate_bound(profile, p, k));
  out.bound = cap * tail.value();
  return out;
}

SequentialConstants sequential_constants(const MixingProfile& profile, const GrowthConstants& gc,
                                         double K_p0, double sigma, double p0) {
  SequentialConstants sc;
  sc.K_p0 = K_p0;
  Accum pi0, pih;
  for (int j = 1; j <= profile.n; ++j) {
    pi0.add(interpolate_bound(profile, p0, j));
    pih.add(interpolate_bound(profile, std::max(2.0, p0 / 2.0), j));
  }
  sc.Pi_p0 = 1.0 + pi0.value();
  sc.Pi_p0_half = 1.0 + pih.value();
  sc.q_n = sc.Pi_p0;
  sc.iota_n = std::sqrt(sc.Pi_p0_half);
  const double Q = gc.Q, beta = gc.beta;
  sc.a_n = std::min(K_p0, std::sqrt(Q) * beta) * std::sqrt(sc.q_n);
  const double a = sc.a_n;
  const double terms[11] = {
      gc.K * (1.0 + gc.C),
      Q,
      gc.C * std::sqrt(Q),
      a * a,
      a * beta,
      std::sqrt(sc.q_n) * beta * std::pow(Q, 0.5 - 2.0 / p0),
      sc.q_n * beta * beta * std::sqrt(Q),
      a * std::pow(Q, -2.0 / p0),
      a / std::sqrt(Q),
      a * beta / std::sqrt(Q),
      std::pow(a, p0 / (p0 + 1.0)),
  };
  double mx = terms[0];
  for (double t : terms) mx = std::max(mx, t);
  const double expo = p0 / (2.0 * p0 + 4.0);
  sc.C1 = std::pow(mx, expo);
  sc.A1 = sc.C1 + std::pow(Q, (p0 - 4.0) / (2.0 * p0 + 2.0)) * std::pow(beta, p0 / (p0 + 1.0));
  const double extra[4] = {
      a / Q,
      sc.iota_n * a / (std::sqrt(Q) * sigma),
      sc.iota_n * beta * (std::sqrt(sc.q_n) + a),
      sc.iota_n * a * a / std::sqrt(Q),
  };
  double mx2 = extra[0];
  for (double t : extra) mx2 = std::max(mx2, t);
  sc.A2 = sc.A1 + std::pow(mx2, expo);
  return sc;
}

RateBounds rate_bounds(const GrowthConstants& gc, const SequentialConstants& seq, double l_n,
                       double p0, double r_memory) {
  if (!(l_n >= 1.0)) throw PreconditionError("block grouping length must be >= 1");
  const double sigma = gc.sigma;
  if (l_n > sigma * sigma / (18.0 * gc.Q) + 1e-12)
    throw PreconditionError("block grouping length exceeds sigma^2 / (18 Q)");
  RateBounds rb;
  const double s_pow = std::pow(sigma, -2.0 * (1.0 - 2.0 / p0));
  rb.frak_q = std::sqrt(l_n) / sigma + l_n * s_pow + 1.0 / std::sqrt(l_n);
  rb.memory_term = r_memory / std::sqrt(l_n);
  rb.w = l_n * s_pow + std::sqrt(l_n) / sigma + rb.memory_term;
  const double expo = p0 / (2.0 * p0 + 4.0);
  const double lead =
      std::pow(sigma, -(p0 - 2.0) / (2.0 * p0)) * std::pow(std::fabs(std::log(sigma)), 0.75);
  rb.rhs_fclt =
      seq.A1 * (lead + std::pow(rb.frak_q, expo) * std::sqrt(std::fabs(std::log(rb.frak_q))));
  rb.rhs_fclt_mc = seq.A2 * (lead + std::pow(rb.w, expo) * std::sqrt(std::fabs(std::log(rb.w))));
  return rb;
}

std::vector<MaxIneqRow> maximal_inequality_check(const ArrayModel& m, const BlockPartition& part,
                                                 double p, int max_blocks) {
  require_chain(m);
  const ChainCore& c = m.chain;
  const int S = c.num_states;
  const int kb = std::min(max_blocks, part.k());
  std::vector<MaxIneqRow> rows;
  for (int mcount = 1; mcount <= kb; ++mcount) {
    LatticePmf pmf = exact_sum_pmf(m, 1, part.blocks[size_t(mcount) - 1].b);
    Accum lp;
    for (size_t i = 0; i < pmf.w.size(); ++i)
      lp.add(pmf.w[i] * std::pow(std::fabs(pmf.value(i)), p));
    double lhs = std::pow(lp.value(), 1.0 / p);

    double sum_b = 0;
    for (int i = 1; i <= mcount; ++i) {
      const Block& bi = part.blocks[size_t(i) - 1];
      // E[Xi_k | state at b_i] for k in (i, mcount]
      std::vector<std::vector<double>> expect(size_t(mcount) + 1);
      for (int k2 = i + 1; k2 <= mcount; ++k2) {
        const Block& bk = part.blocks[size_t(k2) - 1];
        std::vector<double> acc(size_t(S), 0.0);
        for (int s = 0; s < S; ++s) {
          std::vector<double> row(size_t(S), 0.0);
          row[size_t(s)] = 1.0;
          for (int t = bi.b; t < bk.a; ++t) row = vecmat(row, c.step_from(t));
          double tot = 0;
          std::vector<double> cur = row;
          for (int t = bk.a; t <= bk.b; ++t) {
            const std::vector<double>& g = m.obs(t);
            for (int s2 = 0; s2 < S; ++s2) tot += cur[size_t(s2)] * g[size_t(s2)];
            if (t < bk.b) cur = vecmat(cur, c.step_from(t));
          }
          acc[size_t(s)] = tot;
        }
        expect[size_t(k2)] = std::move(acc);
      }
      // joint lattice law of (Xi_i, end state) once per block
      BlockLaw law = block_lattice_law(m, bi.a, bi.b, -1);
      double best = 0;
      std::vector<double> cumulative(size_t(S), 0.0);
      for (int l = i; l <= mcount; ++l) {
        if (l > i)
          for (int s = 0; s < S; ++s) cumulative[size_t(s)] += expect[size_t(l)][size_t(s)];
        Accum acc2;
        for (int s = 0; s < S; ++s)
          for (long long pos = 0; pos < law.L; ++pos) {
            double w = law.w[size_t(s) * law.L + size_t(pos)];
            if (w == 0.0) continue;
            double xi = law.offset + double(pos) * m.step;
            double inner = xi + cumulative[size_t(s)];
            acc2.add(w * std::pow(std::fabs(xi * inner), p / 2.0));
          }
        best = std::max(best, std::pow(acc2.value(), 2.0 / p));
      }
      sum_b += best;
    }
    rows.push_back({mcount, lhs, std::sqrt(2.0 * p * sum_b)});
  }
  return rows;
}

}  // namespace varlin
