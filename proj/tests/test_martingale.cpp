#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "varlin/errors.hpp"
#include "varlin/linearize.hpp"
#include "varlin/martingale.hpp"
#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

using namespace varlin;

namespace {

GrowthConstants constants_for(const ArrayModel& m, double p0 = 4.0) {
  MixingProfile prof = dobrushin_phi_profile(m);
  VarianceProfile vp = variance_profile(m);
  return growth_constants(prof, max_l2_norm(m), vp.sigma, 1.0, p0, 1e-6);
}

// hand partition over [1, n] split at the given core ends; every block ends
// exactly at its core (no gaps needed for the algebraic identities)
BlockPartition hand_partition(const ArrayModel& m, const std::vector<int>& ends) {
  BlockPartition p;
  p.n = m.n;
  p.r = 1;
  p.total_variance = variance_of_range(m, 1, m.n);
  p.Q = 1.0;
  p.A = 2.0;
  int a = 1;
  for (int e : ends) {
    Block b;
    b.a = a;
    b.b = b.core_end = e;
    b.variance = b.core_variance = variance_of_range(m, a, e);
    b.max_intermediate = b.variance;
    p.blocks.push_back(b);
    a = e + 1;
  }
  return p;
}

}  // namespace

TEST_SUITE("martingale") {

TEST_CASE("future conditional sums") {
  ArrayModel iid = make_iid_pm1(6);
  SUBCASE("empty future vanishes") {
    std::vector<double> r = future_conditional_sum(iid, 6);
    for (double v : r) CHECK(v == 0.0);
  }
  SUBCASE("independent rows have no conditional future") {
    for (int j = 1; j <= 6; ++j)
      for (double v : future_conditional_sum(iid, j)) CHECK(std::fabs(v) <= 1e-14);
  }
  SUBCASE("chain value matches brute-force conditioning") {
    ArrayModel m = vt::biased_chain(3);
    std::vector<double> r1 = future_conditional_sum(m, 1);
    for (int s = 0; s < 2; ++s) {
      double num = vt::brute_moment(m, [&](const std::vector<int>& st) {
        if (st[0] != s) return 0.0;
        return vt::xi_on_path(m, st, 2) + vt::xi_on_path(m, st, 3);
      });
      double den = m.chain.marginal(1)[size_t(s)];
      CHECK(r1[size_t(s)] == doctest::Approx(num / den).epsilon(1e-12));
    }
  }
}

TEST_CASE("iid decomposition is the identity") {
  ArrayModel m = make_iid_pm1(20);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 20);
  MixingProfile prof = dobrushin_phi_profile(m);
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
  CHECK(dec.R_2_norm <= 1e-13);
  CHECK(dec.R_p0_norm <= 1e-13);
  CHECK(dec.max_abs_cond_mean <= 1e-12);
  // E[D_j^2] equals the block length
  for (int i = 0; i < p.k(); ++i) {
    const Block& b = p.blocks[size_t(i)];
    CHECK(dec.d2[size_t(i)] == doctest::Approx(double(b.b - b.a + 1)).epsilon(1e-12));
  }
}

TEST_CASE("martingale property and telescoping on mixing chains") {
  for (const char* name : {"elliptic", "memory2", "slow_variance_05"}) {
    ArrayModel m = make_builtin_model(name, 1 << 9);
    GrowthConstants g = constants_for(m);
    BlockPartition p = partition_blocks(m, g, 1 << 9);
    MixingProfile prof = dobrushin_phi_profile(m);
    CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
    CHECK(dec.max_abs_cond_mean <= 1e-10);
    for (int rep = 0; rep < 20; ++rep)
      CHECK(telescoping_residual(m, dec, 11, rep) <= 1e-10);
    // coboundary norm respects the profile bound
    CHECK(dec.mlemma_lhs <= dec.mlemma_rhs + 1e-12);
    // variance transfer: sum of E[D_j^2] is Var(S_n)
    double sum = 0;
    for (double v : dec.d2) sum += v;
    CHECK(sum == doctest::Approx(p.total_variance).epsilon(1e-9));
  }
}

TEST_CASE("enumeration checks on a hand partition") {
  ArrayModel m = vt::biased_chain(10);
  BlockPartition p = hand_partition(m, {5, 10});
  MixingProfile prof = dobrushin_phi_profile(m);
  GrowthConstants g;
  g.K = max_l2_norm(m);
  g.beta = 1.0;
  g.Q = 1.0;
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);

  // independent R oracle by enumeration
  for (int j : {1, 4, 9}) {
    for (int s = 0; s < 2; ++s) {
      double den = m.chain.marginal(j)[size_t(s)];
      double num = vt::brute_moment(m, [&](const std::vector<int>& st) {
        if (st[size_t(j) - 1] != s) return 0.0;
        double f = 0;
        for (int k = j + 1; k <= 10; ++k) f += vt::xi_on_path(m, st, k);
        return f;
      });
      CHECK(dec.R[size_t(j)][size_t(s)] == doctest::Approx(num / den).epsilon(1e-11));
    }
  }

  // D_j on a path
  auto D_of = [&](const std::vector<int>& st, int blk) {
    const Block& b = p.blocks[size_t(blk)];
    double s = 0;
    for (int k = b.a; k <= b.b; ++k) s += vt::xi_on_path(m, st, k);
    double r_end = dec.R[size_t(b.b)][size_t(st[size_t(b.b) - 1])];
    double r_start = blk == 0 ? 0.0 : dec.R[size_t(p.blocks[size_t(blk) - 1].b)]
                                           [size_t(st[size_t(p.blocks[size_t(blk) - 1].b) - 1])];
    return s + r_end - r_start;
  };

  SUBCASE("block differences are orthogonal") {
    double e12 = vt::brute_moment(m, [&](const std::vector<int>& st) {
      return D_of(st, 0) * D_of(st, 1);
    });
    CHECK(std::fabs(e12) <= 1e-9);
  }
  SUBCASE("conditional mean vanishes per start state") {
    for (int s = 0; s < 2; ++s) {
      double den = m.chain.marginal(5)[size_t(s)];
      double num = vt::brute_moment(m, [&](const std::vector<int>& st) {
        return st[4] == s ? D_of(st, 1) : 0.0;
      });
      CHECK(std::fabs(num / den) <= 1e-11);
    }
  }
  SUBCASE("conditional second moments match enumeration") {
    for (int s = 0; s < 2; ++s) {
      double den = m.chain.marginal(5)[size_t(s)];
      double num = vt::brute_moment(m, [&](const std::vector<int>& st) {
        return st[4] == s ? D_of(st, 1) * D_of(st, 1) : 0.0;
      });
      CHECK(dec.cond_m2[1][size_t(s)] == doctest::Approx(num / den).epsilon(1e-10));
    }
  }
  SUBCASE("normalized second moments track the prefix variance") {
    // |sum_{j<=k} E[D_j^2] - Var(S_{b_k})| <= 2 ||R||_2 (||R||_2 + ||X+Y||_2)
    double sigma2 = p.total_variance;
    for (int kb = 1; kb <= 2; ++kb) {
      double lhs_sum = 0;
      for (int i = 0; i < kb; ++i) lhs_sum += dec.d2[size_t(i)];
      int bk = p.blocks[size_t(kb) - 1].b;
      double vb = variance_of_range(m, 1, bk);
      double x2 = vt::brute_moment(m, [&](const std::vector<int>& st) {
        double x = 0;
        for (int i = 0; i < kb; ++i) x += D_of(st, i);
        double y = 0;
        for (int j = 1; j <= bk; ++j) y += vt::xi_on_path(m, st, j);
        return (x + y) * (x + y);
      });
      double lhs = std::fabs(lhs_sum - vb) / sigma2;
      double rhs = 2.0 * dec.R_2_norm * (dec.R_2_norm + std::sqrt(x2)) / sigma2;
      CHECK(lhs <= rhs + 1e-12);
    }
  }
  SUBCASE("exact p0 norms match enumeration") {
    for (int blk = 0; blk < 2; ++blk) {
      double brute = vt::brute_moment(m, [&](const std::vector<int>& st) {
        double d = D_of(st, blk);
        return d * d * d * d;
      });
      CHECK(dec.dp0[size_t(blk)] == doctest::Approx(brute).epsilon(1e-10));
    }
  }
}

TEST_CASE("time change") {
  ArrayModel m = make_iid_pm1(100);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 100);
  VarianceProfile vp = variance_profile(m);
  CHECK(time_change(vp, p, g, 0.0).v == 1);
  TimeChange full = time_change(vp, p, g, 1.0);
  CHECK(full.v == 100);
  CHECK(full.block == p.k());
  CHECK(time_change(vp, p, g, 0.5).v == 50);
  CHECK_THROWS_AS(time_change(vp, p, g, 1.5), PreconditionError);
  TimeChange mid = time_change(vp, p, g, 0.37);
  CHECK(mid.gap <= mid.gap_bound);
}

TEST_CASE("quadratic variation on the iid model is exact") {
  ArrayModel m = make_iid_pm1(1 << 9);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 1 << 9);
  MixingProfile prof = dobrushin_phi_profile(m);
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
  QuadraticVariation qv = quadratic_variation(m, p, dec, prof, g, 200, 256, 5, 2);
  CHECK(std::fabs(qv.e_qv1_exact - 1.0) <= 1e-10);
  CHECK(std::fabs(qv.e_qv1_mc - 1.0) <= 1e-10);  // deterministic for iid
  CHECK(qv.ky_fan > 0.0);
  CHECK(qv.ky_fan < 1.0);
  CHECK(qv.det_gap_sup <= qv.det_gap_bound + 1e-12);
}

TEST_CASE("quadratic variation trends on the elliptic chain") {
  ArrayModel m = make_elliptic_chain(1 << 10);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 1 << 10);
  MixingProfile prof = dobrushin_phi_profile(m);
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
  QuadraticVariation qv = quadratic_variation(m, p, dec, prof, g, 300, 512, 5, 2);
  CHECK(std::fabs(qv.e_qv1_exact - 1.0) <= 1e-9);
  CHECK(std::fabs(qv.e_qv1_mc - 1.0) <= 0.1);
  double supdev = 0;
  for (double v : qv.sup_dev) supdev = std::max(supdev, v);
  CHECK(qv.ky_fan <= supdev + 1e-9);
  CHECK(qv.qv1_bound > 0.0);
}

TEST_CASE("coupled-pair distance bounds") {
  ArrayModel m = make_elliptic_chain(1 << 10);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 1 << 10);
  MixingProfile prof = dobrushin_phi_profile(m);
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
  QuadraticVariation qv = quadratic_variation(m, p, dec, prof, g, 400, 256, 21, 2);
  CHECK(qv.coupling_w_calw > 0.0);
  CHECK(qv.coupling_w_calw < 1.0);
  // the max-norm route dominates the direct empirical norm of the sup
  CHECK(qv.coupling_w_calw <= qv.coupling_w_calw_maxnorm + 1e-12);
  // the boundary-term pair is much tighter than the block-sum pair here
  CHECK(qv.coupling_calw_m < qv.coupling_w_calw);
}

TEST_CASE("path functions satisfy the martingale identity") {
  ArrayModel m = make_elliptic_chain(1 << 9);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 1 << 9);
  MixingProfile prof = dobrushin_phi_profile(m);
  CoboundaryDecomp dec = martingale_differences(m, p, prof, g, 4.0);
  VarianceProfile vp = variance_profile(m);
  PathGrid grid = make_path_grid(vp, p, 64);
  for (int rep = 0; rep < 10; ++rep) {
    PathSample ps = eval_path_functions(m, p, dec, grid, 17, rep);
    std::vector<int> st = sample_states(m, 1 << 9, 17, rep);
    // at t = 1 the coboundary terms vanish (empty future at the last index)
    CHECK(std::fabs(ps.M.back() - ps.calW.back()) <= 1e-10);
    // at interior times M - calW is the scaled boundary term
    for (size_t i = 0; i < grid.t.size(); i += 13) {
      int bj = p.blocks[size_t(grid.j_of_t[i]) - 1].b;
      double r = dec.R[size_t(bj)][size_t(st[size_t(bj) - 1])];
      CHECK(ps.M[i] - ps.calW[i] == doctest::Approx(r / dec.sigma).epsilon(1e-9));
    }
    // W and calW agree at block right endpoints by construction
    CHECK(std::fabs(ps.W.back() - ps.calW.back()) <= 1e-12);
  }
}

TEST_CASE("memory coefficients") {
  ArrayModel m = make_memory_chain(1 << 8);
  MixingProfile prof = dobrushin_phi_profile(m);
  GrowthConstants g = constants_for(m);
  SUBCASE("memory-two array vanishes at its memory") {
    CHECK(memory_coefficient(m, prof, g, 4.0, 2).exact_zero);
    CHECK(memory_coefficient(m, prof, g, 4.0, 3).exact_zero);
  }
  SUBCASE("full conditioning vanishes") {
    ArrayModel w = make_local_window_model(64);
    MixingProfile pw = dobrushin_phi_profile(w);
    GrowthConstants gw = constants_for(w);
    CHECK(memory_coefficient(w, pw, gw, 4.0, 64).exact_zero);
  }
  SUBCASE("bound decays geometrically below the memory") {
    // geometric profile: the assembled tail bound decays in m
    ArrayModel e = make_elliptic_chain(1 << 8);
    ArrayModel e2 = e;
    e2.memory = 1 << 8;  // force the bound branch
    MixingProfile pe = dobrushin_phi_profile(e2);
    GrowthConstants ge = constants_for(e2);
    double prev = -1;
    for (int mm : {2, 4, 6, 8}) {
      MemoryCoefficient mc = memory_coefficient(e2, pe, ge, 4.0, mm);
      CHECK(!mc.exact_zero);
      if (prev >= 0) CHECK(mc.bound < prev);
      prev = mc.bound;
    }
  }
}

TEST_CASE("rate bound calculators") {
  SequentialConstants seq;
  seq.A1 = 1.0;
  seq.A2 = 1.0;
  SUBCASE("unit inputs") {
    GrowthConstants g;
    g.sigma = 1.0;
    g.Q = 1.0 / 20.0;  // room for l = 1 under the sigma^2/(18Q) cap
    RateBounds rb = rate_bounds(g, seq, 1.0, 4.0, 1.0);
    CHECK(rb.frak_q == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(rb.w == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("worked example") {
    GrowthConstants g;
    g.sigma = 100.0;
    g.Q = 1.0;
    RateBounds rb = rate_bounds(g, seq, 10.0, 4.0, 0.0);
    double expect = std::sqrt(10.0) / 100.0 + 10.0 / 100.0 + 1.0 / std::sqrt(10.0);
    CHECK(rb.frak_q == doctest::Approx(expect).epsilon(1e-12));
    CHECK(rb.frak_q == doctest::Approx(0.44785054261852174).epsilon(1e-12));
  }
  SUBCASE("grouping length out of range") {
    GrowthConstants g;
    g.sigma = 10.0;
    g.Q = 1.0;
    CHECK_THROWS_AS(rate_bounds(g, seq, 100.0, 4.0, 0.0), PreconditionError);
  }
  SUBCASE("memory term vanishes at twice the model memory") {
    ArrayModel m = make_memory_chain(1 << 12);
    MixingProfile prof = dobrushin_phi_profile(m);
    GrowthConstants g = constants_for(m);
    double l = 2.0 * m.memory;
    MemoryCoefficient mc = memory_coefficient(m, prof, g, 4.0, int(l / 2));
    REQUIRE(mc.exact_zero);
    SequentialConstants sc = sequential_constants(prof, g, max_lp_norm(m, 4.0), g.sigma, 4.0);
    RateBounds rb = rate_bounds(g, sc, l, 4.0, 0.0);
    CHECK(rb.memory_term == 0.0);
    CHECK(rb.w == doctest::Approx(l * std::pow(g.sigma, -1.0) + std::sqrt(l) / g.sigma)
                      .epsilon(1e-12));
  }
}

TEST_CASE("sequential constants are ordered") {
  ArrayModel m = make_elliptic_chain(1 << 9);
  MixingProfile prof = dobrushin_phi_profile(m);
  GrowthConstants g = constants_for(m);
  g.beta = 2.0;
  SequentialConstants sc = sequential_constants(prof, g, max_lp_norm(m, 4.0), g.sigma, 4.0);
  CHECK(sc.A1 >= 0.0);
  CHECK(sc.A2 >= sc.A1);
  CHECK(sc.q_n >= 1.0);
  CHECK(sc.iota_n >= 1.0);
}

TEST_CASE("maximal inequality holds on block sums") {
  ArrayModel m = make_elliptic_chain(1 << 9);
  GrowthConstants g = constants_for(m);
  BlockPartition p = partition_blocks(m, g, 1 << 9);
  std::vector<MaxIneqRow> rows = maximal_inequality_check(m, p, 4.0, 6);
  REQUIRE(rows.size() >= 3);
  for (const MaxIneqRow& r : rows) {
    CHECK(r.lhs <= r.rhs + 1e-9);
    CHECK(r.rhs > 0.0);
  }
  SUBCASE("single block case") {
    CHECK(rows[0].m == 1);
    CHECK(rows[0].lhs <= rows[0].rhs);
  }
  SUBCASE("iid blocks across sizes") {
    for (int n : {1 << 8, 1 << 9}) {
      ArrayModel mm = make_iid_pm1(n);
      GrowthConstants gg = constants_for(mm);
      BlockPartition pp = partition_blocks(mm, gg, n);
      for (const MaxIneqRow& r : maximal_inequality_check(mm, pp, 4.0, 5))
        CHECK(r.lhs <= r.rhs + 1e-9);
    }
  }
}

}  // TEST_SUITE
