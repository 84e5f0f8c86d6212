#include <cmath>
#include <cstdio>
#include <map>

#include "doctest.h"
#include "test_support.hpp"
#include "varlin/errors.hpp"
#include "varlin/expanding.hpp"
#include "varlin/linearize.hpp"
#include "varlin/martingale.hpp"
#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/numeric.hpp"
#include "varlin/oracle.hpp"
#include "varlin/special.hpp"

using namespace varlin;

TEST_SUITE("generators") {

TEST_CASE("sampling is deterministic in (model, seed, replicate)") {
  ArrayModel m = make_iid_pm1(4);
  SamplePath a = sample_path(m, 4, 7, 0);
  SamplePath b = sample_path(m, 4, 7, 0);
  CHECK(a.values == b.values);
  SamplePath c = sample_path(m, 4, 7, 1);
  CHECK(a.values != c.values);  // replicate streams differ
  ArrayModel e = make_expanding_model(16, 0, 0);
  CHECK(sample_path(e, 16, 5, 2).values == sample_path(e, 16, 5, 2).values);
}

TEST_CASE("constant-row chain reduces to the iid model") {
  // all transition rows equal to the initial law
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "rows-equal-initial";
  m.n = 4;
  m.step = 0.5;
  ChainCore c;
  c.t0 = 1;
  c.len = 4;
  c.num_states = 3;
  c.initial = {0.5, 0.3, 0.2};
  Matrix P(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) P(i, j) = c.initial[size_t(j)];
  c.mats = {P};
  c.mat_at.assign(3, 0);
  c.finalize();
  m.chain = std::move(c);
  std::vector<double> raw = {1.0, -0.5, 0.0};
  double mean = 0.5 * 1.0 + 0.3 * -0.5 + 0.2 * 0.0;
  std::vector<double> g(raw);
  for (double& v : g) v -= mean;
  m.tabs = {g};
  m.tab_at.assign(4, 0);
  validate_model(m);

  // chi-square of pooled per-index state counts against the marginal law
  const int reps = 25000;  // 4 indices -> 1e5 observations
  long counts[4][3] = {};
  for (int r = 0; r < reps; ++r) {
    std::vector<int> st = sample_states(m, 4, 123, r);
    for (int j = 0; j < 4; ++j) ++counts[j][st[size_t(j)]];
  }
  double chi2 = 0;
  for (int j = 0; j < 4; ++j)
    for (int s = 0; s < 3; ++s) {
      double expd = reps * m.chain.initial[size_t(s)];
      chi2 += sqr(double(counts[j][s]) - expd) / expd;
    }
  double pval = chi_square_sf(chi2, 4 * 2);
  CHECK(pval > 0.01);
  // and the exact sum law matches the literal iid model
  ArrayModel iid = make_iid_lattice(4, raw, {0.5, 0.3, 0.2}, 0.5);
  LatticePmf pa = exact_sum_pmf(m, 1, 4);
  LatticePmf pb = exact_sum_pmf(iid, 1, 4);
  REQUIRE(pa.w.size() == pb.w.size());
  for (size_t i = 0; i < pa.w.size(); ++i) CHECK(pa.w[i] == doctest::Approx(pb.w[i]).epsilon(1e-12));
}

TEST_CASE("constant observable on the expanding family centers to zero") {
  ArrayModel e = make_expanding_model(32, 2, 0);
  SamplePath p = sample_path(e, 32, 9, 3);
  for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("slow variance construction hits the target exponent") {
  SUBCASE("gamma = 1 is the linear regime") {
    ArrayModel m = build_slow_variance_model(1.0, 1 << 10);
    VarianceProfile vp = variance_profile(m);
    std::vector<double> lx, ly;
    for (int mm = 64; mm <= 1024; mm *= 2) {
      lx.push_back(std::log(double(mm)));
      ly.push_back(std::log(vp.var[size_t(mm)]));
    }
    CHECK(std::fabs(fit_line(lx, ly).slope - 1.0) <= 0.05);
  }
  SUBCASE("gamma = 0.5 at n = 2^14") {
    ArrayModel m = build_slow_variance_model(0.5, 1 << 14);
    VarianceProfile vp = variance_profile(m);
    std::vector<double> lx, ly;
    for (int mm = 1024; mm <= (1 << 14); mm *= 2) {
      lx.push_back(std::log(double(mm)));
      ly.push_back(std::log(vp.var[size_t(mm)]));
    }
    double slope = fit_line(lx, ly).slope;
    CHECK(slope >= 0.35);
    CHECK(slope <= 0.65);
    // growth-constant validity gate at this size
    MixingProfile prof = dobrushin_phi_profile(m);
    GrowthConstants gc = growth_constants(prof, max_l2_norm(m), vp.sigma, 1.0, 4.0, 1e-6);
    CHECK(gc.qn_little_o_ok);
  }
  SUBCASE("gamma outside (0,1] is rejected") {
    CHECK_THROWS_AS(build_slow_variance_model(0.0, 64), PreconditionError);
    CHECK_THROWS_AS(build_slow_variance_model(1.5, 64), PreconditionError);
  }
}

TEST_CASE("window of zero reproduces the base model") {
  ArrayModel base = vt::biased_chain(6);
  ArrayModel win = local_window_array(base, 0, [&](const std::vector<int>& t) {
    return double(t[0] == 0 ? -1.0 : 1.0);
  });
  // same exact law of S_n up to the per-index centering of the two builds
  LatticePmf pa = exact_sum_pmf(win, 1, 6);
  LatticePmf pb = exact_sum_pmf(vt::biased_chain(6), 1, 6);
  REQUIRE(pa.w.size() == pb.w.size());
  for (size_t i = 0; i < pa.w.size(); ++i) CHECK(pa.w[i] == doctest::Approx(pb.w[i]).epsilon(1e-12));
  CHECK(pa.offset == doctest::Approx(pb.offset).epsilon(1e-9));
}

TEST_CASE("two-sided window enlargement matches base-path enumeration") {
  ArrayModel base = vt::biased_chain(3);
  auto f = [](const std::vector<int>& t) {
    double s = 0;
    for (int x : t) s += (x == 0 ? -1.0 : 1.0);
    return s;
  };
  ArrayModel win = local_window_array(base, 1, f);
  CHECK(win.chain.num_states <= 8);
  CHECK(win.memory == 2);

  // independent oracle: enumerate the extended base (times 0..4) directly
  std::map<long long, double> brute;
  const ChainCore& bc = win.profile_base;  // the extended base chain
  REQUIRE(bc.len == 5);
  std::vector<int> st(5, 0);
  std::function<void(int, double)> rec = [&](int slot, double prob) {
    if (slot == 5) {
      double s = 0;
      for (int j = 1; j <= 3; ++j)
        for (int i = -1; i <= 1; ++i) s += (st[size_t(j + i - bc.t0)] == 0 ? -1.0 : 1.0);
      brute[(long long)std::llround((s + 9.0) / 2.0)] += prob;  // raw sums are odd
      return;
    }
    for (int v = 0; v < 2; ++v) {
      double p = slot == 0 ? bc.initial[size_t(v)]
                           : bc.mats[size_t(bc.mat_at[size_t(slot) - 1])](st[size_t(slot) - 1], v);
      st[size_t(slot)] = v;
      rec(slot + 1, prob * p);
    }
  };
  rec(0, 1.0);
  double mean = 0;
  for (auto& kv : brute) mean += (2.0 * double(kv.first) - 9.0) * kv.second;
  LatticePmf pw = exact_sum_pmf(win, 1, 3);
  double tv = 0;
  for (auto& kv : brute) {
    double v = 2.0 * double(kv.first) - 9.0 - mean;  // centered
    double got = 0;
    for (size_t i = 0; i < pw.w.size(); ++i)
      if (std::fabs(pw.value(i) - v) < 1e-9) got += pw.w[i];
    tv += std::fabs(got - kv.second);
  }
  CHECK(0.5 * tv <= 1e-12);
}

TEST_CASE("memory coefficient of a window array vanishes at the window memory") {
  ArrayModel base = vt::biased_chain(6);
  ArrayModel win = local_window_array(base, 1, [](const std::vector<int>& t) {
    double s = 0;
    for (int x : t) s += (x == 0 ? -1.0 : 1.0);
    return s;
  });
  MixingProfile prof = dobrushin_phi_profile(win);
  GrowthConstants gc;  // the exact-zero branch reads only the declared memory
  gc.K = max_l2_norm(win);
  gc.Q = 1.0;
  gc.beta = 1.0;
  MemoryCoefficient mc = memory_coefficient(win, prof, gc, 4.0, 2 * 1);
  CHECK(mc.exact_zero);
  CHECK(mc.bound == 0.0);
}

TEST_CASE("window enlargement budget") {
  ArrayModel base = vt::biased_chain(8);
  CHECK_THROWS_AS(local_window_array(
                      base, 8, [](const std::vector<int>&) { return 0.0; }, 4096),
                  ResourceError);
}

TEST_CASE("window approximation decays geometrically for a smooth observable") {
  ArrayModel e = make_expanding_model(8, 0, 0);
  double prev = 0;
  double prev_se = 0;
  for (int r : {4, 8, 12}) {
    WindowApproxResult wa = window_approximation(e, r, 2.0, 100000, 5);
    if (r > 4) {
      // log beta decreasing with a 3-sigma guard
      CHECK(std::log(wa.beta_hat + 3.0 * wa.se) < std::log(prev - 3.0 * prev_se));
    }
    prev = wa.beta_hat;
    prev_se = wa.se;
  }
}

TEST_CASE("window approximation of a constant observable is exact") {
  ArrayModel e = make_expanding_model(8, 2, 0);
  WindowApproxResult wa = window_approximation(e, 3, 2.0, 2000, 5);
  CHECK(wa.beta_hat == 0.0);
}

TEST_CASE("full refinement reproduces a dyadic step observable exactly") {
  ArrayModel e = make_expanding_model(8, 1, 2);
  WindowApproxResult wa = window_approximation(e, 8, 2.0, 2000, 5);
  CHECK(wa.beta_hat == 0.0);
  SamplePath p1 = sample_path(e, 8, 11, 0);
  SamplePath p2 = sample_path(wa.approx, 8, 11, 0);
  for (int j = 0; j < 8; ++j) CHECK(p1.values[size_t(j)] == p2.values[size_t(j)]);
}

TEST_CASE("non-expanding parameterization is rejected") {
  ArrayModel e = make_expanding_model(8, 0, 0);
  e.expanding.branches = 1;
  CHECK_THROWS_AS(validate_model(e), ConfigError);
}

TEST_CASE("validation names the offending index") {
  ArrayModel m = vt::biased_chain(4);
  m.tabs[1][0] += 0.3;  // off lattice and uncentered at index 2
  CHECK_THROWS_WITH_AS(validate_model(m), doctest::Contains("index 2"), ConfigError);
  ArrayModel m2 = vt::biased_chain(4);
  m2.chain.mats[0](0, 0) += 1e-6;
  CHECK_THROWS_WITH_AS(validate_model(m2), doctest::Contains("not stochastic"), ConfigError);
}

TEST_CASE("centering invariant holds on every builtin model") {
  for (const char* name : {"iid_pm1", "elliptic", "skewed", "sequence", "memory2",
                           "local_window", "slow_variance_05", "pair_coboundary"}) {
    ArrayModel m = make_builtin_model(name, 64);
    for (int j = 1; j <= m.n; ++j) {
      LatticePmf f = marginal_pmf(m, j);
      double mean = 0;
      for (size_t i = 0; i < f.w.size(); ++i) mean += f.w[i] * f.value(i);
      CHECK(std::fabs(mean) <= 1e-12 * std::max(1.0, std::fabs(f.value(f.w.size() - 1))));
    }
  }
}

TEST_CASE("model files round trip") {
  ArrayModel m = vt::biased_chain(16);
  save_model(m, "build_test_model.kv");
  ArrayModel r = load_model("build_test_model.kv");
  LatticePmf pa = exact_sum_pmf(m, 1, 16);
  LatticePmf pb = exact_sum_pmf(r, 1, 16);
  REQUIRE(pa.w.size() == pb.w.size());
  for (size_t i = 0; i < pa.w.size(); ++i) CHECK(pa.w[i] == pb.w[i]);
  CHECK(pa.offset == pb.offset);
  SamplePath sa = sample_path(m, 16, 3, 1);
  SamplePath sb = sample_path(r, 16, 3, 1);
  CHECK(sa.values == sb.values);

  ArrayModel e = make_expanding_model(16, 1, 1);
  save_model(e, "build_test_model2.kv");
  ArrayModel re = load_model("build_test_model2.kv");
  CHECK(sample_path(e, 16, 3, 0).values == sample_path(re, 16, 3, 0).values);
  std::remove("build_test_model.kv");
  std::remove("build_test_model2.kv");
}

}  // TEST_SUITE
