#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "varlin/errors.hpp"
#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

using namespace varlin;

TEST_SUITE("oracle") {

TEST_CASE("iid pair sum pmf") {
  ArrayModel m = make_iid_pm1(4);
  LatticePmf p = exact_sum_pmf(m, 1, 2);
  REQUIRE(p.w.size() == 3);
  CHECK(p.value(0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(p.w[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p.w[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.w[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("single index pmf equals the marginal law") {
  ArrayModel m = vt::biased_chain(5);
  for (int j = 1; j <= 5; ++j) {
    LatticePmf p = exact_sum_pmf(m, j, j);
    const std::vector<double>& pi = m.chain.marginal(j);
    const std::vector<double>& g = m.obs(j);
    REQUIRE(p.w.size() == 2);
    CHECK(p.value(0) == doctest::Approx(g[0]).epsilon(1e-13));
    CHECK(p.w[0] == doctest::Approx(pi[0]).epsilon(1e-13));
    CHECK(p.w[1] == doctest::Approx(pi[1]).epsilon(1e-13));
  }
}

TEST_CASE("biased chain pmf matches full path enumeration") {
  ArrayModel m = vt::biased_chain(3);
  CHECK(vt::tv_against(m, exact_sum_pmf(m, 1, 3), 1, 3) <= 1e-12);
}

TEST_CASE("dp oracle equals enumeration for small models") {
  for (int n : {2, 4, 6}) {
    ArrayModel m2 = vt::biased_chain(n);
    CHECK(vt::tv_against(m2, exact_sum_pmf(m2, 1, n), 1, n) <= 1e-12);
    ArrayModel m3 = vt::three_state_chain(n);
    CHECK(vt::tv_against(m3, exact_sum_pmf(m3, 1, n), 1, n) <= 1e-12);
  }
  ArrayModel m = vt::three_state_chain(6);
  CHECK(vt::tv_against(m, exact_sum_pmf(m, 2, 5), 2, 5) <= 1e-12);
}

TEST_CASE("iid variance is additive") {
  ArrayModel m = make_iid_pm1(8);
  CHECK(variance_of_range(m, 1, 5) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(variance_of_range(m, 3, 7) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("pure coboundary variance stays bounded and matches the double sum") {
  ArrayModel m = make_pair_coboundary_chain(64);
  for (int len : {4, 16, 64}) {
    double v = variance_of_range(m, 1, len);
    CHECK(v <= 8.0 + 1e-9);  // telescoping sum of two bounded terms
    double dbl = 0;
    for (int i = 1; i <= len; ++i)
      for (int j = 1; j <= len; ++j) dbl += covariance(m, std::min(i, j), std::max(i, j));
    CHECK(v == doctest::Approx(dbl).epsilon(1e-9));
  }
}

TEST_CASE("variance equals the pmf second central moment") {
  for (const ArrayModel& m : {vt::biased_chain(24), make_elliptic_chain(24),
                              build_slow_variance_model(0.5, 256)}) {
    double v = variance_of_range(m, 1, m.n);
    MomentsCumulants mc = moments_and_cumulants(exact_sum_pmf(m, 1, m.n), 2);
    CHECK(v == doctest::Approx(mc.moment[2]).epsilon(1e-9));
  }
}

TEST_CASE("variance recursion equals the covariance double sum up to n = 256") {
  ArrayModel m = make_elliptic_chain(256);
  double dbl = 0;
  for (int i = 1; i <= 256; ++i) {
    dbl += covariance(m, i, i);
    for (int j = i + 1; j <= 256; ++j) dbl += 2.0 * covariance(m, i, j);
  }
  CHECK(variance_of_range(m, 1, 256) == doctest::Approx(dbl).epsilon(1e-9));
}

TEST_CASE("range variance is superadditive-consistent") {
  ArrayModel m = vt::biased_chain(48);
  std::vector<double> ma(49, 0.0), mb(49, 0.0);
  for (int j = 1; j <= 20; ++j) ma[size_t(j)] = 1.0;
  for (int j = 21; j <= 48; ++j) mb[size_t(j)] = 1.0;
  double cross = masked_cross_covariance(m, ma, mb);
  double whole = variance_of_range(m, 1, 48);
  double split = variance_of_range(m, 1, 20) + variance_of_range(m, 21, 48) + 2.0 * cross;
  CHECK(whole == doctest::Approx(split).epsilon(1e-9));
}

TEST_CASE("covariance basics") {
  ArrayModel iid = make_iid_pm1(10);
  CHECK(covariance(iid, 3, 3) >= 0.0);
  CHECK(std::fabs(covariance(iid, 2, 7)) <= 1e-14);
  ArrayModel m = vt::biased_chain(10);
  double direct = covariance(m, 2, 5);
  double brute = vt::brute_moment(m, [&](const std::vector<int>& st) {
    return vt::xi_on_path(m, st, 2) * vt::xi_on_path(m, st, 5);
  });
  CHECK(direct == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("covariance respects the rho mixing bound") {
  ArrayModel m = make_elliptic_chain(40);
  MixingProfile prof = dobrushin_phi_profile(m);
  for (int i : {1, 5, 10}) {
    for (int k : {1, 2, 4, 8}) {
      double cov = std::fabs(covariance(m, i, i + k));
      double l2i = std::sqrt(variance_of_range(m, i, i));
      double l2j = std::sqrt(variance_of_range(m, i + k, i + k));
      CHECK(cov <= prof.rho[size_t(k)] * l2i * l2j + 1e-12);
    }
  }
}

TEST_CASE("moments and cumulants") {
  ArrayModel m = make_iid_pm1(8);
  SUBCASE("symmetric pmf has vanishing odd cumulants") {
    MomentsCumulants mc = moments_and_cumulants(exact_sum_pmf(m, 1, 8), 6);
    CHECK(std::fabs(mc.cumulant[3]) <= 1e-12);
    CHECK(std::fabs(mc.cumulant[5]) <= 1e-11);
  }
  SUBCASE("fair two-point cumulants") {
    MomentsCumulants mc = moments_and_cumulants(exact_sum_pmf(m, 1, 1), 4);
    CHECK(mc.cumulant[2] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mc.cumulant[4] == doctest::Approx(-2.0).epsilon(1e-13));
  }
  SUBCASE("third cumulant scales cubically under lattice rescaling") {
    ArrayModel sk = make_iid_lattice(6, {3.0, -1.0}, {0.25, 0.75}, 1.0);
    ArrayModel sk3 = make_iid_lattice(6, {9.0, -3.0}, {0.25, 0.75}, 3.0);
    MomentsCumulants a = moments_and_cumulants(exact_sum_pmf(sk, 1, 6), 3);
    MomentsCumulants b = moments_and_cumulants(exact_sum_pmf(sk3, 1, 6), 3);
    CHECK(b.cumulant[3] == doctest::Approx(27.0 * a.cumulant[3]).epsilon(1e-9));
  }
  SUBCASE("order cap") {
    CHECK_THROWS_AS(moments_and_cumulants(exact_sum_pmf(m, 1, 4), 17), PreconditionError);
  }
}

TEST_CASE("tail probabilities") {
  ArrayModel m = make_iid_pm1(4);
  LatticePmf p = exact_sum_pmf(m, 1, 4);
  CHECK(tail_probability(p, -100.0, true) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tail_probability(p, 4.0, true) == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
  for (double t : {-4.0, -2.0, 0.0, 2.0, 4.0}) {
    double upper = tail_probability(p, t, true);
    double below = tail_probability(p, t - p.step, false);  // P(S < t) on the lattice
    CHECK(upper + below == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::exp(log_tail_probability(p, 4.0, true)) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("deep tails stay finite in log space") {
  ArrayModel m = make_iid_pm1(1024);
  LatticePmf p = exact_sum_pmf(m, 1, 1024);
  double lp = log_tail_probability(p, 1008.0, true);
  CHECK(lp < std::log(1e-280));
  CHECK(std::isfinite(lp));
}

TEST_CASE("local window oracle agrees with base-path enumeration") {
  ArrayModel m = make_local_window_model(8);  // window 3, causal kernel
  CHECK(vt::tv_against(m, exact_sum_pmf(m, 1, 8), 1, 8) <= 1e-12);
  CHECK(vt::tv_against(m, exact_sum_pmf(m, 3, 6), 3, 6) <= 1e-12);
  double brute_var = vt::brute_moment(m, [&](const std::vector<int>& st) {
    double s = 0;
    for (int j = 2; j <= 7; ++j) s += vt::xi_on_path(m, st, j);
    return s * s;
  });
  CHECK(variance_of_range(m, 2, 7) == doctest::Approx(brute_var).epsilon(1e-10));
  PrefixVarianceScanner sc(m, 2);
  for (int b = 2; b <= 8; ++b) {
    REQUIRE(sc.advance());
    CHECK(sc.variance() == doctest::Approx(variance_of_range(m, 2, b)).epsilon(1e-10));
  }
}

TEST_CASE("pmf budget is enforced") {
  ArrayModel m = make_iid_pm1(4096);
  CHECK_THROWS_AS(exact_sum_pmf(m, 1, 4096, 1024), ResourceError);
}

TEST_CASE("pmf mass is exact to 1e-12") {
  ArrayModel m = make_elliptic_chain(2048);
  LatticePmf p = exact_sum_pmf(m, 1, 2048);
  CHECK(std::fabs(p.total_mass() - 1.0) <= 1e-12);
}

}  // TEST_SUITE
