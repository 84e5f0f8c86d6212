#ifndef VARLIN_TEST_SUPPORT_HPP
#define VARLIN_TEST_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

namespace vt {

using varlin::ArrayModel;
using varlin::LatticePmf;

// Exhaustive path enumeration over the model's chain (the independent oracle
// for all small-instance distribution checks).  visit(prob, states) is called
// once per state path; states are indexed by chain slot.
inline void enumerate_paths(const ArrayModel& m,
                            const std::function<void(double, const std::vector<int>&)>& visit) {
  const varlin::ChainCore& c = m.chain;
  std::vector<int> st(size_t(c.len), 0);
  std::function<void(int, double)> rec = [&](int slot, double prob) {
    if (prob == 0.0) return;
    if (slot == c.len) {
      visit(prob, st);
      return;
    }
    for (int s = 0; s < c.num_states; ++s) {
      double p = slot == 0 ? c.initial[size_t(s)]
                           : c.mats[size_t(c.mat_at[size_t(slot) - 1])](st[size_t(slot) - 1], s);
      if (p == 0.0) continue;
      st[size_t(slot)] = s;
      rec(slot + 1, prob * p);
    }
  };
  rec(0, 1.0);
}

// value of xi_j for a given state path (chain slots)
inline double xi_on_path(const ArrayModel& m, const std::vector<int>& st, int j) {
  if (m.kind == varlin::ModelKind::LocalWindow) {
    double v = 0;
    for (int i = m.kern_lo; i <= m.kern_hi; ++i)
      v += m.base_obs(j + i)[size_t(st[size_t(j + i - m.chain.t0)])];
    return v;
  }
  return m.obs(j)[size_t(st[size_t(j) - 1])];
}

inline std::map<long long, double> brute_sum_pmf(const ArrayModel& m, int a, int b,
                                                 double* offset_out) {
  // accumulate on the integer lattice relative to the model step
  std::map<long long, double> acc;
  double offset = 0;
  bool first = true;
  enumerate_paths(m, [&](double prob, const std::vector<int>& st) {
    double s = 0;
    for (int j = a; j <= b; ++j) s += xi_on_path(m, st, j);
    if (first) {
      offset = s;
      first = false;
    }
    long long pos = (long long)std::llround((s - offset) / m.step);
    acc[pos] += prob;
  });
  if (offset_out) *offset_out = offset;
  return acc;
}

inline double tv_against(const ArrayModel& m, const LatticePmf& pmf, int a, int b) {
  double offset = 0;
  std::map<long long, double> brute = brute_sum_pmf(m, a, b, &offset);
  double tv = 0;
  std::map<long long, double> lat;
  for (size_t i = 0; i < pmf.w.size(); ++i) {
    long long pos = (long long)std::llround((pmf.value(i) - offset) / pmf.step);
    lat[pos] += pmf.w[i];
  }
  std::map<long long, double> keys = brute;
  for (auto& kv : lat) keys[kv.first] += 0.0;
  for (auto& kv : keys) {
    double pb = brute.count(kv.first) ? brute[kv.first] : 0.0;
    double pl = lat.count(kv.first) ? lat[kv.first] : 0.0;
    tv += std::fabs(pb - pl);
  }
  return 0.5 * tv;
}

inline double brute_moment(const ArrayModel& m, const std::function<double(const std::vector<int>&)>& f) {
  double acc = 0;
  enumerate_paths(m, [&](double prob, const std::vector<int>& st) { acc += prob * f(st); });
  return acc;
}

// small biased time-varying 2-state chain with exactly centered observables
inline ArrayModel biased_chain(int n) {
  using namespace varlin;
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "biased-2state";
  m.n = n;
  m.step = 2.0;
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = 2;
  c.initial = {0.6, 0.4};
  Matrix A(2, 2), B(2, 2);
  A(0, 0) = 0.8; A(0, 1) = 0.2; A(1, 0) = 0.3; A(1, 1) = 0.7;
  B(0, 0) = 0.55; B(0, 1) = 0.45; B(1, 0) = 0.25; B(1, 1) = 0.75;
  c.mats = {A, B};
  c.mat_at.resize(size_t(n - 1));
  for (int s = 0; s + 1 < n; ++s) c.mat_at[size_t(s)] = s % 2;
  c.finalize();
  m.tab_at.resize(size_t(n));
  for (int j = 1; j <= n; ++j) {
    const std::vector<double>& pi = c.marginal(j);
    double mean = pi[1] - pi[0];
    m.tabs.push_back({-1.0 - mean, 1.0 - mean});
    m.tab_at[size_t(j) - 1] = j - 1;
  }
  m.chain = std::move(c);
  validate_model(m);
  return m;
}

// 3-state chain for the brute-force cross checks
inline ArrayModel three_state_chain(int n) {
  using namespace varlin;
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "three-state";
  m.n = n;
  m.step = 0.5;
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = 3;
  c.initial = {0.5, 0.3, 0.2};
  Matrix P(3, 3);
  double rows[3][3] = {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) P(i, j) = rows[i][j];
  c.mats = {P};
  c.mat_at.assign(size_t(n - 1), 0);
  c.finalize();
  m.tab_at.resize(size_t(n));
  for (int j = 1; j <= n; ++j) {
    const std::vector<double>& pi = c.marginal(j);
    std::vector<double> raw = {1.0, -0.5, 0.0};
    double mean = 0;
    for (int s = 0; s < 3; ++s) mean += pi[size_t(s)] * raw[size_t(s)];
    for (double& v : raw) v -= mean;
    m.tabs.push_back(raw);
    m.tab_at[size_t(j) - 1] = j - 1;
  }
  m.chain = std::move(c);
  validate_model(m);
  return m;
}

}  // namespace vt

#endif
