#include "varlin/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fstream>
#include <sstream>

#include "varlin/csv.hpp"
#include "varlin/errors.hpp"

namespace varlin {

std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::ExactTiny: return "exact-tiny";
    case Provenance::DobrushinBound: return "dobrushin-bound";
    case Provenance::Declared: return "declared";
  }
  return "?";
}

namespace {

void derive_alpha_rho(MixingProfile& p) {
  const int n = p.n;
  p.rho.assign(size_t(n) + 1, 0.0);
  p.alpha.assign(size_t(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j) {
    double phi = p.phi[size_t(j)];
    double rho = std::min(1.0, 2.0 * std::sqrt(std::max(0.0, phi)));
    p.rho[size_t(j)] = rho;
    p.alpha[size_t(j)] = std::min(phi, 0.25 * rho);
  }
}

// max over start positions of the product of j consecutive per-step
// contraction coefficients; zero once every window product underflows.
std::vector<double> window_products(const std::vector<double>& delta, int n) {
  std::vector<double> out(size_t(n) + 1, 0.0);
  const int steps = int(delta.size());
  bool homogeneous = true;
  for (double d : delta)
    if (d != delta[0]) { homogeneous = false; break; }
  if (steps == 0) return out;  // single-time chain: nothing to contract through
  if (homogeneous) {
    double prod = 1.0;
    for (int j = 1; j <= n; ++j) {
      prod *= delta[0];
      out[size_t(j)] = prod;
      if (prod < 1e-300) break;
    }
    return out;
  }
  // prefix log sums with zero positions handled separately
  std::vector<double> pre(size_t(steps) + 1, 0.0);
  std::vector<int> zeros(size_t(steps) + 1, 0);
  for (int i = 0; i < steps; ++i) {
    double d = delta[size_t(i)];
    pre[size_t(i) + 1] = pre[size_t(i)] + (d > 0 ? std::log(d) : 0.0);
    zeros[size_t(i) + 1] = zeros[size_t(i)] + (d == 0.0 ? 1 : 0);
  }
  for (int j = 1; j <= n; ++j) {
    if (j > steps) break;  // not enough steps between the blocks: coefficient 0
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int k = 0; k + j <= steps; ++k) {
      if (zeros[size_t(k + j)] - zeros[size_t(k)] > 0) continue;
      best = std::max(best, pre[size_t(k + j)] - pre[size_t(k)]);
      any = true;
    }
    out[size_t(j)] = any ? std::exp(best) : 0.0;
    if (out[size_t(j)] < 1e-300) break;
  }
  return out;
}

}  // namespace

MixingProfile dobrushin_phi_profile(const ArrayModel& m) {
  if (!m.finite_state())
    throw PreconditionError("dobrushin profile requires a finite-state chain");
  const ChainCore& basis = m.use_profile_base ? m.profile_base : m.chain;
  std::vector<double> delta;
  delta.reserve(size_t(std::max(0, basis.len - 1)));
  std::vector<double> delta_of_mat(basis.mats.size(), 0.0);
  for (size_t k = 0; k < basis.mats.size(); ++k) delta_of_mat[k] = dobrushin_delta(basis.mats[k]);
  for (int s = 0; s + 1 < basis.len; ++s) delta.push_back(delta_of_mat[size_t(basis.mat_at[size_t(s)])]);

  MixingProfile p;
  p.n = m.n;
  p.phi.assign(size_t(m.n) + 1, 0.0);
  const int shift = m.profile_shift;
  std::vector<double> prod = window_products(delta, m.n);
  for (int j = 1; j <= m.n; ++j) {
    if (j <= shift)
      p.phi[size_t(j)] = 1.0;
    else
      p.phi[size_t(j)] = std::min(1.0, prod[size_t(j - shift)]);
  }
  derive_alpha_rho(p);
  p.prov = (shift > 0 || m.use_profile_base) ? Provenance::Declared : Provenance::DobrushinBound;
  return p;
}

MixingProfile declared_profile(int n, const std::vector<double>& phi_by_lag) {
  if (int(phi_by_lag.size()) < n + 1) throw PreconditionError("declared phi must cover lags 1..n");
  MixingProfile p;
  p.n = n;
  p.phi = phi_by_lag;
  derive_alpha_rho(p);
  p.prov = Provenance::Declared;
  return p;
}

namespace {

struct JointMarginals {
  std::vector<double> pa, pb;  // row / column marginals
};

JointMarginals joint_marginals(const Matrix& joint) {
  JointMarginals jm;
  jm.pa.assign(size_t(joint.rows), 0.0);
  jm.pb.assign(size_t(joint.cols), 0.0);
  for (int a = 0; a < joint.rows; ++a)
    for (int b = 0; b < joint.cols; ++b) {
      jm.pa[size_t(a)] += joint(a, b);
      jm.pb[size_t(b)] += joint(a, b);
    }
  return jm;
}

}  // namespace

double brute_force_varpi(const Matrix& joint, double q, double p) {
  const bool q_inf = std::isinf(q);
  JointMarginals jm = joint_marginals(joint);
  const int A = joint.rows, B = joint.cols;
  if (q_inf) {
    if (B > 20) throw ResourceError("future alphabet too large for vertex enumeration");
    double best = 0.0;
    const uint32_t lim = uint32_t(1) << B;
    std::vector<double> dev(size_t(A), 0.0);
    for (uint32_t mask = 0; mask < lim; ++mask) {
      // h = +-1 per future letter; E[h | a] - E[h]
      double eh = 0;
      for (int b = 0; b < B; ++b) eh += ((mask >> b) & 1u ? 1.0 : -1.0) * jm.pb[size_t(b)];
      for (int a = 0; a < A; ++a) {
        double s = 0;
        for (int b = 0; b < B; ++b)
          s += ((mask >> b) & 1u ? 1.0 : -1.0) * joint(a, b);
        dev[size_t(a)] = (jm.pa[size_t(a)] > 0 ? s / jm.pa[size_t(a)] : 0.0) - eh;
      }
      double norm = 0;
      if (p == 1.0) {
        for (int a = 0; a < A; ++a) norm += jm.pa[size_t(a)] * std::fabs(dev[size_t(a)]);
      } else if (p == 2.0) {
        for (int a = 0; a < A; ++a) norm += jm.pa[size_t(a)] * dev[size_t(a)] * dev[size_t(a)];
        norm = std::sqrt(norm);
      } else if (std::isinf(p)) {
        for (int a = 0; a < A; ++a)
          if (jm.pa[size_t(a)] > 0) norm = std::max(norm, std::fabs(dev[size_t(a)]));
      } else {
        throw PreconditionError("p must be 1, 2 or inf");
      }
      best = std::max(best, norm);
    }
    return best;
  }
  if (q == 2.0 && p == 2.0) {
    if (A > 256 || B > 256) throw ResourceError("alphabet too large for the operator-norm route");
    // canonical correlation operator K_ab = (J_ab - pa pb) / sqrt(pa pb)
    Matrix K(A, B);
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < B; ++b) {
        double pa = jm.pa[size_t(a)], pb = jm.pb[size_t(b)];
        K(a, b) = (pa > 0 && pb > 0) ? (joint(a, b) - pa * pb) / std::sqrt(pa * pb) : 0.0;
      }
    return max_singular_value(K);
  }
  throw PreconditionError("brute-force coefficients support q in {2, inf} only");
}

double definitional_alpha(const Matrix& joint) {
  const int A = joint.rows, B = joint.cols;
  if (A > 20 || B > 20) throw ResourceError("alphabet too large for event enumeration");
  JointMarginals jm = joint_marginals(joint);
  double best = 0;
  const uint32_t la = uint32_t(1) << A, lb = uint32_t(1) << B;
  for (uint32_t ea = 0; ea < la; ++ea) {
    double pa = 0;
    for (int a = 0; a < A; ++a)
      if ((ea >> a) & 1u) pa += jm.pa[size_t(a)];
    for (uint32_t eb = 0; eb < lb; ++eb) {
      double pb = 0, pab = 0;
      for (int b = 0; b < B; ++b)
        if ((eb >> b) & 1u) pb += jm.pb[size_t(b)];
      for (int a = 0; a < A; ++a) {
        if (!((ea >> a) & 1u)) continue;
        for (int b = 0; b < B; ++b)
          if ((eb >> b) & 1u) pab += joint(a, b);
      }
      best = std::max(best, std::fabs(pab - pa * pb));
    }
  }
  return best;
}

double definitional_phi(const Matrix& joint) {
  // sup over conditioning events is reached on atoms of positive mass
  const int A = joint.rows, B = joint.cols;
  if (B > 20) throw ResourceError("alphabet too large for event enumeration");
  JointMarginals jm = joint_marginals(joint);
  double best = 0;
  const uint32_t lb = uint32_t(1) << B;
  for (int a = 0; a < A; ++a) {
    if (jm.pa[size_t(a)] <= 0) continue;
    for (uint32_t eb = 0; eb < lb; ++eb) {
      double pb = 0, pb_given = 0;
      for (int b = 0; b < B; ++b)
        if ((eb >> b) & 1u) {
          pb += jm.pb[size_t(b)];
          pb_given += joint(a, b) / jm.pa[size_t(a)];
        }
      best = std::max(best, std::fabs(pb_given - pb));
    }
  }
  return best;
}

double definitional_rho(const Matrix& joint) { return brute_force_varpi(joint, 2.0, 2.0); }

double interpolate_bound(const MixingProfile& p, double q, int lag, int* branch) {
  if (lag < 1 || lag > p.n) throw PreconditionError("lag outside the profile");
  if (!(q > 2.0) && q != 2.0) throw PreconditionError("interpolation requires q >= 2");
  if (p.phi.empty() && p.rho.empty()) throw PreconditionError("profile has neither phi nor rho");
  double phi_branch = std::numeric_limits<double>::infinity();
  double rho_branch = std::numeric_limits<double>::infinity();
  if (!p.phi.empty()) phi_branch = std::pow(p.phi[size_t(lag)], 1.0 - 1.0 / q);
  if (!p.rho.empty()) rho_branch = std::pow(p.rho[size_t(lag)], 2.0 / q);
  if (branch) *branch = phi_branch <= rho_branch ? 0 : 1;
  return std::min(phi_branch, rho_branch);
}

std::vector<ConsistencyIssue> consistency_check(const MixingProfile& p) {
  std::vector<ConsistencyIssue> issues;
  const double tol = 1e-12;
  for (int j = 1; j <= p.n; ++j) {
    double a = p.alpha[size_t(j)], r = p.rho[size_t(j)], f = p.phi[size_t(j)];
    if (a > f + tol) issues.push_back({j, "alpha<=phi", a, f});
    if (a > 0.25 * r + tol) issues.push_back({j, "alpha<=rho/4", a, 0.25 * r});
    if (r > 2.0 * std::sqrt(f) + tol) issues.push_back({j, "rho<=2sqrt(phi)", r, 2.0 * std::sqrt(f)});
  }
  return issues;
}

Matrix joint_two_point(const ChainCore& chain, int t1, int t2) {
  if (t1 > t2) std::swap(t1, t2);
  const int S = chain.num_states;
  Matrix J(S, S);
  const std::vector<double>& p1 = chain.marginal(t1);
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(size_t(S), 0.0);
    row[size_t(s)] = 1.0;
    for (int t = t1; t < t2; ++t) row = vecmat(row, chain.step_from(t));
    for (int s2 = 0; s2 < S; ++s2) J(s, s2) = p1[size_t(s)] * row[size_t(s2)];
  }
  return J;
}

Matrix joint_block_law(const ChainCore& chain, int a, int b, int c, int d, int state_budget) {
  const int S = chain.num_states;
  const int la = b - a + 1, lb = d - c + 1;
  double ca = std::pow(double(S), double(la)), cb = std::pow(double(S), double(lb));
  if (ca * cb > double(state_budget)) throw ResourceError("joint block law exceeds the budget");
  const int A = int(ca), B = int(cb);
  Matrix J(A, B);
  // enumerate block words; probability of the pair by chaining transitions
  std::vector<int> wa(size_t(la), 0), wb(size_t(lb), 0);
  for (int ia = 0; ia < A; ++ia) {
    int x = ia;
    for (int i = 0; i < la; ++i) { wa[size_t(i)] = x % S; x /= S; }
    double pa = chain.marginal(a)[size_t(wa[0])];
    for (int i = 0; i + 1 < la; ++i) pa *= chain.step_from(a + i)(wa[size_t(i)], wa[size_t(i) + 1]);
    if (pa == 0.0) continue;
    // law of state_c given state_b = wa[la-1]
    std::vector<double> bridge(size_t(S), 0.0);
    bridge[size_t(wa[size_t(la) - 1])] = 1.0;
    for (int t = b; t < c; ++t) bridge = vecmat(bridge, chain.step_from(t));
    for (int ib = 0; ib < B; ++ib) {
      int y = ib;
      for (int i = 0; i < lb; ++i) { wb[size_t(i)] = y % S; y /= S; }
      double pb = bridge[size_t(wb[0])];
      for (int i = 0; i + 1 < lb; ++i) pb *= chain.step_from(c + i)(wb[size_t(i)], wb[size_t(i) + 1]);
      J(ia, ib) = pa * pb;
    }
  }
  return J;
}

MixingProfile load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file: " + path);
  std::string line;
  std::getline(in, line);  // header
  MixingProfile p;
  std::vector<double> a{0.0}, r{0.0}, f{0.0};
  std::string prov = "declared";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ConfigError("malformed profile row: " + line);
    if (long(a.size()) != parse_int(cells[0]))
      throw ConfigError("profile lags must be contiguous from 1");
    a.push_back(parse_double(cells[1]));
    r.push_back(parse_double(cells[2]));
    f.push_back(parse_double(cells[3]));
    prov = cells[4];
  }
  p.n = int(a.size()) - 1;
  p.alpha = std::move(a);
  p.rho = std::move(r);
  p.phi = std::move(f);
  p.prov = prov == "exact-tiny" ? Provenance::ExactTiny
           : prov == "dobrushin-bound" ? Provenance::DobrushinBound
                                       : Provenance::Declared;
  return p;
}

void save_profile_csv(const MixingProfile& p, const std::string& path) {
  CsvWriter csv(path, "lag,alpha,rho,phi,provenance");
  for (int j = 1; j <= p.n; ++j)
    csv.row({fmt_int(j), fmt_double(p.alpha[size_t(j)]), fmt_double(p.rho[size_t(j)]),
             fmt_double(p.phi[size_t(j)]), provenance_name(p.prov)});
}

}  // namespace varlin
