#include "varlin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/numeric.hpp"

namespace varlin {

double LatticePmf::total_mass() const {
  Accum a;
  for (double p : w) a.add(p);
  return a.value();
}

void LatticePmf::validate() const {
  if (step <= 0) throw InvariantError("pmf lattice step must be positive");
  for (double p : w)
    if (p < -1e-15) throw InvariantError("negative pmf mass");
  double tot = total_mass();
  if (std::fabs(tot - 1.0) > 1e-12) throw InvariantError("pmf mass error exceeds 1e-12");
}

namespace {

// Uniform view of the finite-state kinds: a chain over time slots plus a
// kernel [lo, hi] mapping observable indices to base times.  Plain chains
// are the degenerate kernel {0}.
struct WalkView {
  const ChainCore* chain = nullptr;
  const std::vector<std::vector<double>>* tabs = nullptr;
  const std::vector<int>* tab_at = nullptr;
  int lo = 0, hi = 0;
  int n = 0;

  const std::vector<double>& table(int t) const {
    return (*tabs)[size_t((*tab_at)[size_t(t - chain->t0)])];
  }
  // weight of base time t in sum_{j in [a,b]} xi_j
  double range_weight(int t, int a, int b) const {
    int j_lo = std::max(a, t - hi);
    int j_hi = std::min(b, t - lo);
    return j_hi >= j_lo ? double(j_hi - j_lo + 1) : 0.0;
  }
};

WalkView walk_view(const ArrayModel& m) {
  if (!m.finite_state())
    throw PreconditionError("exact oracle requires a finite-state model (kind " + kind_name(m.kind) + ")");
  WalkView v;
  v.chain = &m.chain;
  v.tabs = &m.tabs;
  v.tab_at = &m.tab_at;
  v.n = m.n;
  if (m.kind == ModelKind::LocalWindow) {
    v.lo = m.kern_lo;
    v.hi = m.kern_hi;
  }
  return v;
}

// Forward (mass, first moment, second moment) state carried per chain state.
struct MomentState {
  std::vector<double> mass, m1, m2;
  void init(const std::vector<double>& law, int S) {
    mass = law;
    m1.assign(size_t(S), 0.0);
    m2.assign(size_t(S), 0.0);
  }
  void add_value(const std::vector<double>& g, double w) {
    if (w == 0.0) return;
    for (size_t s = 0; s < mass.size(); ++s) {
      double v = w * g[s];
      m2[s] += 2.0 * v * m1[s] + v * v * mass[s];
      m1[s] += v * mass[s];
    }
  }
  void propagate(const Matrix& P) {
    const int S = P.rows;
    std::vector<double> nm(size_t(S), 0.0), n1(size_t(S), 0.0), n2(size_t(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double ms = mass[size_t(s)], a1 = m1[size_t(s)], a2 = m2[size_t(s)];
      if (ms == 0.0 && a1 == 0.0 && a2 == 0.0) continue;
      for (int t = 0; t < S; ++t) {
        double p = P(s, t);
        if (p == 0.0) continue;
        nm[size_t(t)] += p * ms;
        n1[size_t(t)] += p * a1;
        n2[size_t(t)] += p * a2;
      }
    }
    mass.swap(nm);
    m1.swap(n1);
    m2.swap(n2);
  }
  double variance() const {
    double s1 = 0, s2 = 0;
    for (size_t s = 0; s < mass.size(); ++s) {
      s1 += m1[s];
      s2 += m2[s];
    }
    return s2 - s1 * s1;
  }
};

// Variance over base times [t_begin, t_end] with weight(t) applied to the
// table values.
template <typename WeightFn>
double weighted_walk_variance(const WalkView& v, int t_begin, int t_end, WeightFn weight) {
  const ChainCore& c = *v.chain;
  MomentState st;
  st.init(c.marginal(t_begin), c.num_states);
  st.add_value(v.table(t_begin), weight(t_begin));
  for (int t = t_begin; t < t_end; ++t) {
    st.propagate(c.step_from(t));
    st.add_value(v.table(t + 1), weight(t + 1));
  }
  return st.variance();
}

}  // namespace

double variance_of_range(const ArrayModel& m, int a, int b) {
  if (a < 1 || b > m.n || a > b) throw PreconditionError("index range outside the model row");
  WalkView v = walk_view(m);
  return weighted_walk_variance(v, a + v.lo, b + v.hi,
                                [&](int t) { return v.range_weight(t, a, b); });
}

VarianceProfile variance_profile(const ArrayModel& m) {
  std::vector<double> mask(size_t(m.n) + 1, 1.0);
  mask[0] = 0.0;
  VarianceProfile out;
  out.var = masked_prefix_variances(m, mask);
  out.sigma = std::sqrt(std::max(0.0, out.var[size_t(m.n)]));
  return out;
}

double masked_variance(const ArrayModel& m, const std::vector<double>& mask) {
  WalkView v = walk_view(m);
  // cumulative mask for O(1) base-time weights
  std::vector<double> pre(size_t(m.n) + 1, 0.0);
  for (int j = 1; j <= m.n; ++j) pre[size_t(j)] = pre[size_t(j) - 1] + mask[size_t(j)];
  auto weight = [&](int t) {
    int j_lo = std::max(1, t - v.hi);
    int j_hi = std::min(m.n, t - v.lo);
    return j_hi >= j_lo ? pre[size_t(j_hi)] - pre[size_t(j_lo) - 1] : 0.0;
  };
  return weighted_walk_variance(v, 1 + v.lo, m.n + v.hi, weight);
}

std::vector<double> masked_prefix_variances(const ArrayModel& m, const std::vector<double>& mask) {
  std::vector<double> out(size_t(m.n) + 1, 0.0);
  WalkView v = walk_view(m);
  const ChainCore& c = *v.chain;
  const int span = v.hi - v.lo;
  MomentState stable;
  stable.init(c.marginal(1 + v.lo), c.num_states);
  int stable_t = 1 + v.lo;  // stable state includes base times <= stable_t
  auto full_weight = [&](int t) {
    // weight of base time t once the range end passed t - lo
    int j_lo = std::max(1, t - v.hi);
    int j_hi = t - v.lo;
    double w = 0;
    for (int j = j_lo; j <= std::min(j_hi, m.n); ++j) w += mask[size_t(j)];
    return w;
  };
  stable.add_value(v.table(stable_t), full_weight(stable_t));
  for (int b = 1; b <= m.n; ++b) {
    while (stable_t < b + v.lo) {
      stable.propagate(c.step_from(stable_t));
      ++stable_t;
      stable.add_value(v.table(stable_t), full_weight(stable_t));
    }
    if (span == 0) {
      out[size_t(b)] = stable.variance();
      continue;
    }
    MomentState tail = stable;
    for (int t = stable_t; t < b + v.hi; ++t) {
      tail.propagate(c.step_from(t));
      int j_lo = std::max(1, t + 1 - v.hi);
      int j_hi = std::min(b, t + 1 - v.lo);
      double w = 0;
      for (int j = j_lo; j <= j_hi; ++j) w += mask[size_t(j)];
      tail.add_value(v.table(t + 1), w);
    }
    out[size_t(b)] = tail.variance();
  }
  return out;
}

double masked_cross_covariance(const ArrayModel& m, const std::vector<double>& mask_a,
                               const std::vector<double>& mask_b) {
  std::vector<double> both(size_t(m.n) + 1, 0.0);
  for (int j = 1; j <= m.n; ++j) both[size_t(j)] = mask_a[size_t(j)] + mask_b[size_t(j)];
  double vab = masked_variance(m, both);
  double va = masked_variance(m, mask_a);
  double vb = masked_variance(m, mask_b);
  return 0.5 * (vab - va - vb);
}

double covariance(const ArrayModel& m, int i, int j) {
  if (i > j) std::swap(i, j);
  if (i < 1 || j > m.n) throw PreconditionError("index outside the model row");
  if (m.kind == ModelKind::LocalWindow) {
    WalkView v = walk_view(m);
    const ChainCore& c = *v.chain;
    // expand over kernel pairs of base covariances
    double total = 0;
    for (int ti = i + v.lo; ti <= i + v.hi; ++ti)
      for (int tj = j + v.lo; tj <= j + v.hi; ++tj) {
        int a = std::min(ti, tj), b = std::max(ti, tj);
        const std::vector<double>& ga = v.table(a);
        const std::vector<double>& gb = v.table(b);
        const std::vector<double>& pa = c.marginal(a);
        double mean_a = 0, mean_b = 0;
        for (int s = 0; s < c.num_states; ++s) mean_a += pa[size_t(s)] * ga[size_t(s)];
        std::vector<double> cv(size_t(c.num_states), 0.0);
        for (int s = 0; s < c.num_states; ++s) cv[size_t(s)] = pa[size_t(s)] * ga[size_t(s)];
        for (int t = a; t < b; ++t) cv = vecmat(cv, c.step_from(t));
        const std::vector<double>& pb = c.marginal(b);
        double e_ab = 0;
        for (int s = 0; s < c.num_states; ++s) {
          e_ab += cv[size_t(s)] * gb[size_t(s)];
          mean_b += pb[size_t(s)] * gb[size_t(s)];
        }
        total += e_ab - mean_a * mean_b;
      }
    return total;
  }
  const ChainCore& c = m.chain;
  const std::vector<double>& gi = m.obs(i);
  const std::vector<double>& gj = m.obs(j);
  const std::vector<double>& pi = c.marginal(i);
  double mean_i = 0;
  for (int s = 0; s < c.num_states; ++s) mean_i += pi[size_t(s)] * gi[size_t(s)];
  if (i == j) {
    double e2 = 0;
    for (int s = 0; s < c.num_states; ++s) e2 += pi[size_t(s)] * gi[size_t(s)] * gi[size_t(s)];
    return e2 - mean_i * mean_i;
  }
  std::vector<double> cv(size_t(c.num_states), 0.0);
  for (int s = 0; s < c.num_states; ++s) cv[size_t(s)] = pi[size_t(s)] * gi[size_t(s)];
  for (int t = i; t < j; ++t) cv = vecmat(cv, c.step_from(t));
  const std::vector<double>& pj = c.marginal(j);
  double e_ij = 0, mean_j = 0;
  for (int s = 0; s < c.num_states; ++s) {
    e_ij += cv[size_t(s)] * gj[size_t(s)];
    mean_j += pj[size_t(s)] * gj[size_t(s)];
  }
  return e_ij - mean_i * mean_j;
}

// --- lattice pmf ---

LatticePmf exact_sum_pmf(const ArrayModel& m, int a, int b, std::size_t budget) {
  if (a < 1 || b > m.n || a > b) throw PreconditionError("index range outside the model row");
  WalkView v = walk_view(m);
  const ChainCore& c = *v.chain;
  const int S = c.num_states;
  const int t_begin = a + v.lo, t_end = b + v.hi;

  // integer lattice codes per base time: value = off[t] + code*step
  std::vector<double> off(size_t(t_end - t_begin + 1), 0.0);
  std::vector<std::vector<long long>> code(size_t(t_end - t_begin + 1));
  long long width_total = 0;
  for (int t = t_begin; t <= t_end; ++t) {
    double w = v.range_weight(t, a, b);
    const std::vector<double>& g = v.table(t);
    std::vector<double> vals(size_t(S), 0.0);
    for (int s = 0; s < S; ++s) vals[size_t(s)] = w * g[size_t(s)];
    double lo = *std::min_element(vals.begin(), vals.end());
    off[size_t(t - t_begin)] = lo;
    std::vector<long long> k(size_t(S), 0);
    long long kmax = 0;
    for (int s = 0; s < S; ++s) {
      double q = (vals[size_t(s)] - lo) / m.step;
      long long ki = std::llround(q);
      if (std::fabs(q - double(ki)) > 1e-6)
        throw InvariantError("weighted observable leaves the lattice at time " + fmt_int(t));
      k[size_t(s)] = ki;
      kmax = std::max(kmax, ki);
    }
    code[size_t(t - t_begin)] = std::move(k);
    width_total += kmax;
  }
  const long long L = width_total + 1;
  if (L <= 0 || std::size_t(L) * std::size_t(S) > budget)
    throw ResourceError("sum pmf lattice exceeds the budget (" + fmt_int(L) + " positions)");

  std::vector<double> cur(size_t(L) * S, 0.0), nxt;
  long long used = 0;  // highest occupied position so far
  {
    const std::vector<double>& init = c.marginal(t_begin);
    const std::vector<long long>& k0 = code[0];
    for (int s = 0; s < S; ++s) {
      cur[size_t(s) * L + size_t(k0[size_t(s)])] += init[size_t(s)];
      used = std::max(used, k0[size_t(s)]);
    }
  }
  nxt.assign(size_t(L) * S, 0.0);
  for (int t = t_begin; t < t_end; ++t) {
    const Matrix& P = c.step_from(t);
    const std::vector<long long>& kt = code[size_t(t + 1 - t_begin)];
    std::fill(nxt.begin(), nxt.end(), 0.0);
    long long new_used = 0;
    for (int s2 = 0; s2 < S; ++s2) {
      long long shift = kt[size_t(s2)];
      double* dst = nxt.data() + size_t(s2) * L + shift;
      for (int s = 0; s < S; ++s) {
        double p = P(s, s2);
        if (p == 0.0) continue;
        const double* src = cur.data() + size_t(s) * L;
        for (long long pos = 0; pos <= used; ++pos) dst[pos] += p * src[pos];
      }
      new_used = std::max(new_used, used + shift);
    }
    cur.swap(nxt);
    used = new_used;
  }

  LatticePmf pmf;
  pmf.step = m.step;
  Accum off_sum;
  for (double o : off) off_sum.add(o);
  pmf.offset = off_sum.value();
  pmf.w.assign(size_t(used) + 1, 0.0);
  for (int s = 0; s < S; ++s)
    for (long long pos = 0; pos <= used; ++pos) pmf.w[size_t(pos)] += cur[size_t(s) * L + size_t(pos)];
  // trim exact-zero tails
  size_t lo_i = 0, hi_i = pmf.w.size();
  while (lo_i + 1 < hi_i && pmf.w[lo_i] == 0.0) ++lo_i;
  while (hi_i > lo_i + 1 && pmf.w[hi_i - 1] == 0.0) --hi_i;
  if (lo_i > 0 || hi_i < pmf.w.size()) {
    pmf.offset += double(lo_i) * pmf.step;
    pmf.w = std::vector<double>(pmf.w.begin() + long(lo_i), pmf.w.begin() + long(hi_i));
  }
  pmf.validate();
  return pmf;
}

LatticePmf marginal_pmf(const ArrayModel& m, int j) { return exact_sum_pmf(m, j, j); }

double max_l2_norm(const ArrayModel& m) {
  double best = 0;
  for (int j = 1; j <= m.n; ++j) best = std::max(best, variance_of_range(m, j, j));
  return std::sqrt(best);
}

double max_lp_norm(const ArrayModel& m, double p) {
  if (m.kind != ModelKind::LocalWindow) {
    double best = 0;
    for (int j = 1; j <= m.n; ++j) {
      const std::vector<double>& g = m.obs(j);
      const std::vector<double>& pi = m.chain.marginal(j);
      double s = 0;
      for (int st = 0; st < m.chain.num_states; ++st)
        s += pi[size_t(st)] * std::pow(std::fabs(g[size_t(st)]), p);
      best = std::max(best, s);
    }
    return std::pow(best, 1.0 / p);
  }
  double best = 0;
  for (int j = 1; j <= m.n; ++j) {
    LatticePmf f = marginal_pmf(m, j);
    double s = 0;
    for (size_t i = 0; i < f.w.size(); ++i) s += f.w[i] * std::pow(std::fabs(f.value(i)), p);
    best = std::max(best, s);
  }
  return std::pow(best, 1.0 / p);
}

double max_sup_norm(const ArrayModel& m) {
  if (m.kind == ModelKind::SequentialExpanding) {
    if (m.expanding.obs_kind == 2) return 0.0;
    if (m.expanding.obs_kind == 0) return 1.0;
    double b = 0;
    for (double v : m.expanding.step_values) b = std::max(b, std::fabs(v));
    return b;
  }
  if (m.kind != ModelKind::LocalWindow) {
    double best = 0;
    for (const std::vector<double>& g : m.tabs)
      for (double x : g) best = std::max(best, std::fabs(x));
    return best;
  }
  double best = 0;
  for (int j = 1; j <= m.n; ++j) {
    double s = 0;
    for (int t = j + m.kern_lo; t <= j + m.kern_hi; ++t) {
      double mt = 0;
      for (double x : m.base_obs(t)) mt = std::max(mt, std::fabs(x));
      s += mt;
    }
    best = std::max(best, s);
  }
  return best;
}

MomentsCumulants moments_and_cumulants(const LatticePmf& pmf, int p) {
  if (p < 2) throw PreconditionError("moment order must be >= 2");
  if (p > 16) throw PreconditionError("moment orders above 16 are not supported");
  pmf.validate();
  MomentsCumulants out;
  Accum mean;
  for (size_t i = 0; i < pmf.w.size(); ++i) mean.add(pmf.w[i] * pmf.value(i));
  out.mean = mean.value();
  std::vector<Accum> acc(size_t(p) + 1);
  for (size_t i = 0; i < pmf.w.size(); ++i) {
    double d = pmf.value(i) - out.mean;
    double pw = d;
    for (int k = 2; k <= p; ++k) {
      pw *= d;
      acc[size_t(k)].add(pmf.w[i] * pw);
    }
  }
  out.moment.assign(size_t(p) + 1, 0.0);
  for (int k = 2; k <= p; ++k) out.moment[size_t(k)] = acc[size_t(k)].value();
  // cumulants from centered moments: kappa_n = m_n - sum C(n-1,k-1) kappa_k m_{n-k}
  std::vector<double> mraw(size_t(p) + 1, 0.0);
  mraw[0] = 1.0;
  for (int k = 2; k <= p; ++k) mraw[size_t(k)] = out.moment[size_t(k)];
  out.cumulant.assign(size_t(p) + 1, 0.0);
  for (int k2 = 2; k2 <= p; ++k2) {
    double s = mraw[size_t(k2)];
    for (int k = 1; k < k2; ++k)
      s -= binomial(k2 - 1, k - 1) * out.cumulant[size_t(k)] * mraw[size_t(k2 - k)];
    out.cumulant[size_t(k2)] = s;
  }
  return out;
}

double tail_probability(const LatticePmf& pmf, double threshold, bool upper) {
  pmf.validate();
  Accum a;
  const double eps = 1e-9 * pmf.step;
  for (size_t i = 0; i < pmf.w.size(); ++i) {
    double v = pmf.value(i);
    if (upper ? (v >= threshold - eps) : (v <= threshold + eps)) a.add(pmf.w[i]);
  }
  double p = a.value();
  return std::min(1.0, std::max(0.0, p));
}

double log_tail_probability(const LatticePmf& pmf, double threshold, bool upper) {
  double p = tail_probability(pmf, threshold, upper);
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(p);
}

void save_pmf_csv(const LatticePmf& pmf, const std::string& path) {
  CsvWriter csv(path, "value,probability");
  for (size_t i = 0; i < pmf.w.size(); ++i)
    csv.row({fmt_double(pmf.value(i)), fmt_double(pmf.w[i])});
}

void save_variance_profile_csv(const VarianceProfile& vp, const std::string& path) {
  CsvWriter csv(path, "k,variance");
  for (size_t k = 1; k < vp.var.size(); ++k)
    csv.row({fmt_int(long(k)), fmt_double(vp.var[k])});
}

// --- prefix scanner ---

struct PrefixVarianceScanner::Impl {
  const ArrayModel* model;
  WalkView v;
  int a = 1, b = 0;
  MomentState stable;
  int stable_t = 0;
  bool started = false;
  double var = 0;

  double full_weight(int t) const {
    int j_lo = std::max(a, t - v.hi);
    int j_hi = std::min(model->n, t - v.lo);
    return j_hi >= j_lo ? double(j_hi - j_lo + 1) : 0.0;
  }
};

PrefixVarianceScanner::PrefixVarianceScanner(const ArrayModel& m, int a)
    : impl_(new Impl) {
  if (a < 1 || a > m.n) throw PreconditionError("scan start outside the model row");
  impl_->model = &m;
  impl_->v = walk_view(m);
  impl_->a = a;
  impl_->b = a - 1;
}

PrefixVarianceScanner::~PrefixVarianceScanner() = default;
PrefixVarianceScanner::PrefixVarianceScanner(PrefixVarianceScanner&&) noexcept = default;

int PrefixVarianceScanner::end() const { return impl_->b; }
double PrefixVarianceScanner::variance() const { return impl_->var; }

bool PrefixVarianceScanner::advance() {
  Impl& im = *impl_;
  const ArrayModel& m = *im.model;
  if (im.b >= m.n) return false;
  ++im.b;
  const ChainCore& c = *im.v.chain;
  if (!im.started) {
    im.stable_t = im.a + im.v.lo;
    im.stable.init(c.marginal(im.stable_t), c.num_states);
    im.stable.add_value(im.v.table(im.stable_t), im.full_weight(im.stable_t));
    im.started = true;
  }
  while (im.stable_t < im.b + im.v.lo) {
    im.stable.propagate(c.step_from(im.stable_t));
    ++im.stable_t;
    im.stable.add_value(im.v.table(im.stable_t), im.full_weight(im.stable_t));
  }
  if (im.v.hi == im.v.lo) {
    im.var = im.stable.variance();
    return true;
  }
  MomentState tail = im.stable;
  for (int t = im.stable_t; t < im.b + im.v.hi; ++t) {
    tail.propagate(c.step_from(t));
    tail.add_value(im.v.table(t + 1), im.v.range_weight(t + 1, im.a, im.b));
  }
  im.var = tail.variance();
  return true;
}

}  // namespace varlin
