#include "varlin/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/expanding.hpp"
#include "varlin/kvfile.hpp"
#include "varlin/numeric.hpp"
#include "varlin/oracle.hpp"
#include "varlin/rng.hpp"

namespace varlin {

std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::IidLattice: return "iid_lattice";
    case ModelKind::InhomMarkov: return "inhom_markov";
    case ModelKind::LocalWindow: return "local_window";
    case ModelKind::SequentialExpanding: return "sequential_expanding";
  }
  return "?";
}

ModelKind kind_from_name(const std::string& s) {
  if (s == "iid_lattice") return ModelKind::IidLattice;
  if (s == "inhom_markov") return ModelKind::InhomMarkov;
  if (s == "local_window") return ModelKind::LocalWindow;
  if (s == "sequential_expanding") return ModelKind::SequentialExpanding;
  throw ConfigError("unknown model kind: " + s);
}

void ChainCore::finalize() {
  marginals.assign(size_t(len), {});
  if (len == 0) return;
  marginals[0] = initial;
  for (int s = 0; s + 1 < len; ++s) marginals[size_t(s) + 1] = vecmat(marginals[size_t(s)], mats[mat_at[size_t(s)]]);
}

double ExpandingModel::shift_at(int j) const {
  switch (shift_kind) {
    case 0: {
      double v = double(j) * 0.61803398874989484820;
      return v - std::floor(v);
    }
    case 1: return double(j % shift_denom) / double(shift_denom);
    default: return 0.0;
  }
}

double ExpandingModel::map_once(double x, int j) const {
  double y = double(branches) * x + shift_at(j);
  y -= std::floor(y);
  if (y >= 1.0) y = 0.0;  // guard against frac() rounding to 1
  return y;
}

double ExpandingModel::observable(double x) const {
  switch (obs_kind) {
    case 0: return std::cos(2.0 * 3.14159265358979323846 * x);
    case 1: {
      int cells = int(step_values.size());
      int c = std::min(cells - 1, int(std::floor(x * cells)));
      return step_values[size_t(c)];
    }
    default: return 0.0;
  }
}

namespace {

void validate_stochastic(const ChainCore& c, const std::string& what) {
  if (c.num_states < 1) throw ConfigError(what + ": empty state space");
  if (int(c.initial.size()) != c.num_states) throw ConfigError(what + ": initial law size mismatch");
  double tot = 0;
  for (double p : c.initial) {
    if (p < 0) throw ConfigError(what + ": negative initial mass");
    tot += p;
  }
  if (std::fabs(tot - 1.0) > 1e-12) throw ConfigError(what + ": initial law does not sum to 1");
  for (int s = 0; s + 1 < c.len; ++s) {
    const Matrix& P = c.mats[c.mat_at[size_t(s)]];
    if (P.rows != c.num_states || P.cols != c.num_states)
      throw ConfigError(what + ": transition size mismatch at time " + fmt_int(c.t0 + s));
    for (int i = 0; i < P.rows; ++i) {
      double rs = 0;
      for (int j = 0; j < P.cols; ++j) {
        if (P(i, j) < 0)
          throw ConfigError(what + ": negative transition entry at time " + fmt_int(c.t0 + s) +
                            " row " + fmt_int(i));
        rs += P(i, j);
      }
      if (std::fabs(rs - 1.0) > 1e-12)
        throw ConfigError(what + ": transition row not stochastic at time " + fmt_int(c.t0 + s) +
                          " row " + fmt_int(i) + " (sum " + fmt_double(rs) + ")");
    }
  }
}

void validate_table_lattice(const std::vector<double>& g, double step, int index) {
  double lo = *std::min_element(g.begin(), g.end());
  for (double v : g) {
    double k = std::round((v - lo) / step);
    if (std::fabs(v - lo - k * step) > 1e-12 * std::max(1.0, std::fabs(v)))
      throw ConfigError("observable off the value lattice at index " + fmt_int(index));
  }
}

}  // namespace

void validate_model(const ArrayModel& m) {
  if (m.n < 1) throw ConfigError("model row length must be >= 1");
  if (m.kind == ModelKind::SequentialExpanding) {
    if (m.expanding.branches < 2) throw ConfigError("non-expanding map family (branches < 2)");
    if (m.expanding.obs_kind == 1) {
      double s = 0;
      for (double v : m.expanding.step_values) s += v;
      if (m.expanding.step_values.empty() || std::fabs(s) > 1e-12 * double(m.expanding.step_values.size()))
        throw ConfigError("expanding step observable is not centered");
    }
    return;
  }
  if (m.step <= 0) throw ConfigError("lattice step must be positive");
  validate_stochastic(m.chain, "model " + m.id);
  if (m.chain.marginals.empty()) throw ConfigError("chain not finalized");
  const bool window_kind = m.kind == ModelKind::LocalWindow;
  const int slots = window_kind ? m.chain.len : m.n;
  if (int(m.tab_at.size()) != slots) throw ConfigError("observable table map size mismatch");
  for (int s = 0; s < slots; ++s) {
    const std::vector<double>& g = m.tabs[m.tab_at[size_t(s)]];
    if (int(g.size()) != m.chain.num_states)
      throw ConfigError("observable table size mismatch at slot " + fmt_int(s));
  }
  // lattice + exact centering, per index (per base time for window models)
  for (int s = 0; s < slots; ++s) {
    const int index = window_kind ? m.chain.t0 + s : s + 1;
    const std::vector<double>& g = m.tabs[m.tab_at[size_t(s)]];
    validate_table_lattice(g, m.step, index);
    const std::vector<double>& pi = m.chain.marginals[size_t(window_kind ? s : s)];
    double scale = 1.0, mean = 0.0;
    for (int st = 0; st < m.chain.num_states; ++st) {
      mean += pi[size_t(st)] * g[size_t(st)];
      scale = std::max(scale, std::fabs(g[size_t(st)]));
    }
    if (std::fabs(mean) > 1e-12 * scale)
      throw ConfigError("observable not centered at index " + fmt_int(index) + " (mean " +
                        fmt_double(mean) + ")");
  }
  if (window_kind) {
    if (m.kern_hi < m.kern_lo) throw ConfigError("empty kernel");
    if (m.chain.t0 != 1 + m.kern_lo || m.chain.len != m.n + m.kern_hi - m.kern_lo)
      throw ConfigError("base chain does not cover the kernel reach");
  }
  if (m.use_profile_base) validate_stochastic(m.profile_base, "profile base of " + m.id);
}

// --- sampling ---

static int draw_state(const std::vector<double>& law, double u) {
  double cum = 0;
  for (size_t s = 0; s + 1 < law.size(); ++s) {
    cum += law[s];
    if (u < cum) return int(s);
  }
  return int(law.size()) - 1;
}

std::vector<int> sample_states(const ArrayModel& m, int n, uint64_t seed, int replicate) {
  if (!m.finite_state()) throw PreconditionError("state sampling requires a finite-state model");
  if (n < 1 || n > m.n) throw PreconditionError("requested length outside the model row");
  const ChainCore& c = m.chain;
  const int need = (m.kind == ModelKind::LocalWindow) ? (n + m.kern_hi - m.kern_lo) : n;
  Rng rng(seed, uint64_t(replicate));
  std::vector<int> st(size_t(need), 0);
  st[0] = draw_state(c.initial, rng.next_double());
  for (int s = 1; s < need; ++s) {
    const Matrix& P = c.mats[c.mat_at[size_t(s) - 1]];
    double u = rng.next_double();
    double cum = 0;
    int prev = st[size_t(s) - 1];
    int nxt = c.num_states - 1;
    for (int j = 0; j < c.num_states; ++j) {
      cum += P(prev, j);
      if (u < cum) { nxt = j; break; }
    }
    st[size_t(s)] = nxt;
  }
  return st;
}

std::vector<double> sample_orbit(const ArrayModel& m, int n, uint64_t seed, int replicate) {
  if (m.kind != ModelKind::SequentialExpanding)
    throw PreconditionError("orbit sampling requires an expanding-map model");
  if (n > m.expanding.orbit_cap) throw ResourceError("orbit length exceeds the configured cap");
  Rng rng(seed, uint64_t(replicate));
  std::vector<double> x(size_t(n) + 1, 0.0);
  x[0] = rng.next_double();
  for (int j = 0; j < n; ++j) x[size_t(j) + 1] = m.expanding.map_once(x[size_t(j)], j);
  return x;
}

SamplePath sample_path(const ArrayModel& m, int n, uint64_t seed, int replicate) {
  if (n < 1) throw PreconditionError("path length must be >= 1");
  SamplePath out;
  out.model_id = m.id;
  out.seed = seed;
  out.replicate = replicate;
  out.values.resize(size_t(n));
  if (m.kind == ModelKind::SequentialExpanding) {
    std::vector<double> x = sample_orbit(m, n, seed, replicate);
    const ExpandingModel& e = m.expanding;
    for (int j = 1; j <= n; ++j)
      out.values[size_t(j) - 1] =
          e.approx_depth > 0 ? expanding_conditional_value(e, x[size_t(j)], j, e.approx_depth)
                             : e.observable(x[size_t(j)]);
    return out;
  }
  std::vector<int> st = sample_states(m, n, seed, replicate);
  if (m.kind == ModelKind::LocalWindow) {
    for (int j = 1; j <= n; ++j) {
      double v = 0;
      for (int i = m.kern_lo; i <= m.kern_hi; ++i) {
        int t = j + i;
        v += m.base_obs(t)[size_t(st[size_t(t - m.chain.t0)])];
      }
      out.values[size_t(j) - 1] = v;
    }
  } else {
    for (int j = 1; j <= n; ++j) out.values[size_t(j) - 1] = m.obs(j)[size_t(st[size_t(j) - 1])];
  }
  return out;
}

// --- builders ---

namespace {

Matrix two_state(double p00, double p01, double p10, double p11) {
  Matrix M(2, 2);
  M(0, 0) = p00; M(0, 1) = p01; M(1, 0) = p10; M(1, 1) = p11;
  return M;
}

ChainCore uniform_two_state_chain(int t0, int len, const Matrix& P, std::vector<double> init) {
  ChainCore c;
  c.t0 = t0;
  c.len = len;
  c.num_states = 2;
  c.initial = std::move(init);
  c.mats = {P};
  c.mat_at.assign(size_t(std::max(0, len - 1)), 0);
  c.finalize();
  return c;
}

}  // namespace

ArrayModel make_iid_pm1(int n) {
  ArrayModel m;
  m.kind = ModelKind::IidLattice;
  m.id = "iid-pm1";
  m.n = n;
  m.step = 2.0;
  m.chain = uniform_two_state_chain(1, n, two_state(0.5, 0.5, 0.5, 0.5), {0.5, 0.5});
  m.tabs = {{-1.0, 1.0}};
  m.tab_at.assign(size_t(n), 0);
  m.memory = 0;
  validate_model(m);
  return m;
}

ArrayModel make_iid_lattice(int n, const std::vector<double>& values,
                            const std::vector<double>& probs, double step) {
  ArrayModel m;
  m.kind = ModelKind::IidLattice;
  m.id = "iid-lattice";
  m.n = n;
  m.step = step;
  const int S = int(values.size());
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = S;
  c.initial = probs;
  Matrix P(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) P(i, j) = probs[size_t(j)];
  c.mats = {P};
  c.mat_at.assign(size_t(std::max(0, n - 1)), 0);
  c.finalize();
  m.chain = std::move(c);
  double mean = 0;
  for (int s = 0; s < S; ++s) mean += probs[size_t(s)] * values[size_t(s)];
  std::vector<double> g(values);
  for (double& v : g) v -= mean;
  m.tabs = {g};
  m.tab_at.assign(size_t(n), 0);
  m.memory = 0;
  validate_model(m);
  return m;
}

ArrayModel make_elliptic_chain(int n) {
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "elliptic-2state";
  m.n = n;
  m.step = 2.0;
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = 2;
  c.initial = {0.5, 0.5};
  c.mats.push_back(two_state(0.62, 0.38, 0.36, 0.64));
  c.mats.push_back(two_state(0.58, 0.42, 0.42, 0.58));
  c.mats.push_back(two_state(0.66, 0.34, 0.38, 0.62));
  c.mat_at.resize(size_t(std::max(0, n - 1)));
  for (int s = 0; s + 1 < n; ++s) c.mat_at[size_t(s)] = s % 3;
  c.finalize();
  // per-index exact centering of the +-1 observable
  m.tab_at.resize(size_t(n));
  for (int j = 1; j <= n; ++j) {
    const std::vector<double>& pi = c.marginal(j);
    double mean = pi[1] - pi[0];
    m.tabs.push_back({-1.0 - mean, 1.0 - mean});
    m.tab_at[size_t(j - 1)] = j - 1;
  }
  m.chain = std::move(c);
  validate_model(m);
  return m;
}

ArrayModel make_skewed_chain(int n) {
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "skewed-2state";
  m.n = n;
  m.step = 1.0;
  m.chain = uniform_two_state_chain(1, n, two_state(0.7, 0.3, 0.5, 0.5), {0.625, 0.375});
  m.tabs = {{0.375, -0.625}};
  m.tab_at.assign(size_t(n), 0);
  validate_model(m);
  return m;
}

ArrayModel make_sequence_chain(int n) {
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "sequence-2state";
  m.n = n;
  m.step = 2.0;
  m.chain = uniform_two_state_chain(1, n, two_state(0.52, 0.48, 0.48, 0.52), {0.5, 0.5});
  m.tabs = {{-1.0, 1.0}};
  m.tab_at.assign(size_t(n), 0);
  validate_model(m);
  return m;
}

namespace {

// Order-1 chain over consecutive pairs (u, v) of a two-state base chain.
// State index is 2u + v.
ArrayModel pair_chain_model(int n, const Matrix& Pb, const std::vector<double>& obs_uv,
                            double step, const std::string& id) {
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = id;
  m.n = n;
  m.step = step;
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = 4;
  c.initial.assign(4, 0.0);
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) c.initial[size_t(2 * u + v)] = 0.5 * Pb(u, v);
  Matrix T(4, 4);
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      for (int w = 0; w < 2; ++w) T(2 * u + v, 2 * v + w) = Pb(v, w);
  c.mats = {T};
  c.mat_at.assign(size_t(std::max(0, n - 1)), 0);
  c.finalize();
  m.chain = std::move(c);
  m.tabs = {obs_uv};
  m.tab_at.assign(size_t(n), 0);
  m.memory = 2;
  m.profile_shift = 1;
  m.use_profile_base = true;
  m.profile_base = uniform_two_state_chain(0, n + 1, Pb, {0.5, 0.5});
  validate_model(m);
  return m;
}

}  // namespace

ArrayModel make_memory_chain(int n) {
  Matrix Pb = two_state(0.505, 0.495, 0.495, 0.505);
  // g(u, v) = (x(u) + x(v))/2 with x = +-1
  std::vector<double> g = {-1.0, 0.0, 0.0, 1.0};
  return pair_chain_model(n, Pb, g, 1.0, "memory2-chain");
}

ArrayModel make_pair_coboundary_chain(int n) {
  Matrix Pb = two_state(0.505, 0.495, 0.495, 0.505);
  // g(u, v) = x(v) - x(u): partial sums telescope
  std::vector<double> g = {0.0, 2.0, -2.0, 0.0};
  return pair_chain_model(n, Pb, g, 2.0, "pair-coboundary");
}

ArrayModel make_local_window_model(int n) {
  ArrayModel m;
  m.kind = ModelKind::LocalWindow;
  m.n = n;
  m.step = 2.0;
  int w = int(std::ceil(std::log2(double(n))));
  m.id = "local-window-w" + fmt_int(w);
  m.window = w;
  m.kern_lo = -w;
  m.kern_hi = 0;
  m.chain = uniform_two_state_chain(1 - w, n + w, two_state(0.5, 0.5, 0.5, 0.5), {0.5, 0.5});
  m.tabs = {{-1.0, 1.0}};
  m.tab_at.assign(size_t(m.chain.len), 0);
  m.memory = w;         // kernel support spans w+1 consecutive base times
  m.profile_shift = w;  // overlapping reads: trivial bound on the first w lags
  m.use_profile_base = true;
  m.profile_base = m.chain;
  validate_model(m);
  return m;
}

ArrayModel build_slow_variance_model(double gamma, int n) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in (0, 1]");
  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = "slow-variance-g" + fmt_double(gamma);
  m.n = n;
  m.step = 1.0;
  m.chain = uniform_two_state_chain(1, n, two_state(0.505, 0.495, 0.495, 0.505), {0.5, 0.5});
  m.tabs = {{0.0, 0.0}, {-1.0, 1.0}};  // 0: inactive, 1: signal
  m.tab_at.assign(size_t(n), 0);
  for (long long k = 1;; ++k) {
    long long j = (long long)std::ceil(std::pow(double(k), 1.0 / gamma) - 1e-9);
    if (j < 1) j = 1;
    if (j > n) break;
    m.tab_at[size_t(j - 1)] = 1;
  }
  validate_model(m);

  // Exponent check against the exact variance oracle over m in [n/16, n].
  VarianceProfile vp = variance_profile(m);
  std::vector<double> lx, ly;
  for (int i = 0; i < 24; ++i) {
    double f = double(i) / 23.0;
    int mm = int(std::lround(double(n) / 16.0 * std::pow(16.0, f)));
    mm = std::min(n, std::max(2, mm));
    double v = vp.var[size_t(mm)];
    if (v <= 0) continue;
    lx.push_back(std::log(double(mm)));
    ly.push_back(std::log(v));
  }
  LineFit fit = fit_line(lx, ly);
  if (std::fabs(fit.slope - gamma) > 0.15)
    throw ConfigError("slow-variance construction missed the target exponent: achieved " +
                      fmt_double(fit.slope) + " for gamma " + fmt_double(gamma));
  return m;
}

ArrayModel make_expanding_model(int n, int obs_kind, int shift_kind) {
  ArrayModel m;
  m.kind = ModelKind::SequentialExpanding;
  m.id = "expanding-doubling";
  m.n = n;
  m.expanding.branches = 2;
  m.expanding.shift_kind = shift_kind;
  m.expanding.obs_kind = obs_kind;
  if (obs_kind == 1) {
    // centered dyadic step observable on 8 cells
    m.expanding.step_values = {1.0, -1.0, 0.5, -0.5, 0.25, -0.25, 0.75, -0.75};
  }
  m.memory = 0;
  validate_model(m);
  return m;
}

ArrayModel local_window_array(const ArrayModel& base, int window,
                              const std::function<double(const std::vector<int>&)>& f,
                              int state_budget) {
  if (!base.finite_state() || base.kind == ModelKind::LocalWindow)
    throw PreconditionError("local-window enlargement requires a finite-state chain base");
  if (window < 0) throw PreconditionError("window must be >= 0");
  const int S = base.chain.num_states;
  const int K = 2 * window + 1;
  double count = std::pow(double(S), double(K));
  if (count > double(state_budget))
    throw ResourceError("enlarged state space exceeds the budget: " + fmt_double(count) +
                        " tuples");
  const int T = int(count);
  const int n = base.n;

  // base chain extended over [1-window, n+window]; outside steps reuse the
  // nearest in-range matrix
  ChainCore ext;
  ext.t0 = 1 - window;
  ext.len = n + 2 * window;
  ext.num_states = S;
  ext.initial = base.chain.initial;
  ext.mats = base.chain.mats;
  ext.mat_at.resize(size_t(std::max(0, ext.len - 1)));
  for (int s = 0; s + 1 < ext.len; ++s) {
    int t = ext.t0 + s;  // step t -> t+1
    int tb = std::min(std::max(t, 1), std::max(1, n - 1));
    ext.mat_at[size_t(s)] = base.chain.mat_at.empty() ? 0 : base.chain.mat_at[size_t(tb - 1)];
  }
  ext.finalize();

  ArrayModel m;
  m.kind = ModelKind::InhomMarkov;
  m.id = base.id + "-window" + fmt_int(window);
  m.n = n;
  m.step = base.step;
  ChainCore c;
  c.t0 = 1;
  c.len = n;
  c.num_states = T;

  auto tuple_digit = [S](int tuple, int pos) {
    for (int i = 0; i < pos; ++i) tuple /= S;
    return tuple % S;
  };

  // initial tuple law: joint of the base states at times 1-window .. 1+window
  c.initial.assign(size_t(T), 0.0);
  for (int t = 0; t < T; ++t) {
    double p = ext.initial[size_t(tuple_digit(t, 0))];
    for (int i = 0; i + 1 < K; ++i) {
      const Matrix& P = ext.step_from(ext.t0 + i);
      p *= P(tuple_digit(t, i), tuple_digit(t, i + 1));
    }
    c.initial[size_t(t)] = p;
  }

  // tuple transition for array step j -> j+1 appends the base state at time
  // j+1+window
  std::map<int, int> mat_of_base;  // base matrix id -> tuple matrix id
  c.mat_at.resize(size_t(std::max(0, n - 1)));
  for (int j = 1; j + 1 <= n; ++j) {
    int bt = j + window;  // base step bt -> bt+1
    int base_id = ext.mat_at[size_t(bt - ext.t0)];
    auto it = mat_of_base.find(base_id);
    if (it == mat_of_base.end()) {
      Matrix M(T, T);
      const Matrix& P = ext.mats[size_t(base_id)];
      for (int t = 0; t < T; ++t) {
        int shifted = t / S;  // drop the oldest digit
        int last = tuple_digit(t, K - 1);
        for (int w = 0; w < S; ++w) M(t, shifted + w * (T / S)) = P(last, w);
      }
      it = mat_of_base.emplace(base_id, int(c.mats.size())).first;
      c.mats.push_back(std::move(M));
    }
    c.mat_at[size_t(j - 1)] = it->second;
  }
  c.finalize();
  m.chain = std::move(c);

  // observables: f on the tuple, centered under the tuple marginal
  std::vector<int> digits(size_t(K), 0);
  std::vector<double> raw(size_t(T), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < K; ++i) digits[size_t(i)] = tuple_digit(t, i);
    raw[size_t(t)] = f(digits);
  }
  m.tab_at.resize(size_t(n));
  for (int j = 1; j <= n; ++j) {
    const std::vector<double>& pi = m.chain.marginal(j);
    double mean = 0;
    for (int t = 0; t < T; ++t) mean += pi[size_t(t)] * raw[size_t(t)];
    std::vector<double> g(raw);
    for (double& v : g) v -= mean;
    // dedupe identical tables
    int id = -1;
    for (size_t k = 0; k < m.tabs.size(); ++k) {
      bool same = true;
      for (int t = 0; t < T; ++t)
        if (m.tabs[k][size_t(t)] != g[size_t(t)]) { same = false; break; }
      if (same) { id = int(k); break; }
    }
    if (id < 0) {
      id = int(m.tabs.size());
      m.tabs.push_back(std::move(g));
    }
    m.tab_at[size_t(j - 1)] = id;
  }
  m.window = window;
  m.memory = std::max(1, 2 * window);
  m.profile_shift = 2 * window;
  m.use_profile_base = true;
  m.profile_base = ext;
  validate_model(m);
  return m;
}

ArrayModel make_builtin_model(const std::string& name, int n) {
  if (name == "iid_pm1") return make_iid_pm1(n);
  if (name == "elliptic") return make_elliptic_chain(n);
  if (name == "skewed") return make_skewed_chain(n);
  if (name == "sequence") return make_sequence_chain(n);
  if (name == "memory2") return make_memory_chain(n);
  if (name == "local_window") return make_local_window_model(n);
  if (name == "slow_variance_05") return build_slow_variance_model(0.5, n);
  if (name == "slow_variance_10") return build_slow_variance_model(1.0, n);
  if (name == "pair_coboundary") return make_pair_coboundary_chain(n);
  if (name == "expanding") return make_expanding_model(n, 0, 0);
  throw ConfigError("unknown builtin model: " + name);
}

void save_paths_csv(const ArrayModel& m, int n, uint64_t seed, int replicates,
                    const std::string& path) {
  CsvWriter csv(path, "replicate,j,xi");
  for (int r = 0; r < replicates; ++r) {
    SamplePath sp = sample_path(m, n, seed, r);
    for (int j = 1; j <= n; ++j)
      csv.row({fmt_int(r), fmt_int(j), fmt_double(sp.values[size_t(j) - 1])});
  }
}

// --- model files ---

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += " ";
    s += fmt_double(v[i]);
  }
  return s;
}

std::string matrix_text(const Matrix& M) {
  std::string s;
  for (int i = 0; i < M.rows; ++i) {
    if (i) s += " / ";
    for (int j = 0; j < M.cols; ++j) {
      if (j) s += " ";
      s += fmt_double(M(i, j));
    }
  }
  return s;
}

Matrix parse_matrix(const std::string& text, int states) {
  Matrix M(states, states);
  std::string row;
  std::istringstream iss(text);
  int i = 0;
  std::string tok;
  int j = 0;
  while (iss >> tok) {
    if (tok == "/") { ++i; j = 0; continue; }
    if (i >= states || j >= states) throw ConfigError("matrix literal has too many entries");
    M(i, j++) = parse_double(tok);
  }
  return M;
}

std::string runs_text(const std::vector<int>& v) {
  std::string s;
  size_t i = 0;
  while (i < v.size()) {
    size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    if (!s.empty()) s += " ";
    s += fmt_int(v[i]) + "x" + fmt_int(int(j - i));
    i = j;
  }
  return s;
}

std::vector<int> parse_runs(const std::string& text) {
  std::vector<int> out;
  for (const std::string& tok : KvFile::split_ws(text)) {
    size_t x = tok.find('x');
    if (x == std::string::npos) throw ConfigError("bad run-length token: " + tok);
    int id = int(parse_int(tok.substr(0, x)));
    long long cnt = parse_int(tok.substr(x + 1));
    for (long long k = 0; k < cnt; ++k) out.push_back(id);
  }
  return out;
}

void write_chain(std::ofstream& out, const ChainCore& c, const std::string& prefix) {
  out << prefix << "t0 = " << c.t0 << "\n";
  out << prefix << "len = " << c.len << "\n";
  out << prefix << "states = " << c.num_states << "\n";
  out << prefix << "initial = " << join_doubles(c.initial) << "\n";
  for (const Matrix& M : c.mats) out << prefix << "mat = " << matrix_text(M) << "\n";
  out << prefix << "mat_at = " << runs_text(c.mat_at) << "\n";
}

ChainCore read_chain(const KvFile& kv, const std::string& prefix) {
  ChainCore c;
  c.t0 = int(parse_int(kv.get(prefix + "t0")));
  c.len = int(parse_int(kv.get(prefix + "len")));
  c.num_states = int(parse_int(kv.get(prefix + "states")));
  for (const std::string& tok : KvFile::split_ws(kv.get(prefix + "initial")))
    c.initial.push_back(parse_double(tok));
  for (const std::string& mt : kv.all(prefix + "mat")) c.mats.push_back(parse_matrix(mt, c.num_states));
  c.mat_at = parse_runs(kv.get(prefix + "mat_at"));
  if (int(c.mat_at.size()) != std::max(0, c.len - 1))
    throw ConfigError("transition map does not cover the chain");
  c.finalize();
  return c;
}

}  // namespace

void save_model(const ArrayModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open model file for writing: " + path);
  out << "kind = " << kind_name(m.kind) << "\n";
  out << "id = " << m.id << "\n";
  out << "n = " << m.n << "\n";
  if (m.kind == ModelKind::SequentialExpanding) {
    const ExpandingModel& e = m.expanding;
    out << "branches = " << e.branches << "\n";
    out << "shift_kind = " << e.shift_kind << "\n";
    out << "shift_denom = " << e.shift_denom << "\n";
    out << "obs_kind = " << e.obs_kind << "\n";
    if (!e.step_values.empty()) out << "step_values = " << join_doubles(e.step_values) << "\n";
    out << "orbit_cap = " << e.orbit_cap << "\n";
    return;
  }
  out << "step = " << fmt_double(m.step) << "\n";
  out << "window = " << m.window << "\n";
  out << "kern_lo = " << m.kern_lo << "\n";
  out << "kern_hi = " << m.kern_hi << "\n";
  out << "memory = " << m.memory << "\n";
  out << "profile_shift = " << m.profile_shift << "\n";
  write_chain(out, m.chain, "chain_");
  for (const std::vector<double>& t : m.tabs) out << "tab = " << join_doubles(t) << "\n";
  out << "tab_at = " << runs_text(m.tab_at) << "\n";
  out << "use_profile_base = " << (m.use_profile_base ? 1 : 0) << "\n";
  if (m.use_profile_base) write_chain(out, m.profile_base, "pbase_");
}

ArrayModel load_model(const std::string& path) {
  KvFile kv = KvFile::read(path);
  ArrayModel m;
  m.kind = kind_from_name(kv.get("kind"));
  m.id = kv.get_or("id", "model");
  m.n = int(parse_int(kv.get("n")));
  if (m.kind == ModelKind::SequentialExpanding) {
    ExpandingModel& e = m.expanding;
    e.branches = int(parse_int(kv.get_or("branches", "2")));
    e.shift_kind = int(parse_int(kv.get_or("shift_kind", "0")));
    e.shift_denom = int(parse_int(kv.get_or("shift_denom", "8")));
    e.obs_kind = int(parse_int(kv.get_or("obs_kind", "0")));
    if (kv.has("step_values"))
      for (const std::string& tok : KvFile::split_ws(kv.get("step_values")))
        e.step_values.push_back(parse_double(tok));
    e.orbit_cap = int(parse_int(kv.get_or("orbit_cap", "1048576")));
    m.memory = 0;
    validate_model(m);
    return m;
  }
  m.step = parse_double(kv.get("step"));
  m.window = int(parse_int(kv.get_or("window", "0")));
  m.kern_lo = int(parse_int(kv.get_or("kern_lo", "0")));
  m.kern_hi = int(parse_int(kv.get_or("kern_hi", "0")));
  m.memory = int(parse_int(kv.get_or("memory", "1")));
  m.profile_shift = int(parse_int(kv.get_or("profile_shift", "0")));
  m.chain = read_chain(kv, "chain_");
  for (const std::string& t : kv.all("tab")) {
    std::vector<double> tab;
    for (const std::string& tok : KvFile::split_ws(t)) tab.push_back(parse_double(tok));
    m.tabs.push_back(std::move(tab));
  }
  m.tab_at = parse_runs(kv.get("tab_at"));
  m.use_profile_base = parse_int(kv.get_or("use_profile_base", "0")) != 0;
  if (m.use_profile_base) m.profile_base = read_chain(kv, "pbase_");
  validate_model(m);
  return m;
}

}  // namespace varlin
