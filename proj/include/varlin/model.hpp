#ifndef VARLIN_MODEL_HPP
#define VARLIN_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "varlin/smallmat.hpp"

namespace varlin {

enum class ModelKind { IidLattice, InhomMarkov, LocalWindow, SequentialExpanding };

std::string kind_name(ModelKind k);
ModelKind kind_from_name(const std::string& s);

// Finite-state time-inhomogeneous chain over the time slots t0 .. t0+len-1.
// Transition matrices and observable tables are deduplicated: mat_at / tab_at
// map a time slot to the shared storage.
struct ChainCore {
  int t0 = 1;
  int len = 0;
  int num_states = 0;
  std::vector<double> initial;  // law of the state at time t0
  std::vector<Matrix> mats;
  std::vector<int> mat_at;  // step s: time t0+s -> t0+s+1, s = 0..len-2
  std::vector<std::vector<double>> marginals;  // filled by finalize()

  const Matrix& step_from(int t) const { return mats[mat_at[size_t(t - t0)]]; }
  const std::vector<double>& marginal(int t) const { return marginals[size_t(t - t0)]; }
  void finalize();  // propagates marginals
};

// Piecewise-expanding interval map family x -> branches*x + shift (mod 1).
struct ExpandingModel {
  int branches = 2;
  int shift_kind = 0;   // 0: golden-ratio shifts, 1: dyadic shifts, 2: none
  int shift_denom = 8;  // dyadic shift denominator
  int obs_kind = 0;     // 0: cos(2 pi x), 1: dyadic step table, 2: constant zero
  std::vector<double> step_values;  // obs_kind 1: centered cell values, size = cells
  int orbit_cap = 1 << 20;
  int approx_depth = 0;  // > 0: observable replaced by its depth-r conditional expectation

  double shift_at(int j) const;
  double map_once(double x, int j) const;
  double observable(double x) const;
};

struct ArrayModel {
  ModelKind kind = ModelKind::IidLattice;
  std::string id;
  int n = 0;
  double step = 1.0;  // lattice step shared by all observables

  // Finite-state kinds.  For IidLattice/InhomMarkov the chain covers times
  // 1..n and tab_at maps observable index j to its table.  For LocalWindow
  // the chain is the base sequence extended over the kernel reach and the
  // tables are the per-time base observables h_t.
  ChainCore chain;
  std::vector<std::vector<double>> tabs;
  std::vector<int> tab_at;

  // LocalWindow kernel: xi_j = sum_{i = kern_lo..kern_hi} h_{j+i}(X_{j+i}).
  int window = 0;  // declared half-width
  int kern_lo = 0, kern_hi = 0;

  int memory = 1;  // declared Markov memory of the array, 0 for independent rows

  // Mixing-profile basis.  The first profile_shift lags carry the trivial
  // bound; beyond that the contraction products of profile_base (when
  // use_profile_base) or of the model chain itself apply.
  int profile_shift = 0;
  bool use_profile_base = false;
  ChainCore profile_base;

  ExpandingModel expanding;

  bool finite_state() const { return kind != ModelKind::SequentialExpanding; }
  const std::vector<double>& obs(int j) const { return tabs[tab_at[size_t(j - 1)]]; }
  // LocalWindow base observable at base time t
  const std::vector<double>& base_obs(int t) const { return tabs[tab_at[size_t(t - chain.t0)]]; }
};

struct SamplePath {
  std::string model_id;
  uint64_t seed = 0;
  int replicate = 0;
  std::vector<double> values;  // xi_1..xi_n
};

// Throws ConfigError naming the offending index when a transition row is not
// stochastic, an observable is off-lattice, or a mean is not zero.
void validate_model(const ArrayModel& m);

SamplePath sample_path(const ArrayModel& m, int n, uint64_t seed, int replicate);
// State path for chain-backed kinds (chain time slots, length chain.len,
// truncated so that observables 1..n are covered).
std::vector<int> sample_states(const ArrayModel& m, int n, uint64_t seed, int replicate);
std::vector<double> sample_orbit(const ArrayModel& m, int n, uint64_t seed, int replicate);

// --- reference builders ---
ArrayModel make_iid_pm1(int n);
ArrayModel make_iid_lattice(int n, const std::vector<double>& values,
                            const std::vector<double>& probs, double step);
ArrayModel make_elliptic_chain(int n);
ArrayModel make_skewed_chain(int n);
ArrayModel make_sequence_chain(int n);
ArrayModel make_memory_chain(int n);
ArrayModel make_local_window_model(int n);
ArrayModel make_pair_coboundary_chain(int n);
ArrayModel build_slow_variance_model(double gamma, int n);
ArrayModel make_expanding_model(int n, int obs_kind, int shift_kind);

// General two-sided local-window enlargement: states of the result are the
// (2*window+1)-tuples of base states, f maps a tuple to a value on the
// base lattice.  Budget caps the enlarged state count.
ArrayModel local_window_array(const ArrayModel& base, int window,
                              const std::function<double(const std::vector<int>&)>& f,
                              int state_budget = 4096);

ArrayModel make_builtin_model(const std::string& name, int n);

void save_paths_csv(const ArrayModel& m, int n, uint64_t seed, int replicates,
                    const std::string& path);

void save_model(const ArrayModel& m, const std::string& path);
ArrayModel load_model(const std::string& path);

}  // namespace varlin

#endif
