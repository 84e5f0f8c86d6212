#ifndef VARLIN_MIXING_HPP
#define VARLIN_MIXING_HPP

#include <string>
#include <vector>

#include "varlin/model.hpp"
#include "varlin/smallmat.hpp"

namespace varlin {

enum class Provenance { ExactTiny, DobrushinBound, Declared };

std::string provenance_name(Provenance p);

// Per-lag dependence coefficients of one model row.  Entries are bounds
// unless the provenance says exact; all downstream constants are monotone in
// them, so upper bounds are sound.
struct MixingProfile {
  int n = 0;
  std::vector<double> alpha, rho, phi;  // indexed by lag 1..n, slot 0 unused
  Provenance prov = Provenance::DobrushinBound;
  int horizon = 0;  // future-block horizon used for exact tiny computations

  double get(const std::vector<double>& seq, int lag) const { return seq[size_t(lag)]; }
};

// phi(j) <= max over windows of the product of per-step Dobrushin
// contraction coefficients; derived rho and alpha bounds fill the profile.
// Models built with a profile basis (memory enlargements, local windows)
// get the first profile_shift lags pinned at the trivial bound.
MixingProfile dobrushin_phi_profile(const ArrayModel& m);

// Profile with explicit per-lag phi bounds (provenance Declared); rho and
// alpha are derived.
MixingProfile declared_profile(int n, const std::vector<double>& phi_by_lag);

// Exact operator-norm coefficient of a finite joint law (rows: past block,
// cols: future block).  q = inf enumerates sign vertices (2^cols <= 2^20);
// q = p = 2 is the largest singular value of the centered conditional
// expectation operator.
double brute_force_varpi(const Matrix& joint, double q, double p);

// Definitional coefficients by direct event enumeration on a tiny joint law.
double definitional_alpha(const Matrix& joint);
double definitional_phi(const Matrix& joint);
double definitional_rho(const Matrix& joint);

// min(phi^{1-1/q}, rho^{2/q}) at one lag; branch (0 = phi, 1 = rho) reported.
double interpolate_bound(const MixingProfile& p, double q, int lag, int* branch = nullptr);

struct ConsistencyIssue {
  int lag = 0;
  std::string inequality;
  double lhs = 0, rhs = 0;
};

// Empty iff alpha <= phi, alpha <= rho/4 and rho <= 2 sqrt(phi) hold at
// every lag (tolerance 1e-12).
std::vector<ConsistencyIssue> consistency_check(const MixingProfile& p);

// Exact joint law of (state_t1, state_t2) of a finite chain.
Matrix joint_two_point(const ChainCore& chain, int t1, int t2);

// Joint law of (states a..b) x (states c..d) flattened to block alphabets;
// tiny instances only (exact oracle for the mixing definitions).
Matrix joint_block_law(const ChainCore& chain, int a, int b, int c, int d, int state_budget = 1 << 20);

void save_profile_csv(const MixingProfile& p, const std::string& path);
MixingProfile load_profile_csv(const std::string& path);

}  // namespace varlin

#endif
