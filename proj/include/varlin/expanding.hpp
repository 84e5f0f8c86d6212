#ifndef VARLIN_EXPANDING_HPP
#define VARLIN_EXPANDING_HPP

#include <cstdint>

#include "varlin/model.hpp"

namespace varlin {

// Conditional expectation of the observable at time j given the depth-r
// symbolic cylinder around the orbit point x (branch symbols of the next r
// map applications pin x to an interval of width branches^-r; the average
// over that interval is computed in closed form).
double expanding_conditional_value(const ExpandingModel& e, double x, int j, int depth);

struct WindowApproxResult {
  int r = 0;
  double p = 2.0;
  double beta_hat = 0;  // sup_j empirical L^p distance ||xi_j - xi_{j,r}||_p
  double se = 0;        // standard error at the maximizing index
  int argmax_j = 0;
  ArrayModel approx;    // same family with the depth-r approximate observable
};

WindowApproxResult window_approximation(const ArrayModel& m, int r, double p, int orbit_points,
                                        uint64_t seed);

}  // namespace varlin

#endif
