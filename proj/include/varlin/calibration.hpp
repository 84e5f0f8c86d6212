#ifndef VARLIN_CALIBRATION_HPP
#define VARLIN_CALIBRATION_HPP

namespace varlin {

// Multiplicative constants that the closed-form bounds leave unspecified.
// Each was calibrated once against the iid reference model and is frozen
// here; every check that uses one compares trends or slopes, never the
// absolute bound value.

// maximal-inequality constant in the analytic beta bound
inline constexpr double kPeligradCeps = 0.75;

// time-change gap bound |sigma^2_{b_j(t)} - t sigma^2| <= C (K(1+C_n) + Q + C_n sqrt(Q))
inline constexpr double kTimeChangeGapC = 4.0;

// deterministic quadratic-variation gap bound multiplier
inline constexpr double kQvGapC = 4.0;

// local-window growth ceiling Q <= c K^2 w^2
inline constexpr double kWindowQFactor = 20.0;

// operational threshold standing in for "Q = o(sigma^2)"
inline constexpr double kLittleOFactor = 0.1;

}  // namespace varlin

#endif
