#pragma once

// Independent reference implementations used by the test suite: a
// closed-form Black-Scholes call (rational-approximation normal CDF) and a
// brute-force non-recombining tree solver whose one-step equations are
// solved by bisection. Agreement between `solver` and this module is
// evidence of correctness rather than of shared bugs: the tree enumerates
// every history explicitly and never iterates a fixed point.

#include <vector>

#include "bsdeg/core.hpp"
#include "bsdeg/lattice.hpp"

namespace bsdeg::oracle {

// Standard normal cumulative distribution. Rational approximation with
// absolute error below 7.5e-8 (documented at the implementation).
double norm_cdf(double x);

// Closed-form European call value. Inputs are expected positive; degenerate
// sigma*sqrt(T) collapses to the discounted intrinsic value.
double black_scholes_call(double x0, double k, double r, double sigma, double T);

// Full solution of one backward induction on the non-recombining binary
// tree, collapsed back onto the recombining lattice after checking that
// histories with the same number of up-moves produced identical values.
struct TreeResult {
    NodeField stock;     // levels 0..N, path-product stock values (collapsed)
    NodeField y;         // levels 0..N
    NodeField z;         // effective martingale coefficient, levels 0..N-1
    NodeField z_pinned;  // raw difference quotient, levels 0..N-1
    NodeField dA;        // constraint pushes
    NodeField dAbar;     // lower-obstacle pushes
    NodeField dK;        // upper-obstacle pulls
    bool recombined = false;   // collapse check passed (1e-12 relative)
    double collapse_gap = 0.0; // worst relative spread across equal-up-count histories

    double root() const { return y.at(0, 0); }
};

// Brute-force reference solve. `terminal` holds the recombined terminal
// values indexed by the number of up-moves (size N + 1). Constraints must be
// z-only (possibly pi-space scaled); the penalty and projection rules match
// the engine's contract but every one-step equation is solved by bracketing
// bisection, which tolerates arbitrarily large obstacle penalties. N <= 8.
TreeResult brute_force_tree_solve(const std::vector<double>& terminal, const GeneratorSpec& gen,
                                  const ConstraintSpec* cons, double n_con,
                                  const ObstacleSpec& obstacle, double n_obs,
                                  bool obstacle_by_projection, const TimeGrid& grid,
                                  const MarketModel& market);

TreeResult brute_force_tree_solve(const TerminalPayoff& X, const GeneratorSpec& gen,
                                  const ConstraintSpec* cons, double n_con,
                                  const ObstacleSpec& obstacle, double n_obs,
                                  bool obstacle_by_projection, const TimeGrid& grid,
                                  const MarketModel& market);

}  // namespace bsdeg::oracle
