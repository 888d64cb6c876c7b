#pragma once

// Backward-induction solvers: plain BSDEs, penalized constrained BSDEs,
// reflected BSDEs (lower / upper obstacle), combined constrained-reflected
// problems, and the convergence driver over penalty schedules.

#include <functional>
#include <optional>
#include <utility>

#include "bsdeg/core.hpp"
#include "bsdeg/lattice.hpp"

namespace bsdeg {

// ---------------------------------------------------------------------------
// Penalty schedules
// ---------------------------------------------------------------------------

struct PenaltySchedule {
    enum class Mode { diagonal, constraint_first, obstacle_first };
    Mode mode = Mode::diagonal;
    std::vector<double> levels;  // strictly increasing penalty weights
    double stop_tol = 1e-6;      // successive root-value change threshold
    int max_levels = 0;          // 0 = use all levels

    void validate() const;
    int effective_levels() const {
        const int n = static_cast<int>(levels.size());
        return (max_levels > 0 && max_levels < n) ? max_levels : n;
    }
    // Powers of two 2^0 .. 2^14, stop_tol 1e-6.
    static PenaltySchedule standard();
};

// ---------------------------------------------------------------------------
// Solve results
// ---------------------------------------------------------------------------

struct Diagnostics {
    double skorokhod_residual = 0.0;        // sum (y - L) dAbar  (resp. (U - y) dK)
    double max_constraint_violation = 0.0;  // capped distance at recorded (y, z)
    double equation_residual_max = 0.0;     // worst nodewise equation residual
    int fixed_point_iters_max = 0;
    bool constraint_active = false;  // some node saw a nonzero constraint distance
};

// Node-indexed solution over a lattice window with M steps: y has levels
// 0..M, the per-step fields z, z_pinned, dA, dAbar, dK have levels 0..M-1.
// z is the effective martingale coefficient actually used in the one-step
// equation (after any constrained replacement); z_pinned is the raw
// difference quotient of the continuation values. dA holds constraint-push
// increments, dAbar lower-obstacle pushes, dK upper-obstacle pulls; at every
// node
//   y = E[y_next] + g(t, y, z) * dt + dA + dAbar - dK
// up to the reported equation residual.
struct SolveResult {
    NodeField y;
    NodeField z;
    NodeField z_pinned;
    NodeField dA;
    NodeField dAbar;
    NodeField dK;
    Diagnostics diagnostics;

    double root() const { return y.at(0, 0); }
};

struct ConvergenceReport {
    std::vector<double> penalty_levels;
    std::vector<double> root_values;
    std::vector<double> max_violations;
    bool converged = false;
    bool n_capped = false;    // some requested level exceeded the implicit-solve cap
    double cap_value = kInf;  // the cap that was applied (0.5 / dt), if any
    int levels_run = 0;
};

struct ConstrainedSolveOutput {
    SolveResult result;
    ConvergenceReport report;
};

struct ComparisonVerdict {
    bool y_ordered = false;  // y_a <= y_b at every node within slack
    double y_max_violation = 0.0;
    std::optional<std::pair<int, int>> witness;  // first violating (level, node)
    // Cumulative obstacle-push ordering (dAbar_b <= dAbar_a accumulated),
    // reported for reflected pairs; informational, see compare_solutions.
    bool increments_ordered = false;
    double increments_max_violation = 0.0;
};

// ---------------------------------------------------------------------------
// Obstacle closure: internal per-node barrier evaluation, either from an
// ObstacleSpec handle L(t, x) or from a NodeField (used by decomposition,
// where the obstacle is an exogenous process on the lattice).
// ---------------------------------------------------------------------------

struct ObstacleClosure {
    ObstacleSpec::Kind kind = ObstacleSpec::Kind::none;
    std::function<double(int i, int j, double t, double x)> at;  // view-relative node

    static ObstacleClosure none() { return ObstacleClosure{}; }
    static ObstacleClosure from_spec(const ObstacleSpec& spec);
    // Field indexed like the view's levels (relative indices).
    static ObstacleClosure from_field(ObstacleSpec::Kind kind, const NodeField& field);
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Unique y solving y = e + (g(t, y, z) + extra_drift) * dt, by fixed-point
// iteration from y0 = e. Requires gen.lipschitz_mu * dt < 1 (checked by the
// solve entry points). Convergence: |delta| <= 1e-13, or the iteration hit
// the floating-point resolution of the value scale (the absolute threshold
// is unreachable when |y| is large enough that one ulp exceeds it).
double implicit_step(double e, double z, double t, const GeneratorSpec& gen, double extra_drift,
                     double dt, int* iters = nullptr);

// Single-penalty-level workhorse shared by every named solve: backward
// induction with the constraint penalty n_con (capped-distance penalty with a
// hard-constraint saturation arm, see solver.cpp), an optional obstacle
// handled either by exact projection or by the finite penalty n_obs.
SolveResult solve_single(const std::vector<double>& terminal, const GeneratorSpec& gen,
                         const ConstraintSpec* cons, double n_con, const ObstacleClosure& obs,
                         double n_obs, bool obstacle_by_projection, const LatticeView& view);

// Plain g-solution: no constraint, no obstacle; dA = dAbar = dK = 0.
SolveResult solve_plain(const TerminalPayoff& X, const GeneratorSpec& gen, const LatticeView& view);
SolveResult solve_plain(const TerminalPayoff& X, const GeneratorSpec& gen, const Lattice& lat);

// Penalized solve at fixed weights: constraint penalty n (explicit when the
// constraint is z-only, inside the implicit solve otherwise) and obstacle
// penalty n_obs (always inside the implicit solve; requires
// (lipschitz_mu + n_obs) * dt < 1, plus the same bound for n when the
// constraint depends on y).
SolveResult solve_penalized(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ConstraintSpec& cons, double n, const ObstacleSpec& obstacle,
                            double n_obs, const LatticeView& view);
SolveResult solve_penalized(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ConstraintSpec& cons, double n, const ObstacleSpec& obstacle,
                            double n_obs, const Lattice& lat);

// Reflected BSDE with exact one-step projection onto the obstacle.
SolveResult solve_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ObstacleSpec& obstacle, const LatticeView& view);
SolveResult solve_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ObstacleSpec& obstacle, const Lattice& lat);

// Production constrained(-reflected) solve: exact obstacle projection, the
// constraint penalty swept along the schedule until the root value is
// stop_tol-Cauchy. Levels requested beyond the implicit-solve cap 0.5/dt are
// clamped (only relevant for y-dependent constraints) and flagged.
ConstrainedSolveOutput solve_constrained_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                                                   const ConstraintSpec& cons,
                                                   const ObstacleSpec& obstacle,
                                                   const PenaltySchedule& schedule,
                                                   const LatticeView& view);
ConstrainedSolveOutput solve_constrained_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                                                   const ConstraintSpec& cons,
                                                   const ObstacleSpec& obstacle,
                                                   const PenaltySchedule& schedule, const Lattice& lat);

// Field-obstacle variants (decomposition: obstacle given as a process on the
// lattice window rather than a function of (t, x)).
ConstrainedSolveOutput solve_constrained_reflected_field(const std::vector<double>& terminal,
                                                         const GeneratorSpec& gen,
                                                         const ConstraintSpec& cons,
                                                         const ObstacleClosure& obstacle,
                                                         const PenaltySchedule& schedule,
                                                         const LatticeView& view);

// Penalization-order equivalence driver: runs the diagonal, constraint-first
// and obstacle-first schedules with finite obstacle penalties (capped at
// 0.5/dt) and reports the three root values.
struct ModeComparisonResult {
    double diagonal_root = 0.0;
    double constraint_first_root = 0.0;
    double obstacle_first_root = 0.0;
    bool all_converged = false;
    double max_mutual_gap = 0.0;
};
ModeComparisonResult run_schedule_modes(const TerminalPayoff& X, const GeneratorSpec& gen,
                                        const ConstraintSpec& cons, const ObstacleSpec& obstacle,
                                        const PenaltySchedule& schedule, const Lattice& lat);

// Nodewise ordering verdict y_a <= y_b (slack 1e-10). The cumulative
// obstacle-increment comparison is reported but carries no theorem claim at
// fixed lattice resolution: with equal obstacles a smaller solution can touch
// the barrier more often, so only the y-ordering is a comparison-theorem
// statement.
ComparisonVerdict compare_solutions(const SolveResult& a, const SolveResult& b);

}  // namespace bsdeg
