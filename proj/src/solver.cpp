#include "bsdeg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bsdeg {

namespace {

constexpr double kFixedPointTol = 1e-13;
constexpr int kFixedPointMaxIters = 100;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// The implicit-solve penalty cap: weights beyond 0.5/dt would break the
// fixed-point contraction (mu + n) * dt < 1 for terms that depend on y.
double implicit_cap(double dt) { return 0.5 / dt; }

}  // namespace

// ---------------------------------------------------------------------------
// PenaltySchedule
// ---------------------------------------------------------------------------

void PenaltySchedule::validate() const {
    if (levels.empty()) throw std::invalid_argument("PenaltySchedule: empty level list");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] >= 0.0)) throw std::invalid_argument("PenaltySchedule: negative level");
        if (k > 0 && !(levels[k] > levels[k - 1]))
            throw std::invalid_argument("PenaltySchedule: levels must be strictly increasing");
    }
    if (!(stop_tol > 0.0)) throw std::invalid_argument("PenaltySchedule: stop_tol must be > 0");
}

PenaltySchedule PenaltySchedule::standard() {
    PenaltySchedule s;
    for (int k = 0; k <= 14; ++k) s.levels.push_back(std::ldexp(1.0, k));
    s.stop_tol = 1e-6;
    return s;
}

// ---------------------------------------------------------------------------
// ObstacleClosure
// ---------------------------------------------------------------------------

ObstacleClosure ObstacleClosure::from_spec(const ObstacleSpec& spec) {
    ObstacleClosure c;
    c.kind = spec.kind;
    if (spec.kind != ObstacleSpec::Kind::none) {
        auto handle = spec.handle;
        if (!handle) throw std::invalid_argument("ObstacleSpec: missing handle");
        c.at = [handle](int, int, double t, double x) { return handle(t, x); };
    }
    return c;
}

ObstacleClosure ObstacleClosure::from_field(ObstacleSpec::Kind kind, const NodeField& field) {
    ObstacleClosure c;
    c.kind = kind;
    if (kind != ObstacleSpec::Kind::none)
        c.at = [&field](int i, int j, double, double) { return field.at(i, j); };
    return c;
}

// ---------------------------------------------------------------------------
// implicit_step
// ---------------------------------------------------------------------------

double implicit_step(double e, double z, double t, const GeneratorSpec& gen, double extra_drift,
                     double dt, int* iters) {
    double y = e;
    double prev_delta = kInf;
    for (int k = 1; k <= kFixedPointMaxIters; ++k) {
        const double yn = e + (gen(t, y, z) + extra_drift) * dt;
        const double delta = std::abs(yn - y);
        const double floor = 8.0 * kEps * std::max({std::abs(yn), std::abs(e), 1.0});
        // Converged, or the update is below the floating-point resolution of
        // the value scale (the absolute tolerance is unreachable there), or
        // the iteration stalled inside that noise band.
        if (delta <= kFixedPointTol || delta <= floor || (delta >= prev_delta && delta <= 128.0 * floor)) {
            if (iters) *iters = k;
            return yn;
        }
        prev_delta = delta;
        y = yn;
    }
    throw std::runtime_error("implicit_step: fixed-point iteration failed to converge in 100 steps");
}

// ---------------------------------------------------------------------------
// solve_single: the one-step kernel and the backward loop
// ---------------------------------------------------------------------------

namespace {

struct NodeContext {
    double e;
    double z_pin;
    double t;
    double dt;
    double sqrt_dt;
    const GeneratorSpec* gen;
    // constraint (may be null)
    const ResolvedConstraint* rc;
    bool cons_depends_on_y;
    double n_con;
    // obstacle
    ObstacleSpec::Kind obs_kind;
    double obs_level;  // L or U at this node (+-inf when absent at this point)
    bool obs_by_projection;
    double n_obs;
};

double obstacle_penalty_term(const NodeContext& c, double y) {
    if (c.obs_by_projection || c.obs_kind == ObstacleSpec::Kind::none || c.n_obs == 0.0) return 0.0;
    if (c.obs_kind == ObstacleSpec::Kind::lower) return c.n_obs * std::max(c.obs_level - y, 0.0);
    return -c.n_obs * std::max(y - c.obs_level, 0.0);
}

// Fixed-point solve of
//   y = e + (g(t, y, z_arm) + extra_const + con_pen(y) + obs_pen(y)) * dt
// where con_pen(y) = n_con * capped_distance(y, z_pin) is included only for
// the penalty arm of a y-dependent constraint, and obs_pen is the finite
// obstacle penalty. All y-dependent terms satisfy the contraction bound
// enforced by the callers.
double fixed_point_solve(const NodeContext& c, double z_arm, double extra_const, bool with_con_pen,
                         int* iters) {
    double y = c.e;
    double prev_delta = kInf;
    for (int k = 1; k <= kFixedPointMaxIters; ++k) {
        double rhs = (*c.gen)(c.t, y, z_arm) + extra_const + obstacle_penalty_term(c, y);
        if (with_con_pen) rhs += c.n_con * c.rc->capped_distance(y, c.z_pin);
        const double yn = c.e + rhs * c.dt;
        const double delta = std::abs(yn - y);
        const double floor = 8.0 * kEps * std::max({std::abs(yn), std::abs(c.e), 1.0});
        if (delta <= kFixedPointTol || delta <= floor || (delta >= prev_delta && delta <= 128.0 * floor)) {
            if (iters) *iters = k;
            return yn;
        }
        prev_delta = delta;
        y = yn;
    }
    throw std::runtime_error("solve_single: fixed-point iteration failed to converge in 100 steps");
}

struct ArmResult {
    double y = kInf;
    double z_eff = 0.0;
    double dA = 0.0;
    bool valid = false;
};

// Penalty arm: the literal capped-distance penalty n * d((y, z_pin)) as an
// extra drift (explicit for z-only constraints, inside the fixed point when
// the constraint reads y).
ArmResult penalty_arm(const NodeContext& c, int* iters) {
    ArmResult a;
    a.z_eff = c.z_pin;
    if (c.rc == nullptr || c.n_con == 0.0) {
        a.y = fixed_point_solve(c, c.z_pin, 0.0, false, iters);
        a.dA = 0.0;
        a.valid = true;
        return a;
    }
    if (!c.cons_depends_on_y) {
        const double dcap = c.rc->capped_distance(0.0, c.z_pin);
        a.y = fixed_point_solve(c, c.z_pin, c.n_con * dcap, false, iters);
        a.dA = c.n_con * dcap * c.dt;
    } else {
        a.y = fixed_point_solve(c, c.z_pin, 0.0, true, iters);
        a.dA = c.n_con * c.rc->capped_distance(a.y, c.z_pin) * c.dt;
    }
    a.valid = true;
    return a;
}

// Saturation (hard-constraint) arm: replace the pinned coefficient by its
// nearest admissible value z* and charge the replacement |z_pin - z*| as an
// increasing-process increment scaled by sqrt(dt) — the one-step limit of the
// penalization as n grows (a finite penalty applied to a coefficient pinned
// by the continuation values grows without bound; the limiting smallest
// supersolution pays the replacement cost through A instead). Evaluated per
// constraint band; the cheapest band wins.
ArmResult saturation_arm(const NodeContext& c, int* iters) {
    ArmResult best;
    if (c.rc == nullptr || c.n_con == 0.0) return best;

    if (!c.cons_depends_on_y) {
        for (std::size_t m = 0; m < c.rc->bands.size(); ++m) {
            if (!c.rc->section_nonempty(m, 0.0)) continue;
            const double lo = c.rc->section_lo(m, 0.0);
            const double hi = c.rc->section_hi(m, 0.0);
            const double zs = std::min(std::max(c.z_pin, lo), hi);
            const double push = std::abs(c.z_pin - zs);
            if (push == 0.0) continue;  // z_pin admissible: penalty arm already exact
            int it = 0;
            const double y = fixed_point_solve(c, zs, push / c.sqrt_dt, false, &it);
            if (iters) *iters = std::max(*iters, it);
            if (!best.valid || y < best.y || (y == best.y && zs < best.z_eff)) {
                best.y = y;
                best.z_eff = zs;
                best.dA = push * c.sqrt_dt;
                best.valid = true;
            }
        }
        return best;
    }

    // y-dependent constraint: each band's section (and hence z*) moves with
    // the unknown y, so the one-step equation
    //   F(y) = y - e - (g(t,y,z*(y)) + obs_pen(y)) * dt - |z_pin - z*(y)| * sqrt(dt) = 0
    // is solved by coarse bracketing + bisection; the smallest root is the
    // smallest supersolution. Bands whose sections never intersect the scan
    // range contribute nothing (the penalty arm still bounds the solve).
    for (std::size_t m = 0; m < c.rc->bands.size(); ++m) {
        auto F = [&](double y) -> std::optional<double> {
            if (!c.rc->section_nonempty(m, y)) return std::nullopt;
            const double lo = c.rc->section_lo(m, y);
            const double hi = c.rc->section_hi(m, y);
            const double zs = std::min(std::max(c.z_pin, lo), hi);
            return y - c.e - ((*c.gen)(c.t, y, zs) + obstacle_penalty_term(c, y)) * c.dt -
                   std::abs(c.z_pin - zs) * c.sqrt_dt;
        };
        double radius = 1.0 + std::abs(c.e) + std::abs(c.z_pin) * c.sqrt_dt;
        std::optional<double> root;
        for (int expand = 0; expand < 24 && !root; ++expand, radius *= 2.0) {
            const int kScan = 128;
            double prev_y = 0.0;
            std::optional<double> prev_f;
            for (int s = 0; s <= kScan; ++s) {
                const double y = c.e - radius + (2.0 * radius * s) / kScan;
                const auto f = F(y);
                if (f && prev_f && ((*prev_f < 0.0 && *f >= 0.0) || (*prev_f >= 0.0 && *f < 0.0))) {
                    double aEnd = prev_y, bEnd = y, fa = *prev_f;
                    for (int it = 0; it < 200; ++it) {
                        const double mid = 0.5 * (aEnd + bEnd);
                        const auto fm = F(mid);
                        if (!fm) break;
                        if ((fa < 0.0) == (*fm < 0.0)) {
                            aEnd = mid;
                            fa = *fm;
                        } else {
                            bEnd = mid;
                        }
                    }
                    root = 0.5 * (aEnd + bEnd);
                    break;  // smallest root: scan is left-to-right
                }
                if (f) {
                    prev_f = f;
                    prev_y = y;
                } else {
                    prev_f.reset();
                }
            }
        }
        if (root) {
            const double y = *root;
            const double lo = c.rc->section_lo(m, y);
            const double hi = c.rc->section_hi(m, y);
            const double zs = std::min(std::max(c.z_pin, lo), hi);
            const double push = std::abs(c.z_pin - zs);
            if (push == 0.0) continue;
            if (!best.valid || y < best.y || (y == best.y && zs < best.z_eff)) {
                best.y = y;
                best.z_eff = zs;
                best.dA = push * c.sqrt_dt;
                best.valid = true;
            }
        }
    }
    return best;
}

}  // namespace

SolveResult solve_single(const std::vector<double>& terminal, const GeneratorSpec& gen,
                         const ConstraintSpec* cons, double n_con, const ObstacleClosure& obs,
                         double n_obs, bool obstacle_by_projection, const LatticeView& view) {
    gen.validate();
    const double dt = view.dt();
    const int M = view.steps;
    if (static_cast<int>(terminal.size()) != view.width(M))
        throw std::invalid_argument("solve_single: terminal vector size does not match the view");
    if (!(gen.lipschitz_mu * dt < 1.0)) {
        std::ostringstream msg;
        msg << "solve_single: contraction condition lipschitz_mu * dt < 1 violated; use dt < "
            << 1.0 / gen.lipschitz_mu;
        throw std::invalid_argument(msg.str());
    }
    const bool have_obs = obs.kind != ObstacleSpec::Kind::none;
    if (have_obs && !obstacle_by_projection) {
        if (!((gen.lipschitz_mu + n_obs) * dt < 1.0)) {
            std::ostringstream msg;
            msg << "solve_single: obstacle penalty breaks the contraction ((mu + n_obs) * dt >= 1); "
                << "use a smaller dt or the projection mode (n_obs cap " << implicit_cap(dt) << ")";
            throw std::invalid_argument(msg.str());
        }
        if (n_obs < 0.0) throw std::invalid_argument("solve_single: n_obs must be >= 0");
    }
    if (cons) {
        cons->validate();
        if (n_con < 0.0) throw std::invalid_argument("solve_single: constraint penalty must be >= 0");
        if (cons->depends_on_y()) {
            if (obs.kind == ObstacleSpec::Kind::upper)
                throw std::invalid_argument(
                    "solve_single: y-dependent constraints are not supported with an upper obstacle");
            if (!((gen.lipschitz_mu + n_con) * dt < 1.0)) {
                std::ostringstream msg;
                msg << "solve_single: y-dependent constraint penalty breaks the contraction "
                    << "((mu + n) * dt >= 1); cap the schedule at " << implicit_cap(dt)
                    << " or use a smaller dt";
                throw std::invalid_argument(msg.str());
            }
        }
        if (cons->pi_space && !gen.is_linear_wealth)
            throw std::invalid_argument(
                "solve_single: pi-space constraints require the linear wealth generator (sigma)");
    }

    SolveResult out;
    out.y = NodeField::triangular(M + 1, view.base_width);
    out.z = NodeField::triangular(M, view.base_width);
    out.z_pinned = NodeField::triangular(M, view.base_width);
    out.dA = NodeField::triangular(M, view.base_width);
    out.dAbar = NodeField::triangular(M, view.base_width);
    out.dK = NodeField::triangular(M, view.base_width);

    // Terminal level.
    for (int j = 0; j < view.width(M); ++j) {
        const double v = terminal[static_cast<std::size_t>(j)];
        if (!std::isfinite(v)) throw std::invalid_argument("solve_single: non-finite terminal value");
        out.y.at(M, j) = v;
    }
    if (have_obs && obstacle_by_projection) {
        // Terminal admissibility (input error per the obstacle contract).
        for (int j = 0; j < view.width(M); ++j) {
            const double b = obs.at(M, j, view.t(M), view.x(M, j));
            if (obs.kind == ObstacleSpec::Kind::lower && out.y.at(M, j) < b - 1e-12)
                throw std::invalid_argument("solve_single: terminal payoff below the lower obstacle");
            if (obs.kind == ObstacleSpec::Kind::upper && out.y.at(M, j) > b + 1e-12)
                throw std::invalid_argument("solve_single: terminal payoff above the upper obstacle");
        }
    }

    Diagnostics diag;
    bool constraint_acted = false;
    ResolvedConstraint rc_buffer;
    const bool cons_scaled = cons && cons->pi_space;
    if (cons && !cons_scaled) rc_buffer = cons->resolve(1.0);

    for (int i = M - 1; i >= 0; --i) {
        const auto& next = out.y.v[static_cast<std::size_t>(i) + 1];
        const double t = view.t(i);
        for (int j = 0; j < view.width(i); ++j) {
            NodeContext c;
            c.e = step_expectation(next, j);
            c.z_pin = step_martingale_coeff(next, j, view.sqrt_dt());
            c.t = t;
            c.dt = dt;
            c.sqrt_dt = view.sqrt_dt();
            c.gen = &gen;
            if (cons_scaled) rc_buffer = cons->resolve(gen.wealth_sigma * view.x(i, j));
            c.rc = cons ? &rc_buffer : nullptr;
            c.cons_depends_on_y = cons ? cons->depends_on_y() : false;
            c.n_con = n_con;
            c.obs_kind = obs.kind;
            c.obs_level = have_obs ? obs.at(i, j, t, view.x(i, j))
                                   : -kInf;
            c.obs_by_projection = obstacle_by_projection;
            c.n_obs = n_obs;

            int iters = 0;
            ArmResult pen = penalty_arm(c, &iters);
            ArmResult sat = saturation_arm(c, &iters);
            ArmResult pick = pen;
            if (sat.valid && sat.y < pen.y) pick = sat;

            double y = pick.y;
            double dAbar = 0.0, dK = 0.0;
            if (have_obs) {
                if (obstacle_by_projection) {
                    if (obs.kind == ObstacleSpec::Kind::lower) {
                        const double proj = std::max(y, c.obs_level);
                        dAbar = proj - y;
                        y = proj;
                    } else {
                        const double proj = std::min(y, c.obs_level);
                        dK = y - proj;
                        y = proj;
                    }
                } else {
                    if (obs.kind == ObstacleSpec::Kind::lower)
                        dAbar = n_obs * std::max(c.obs_level - y, 0.0) * dt;
                    else
                        dK = n_obs * std::max(y - c.obs_level, 0.0) * dt;
                }
            }

            double dA = pick.dA;
            // Mutual singularity: a constraint push and an obstacle pull never
            // act together; reduce the pair by its overlap (the net equation
            // is unchanged, matching the total-variation identity).
            if (dA > 0.0 && dK > 0.0) {
                const double overlap = std::min(dA, dK);
                dA -= overlap;
                dK -= overlap;
            }
            if (dAbar > 0.0 && dK > 0.0) {
                const double overlap = std::min(dAbar, dK);
                dAbar -= overlap;
                dK -= overlap;
            }

            out.y.at(i, j) = y;
            out.z.at(i, j) = pick.z_eff;
            out.z_pinned.at(i, j) = c.z_pin;
            out.dA.at(i, j) = dA;
            out.dAbar.at(i, j) = dAbar;
            out.dK.at(i, j) = dK;

            diag.fixed_point_iters_max = std::max(diag.fixed_point_iters_max, iters);
            if (c.rc) {
                const double viol = c.rc->capped_distance(y, pick.z_eff);
                diag.max_constraint_violation = std::max(diag.max_constraint_violation, viol);
                if (pick.dA > 0.0 || c.rc->capped_distance(y, c.z_pin) > 0.0) constraint_acted = true;
            }
            const double resid =
                y - c.e - gen(t, y, pick.z_eff) * dt - dA - dAbar + dK;
            diag.equation_residual_max = std::max(diag.equation_residual_max, std::abs(resid));
            if (dAbar > 0.0 && have_obs && obs.kind == ObstacleSpec::Kind::lower && obstacle_by_projection)
                diag.skorokhod_residual += (y - c.obs_level) * dAbar;
            if (dK > 0.0 && have_obs && obs.kind == ObstacleSpec::Kind::upper && obstacle_by_projection)
                diag.skorokhod_residual += (c.obs_level - y) * dK;
        }
    }

    diag.constraint_active = constraint_acted;
    out.diagnostics = diag;
    return out;
}

// ---------------------------------------------------------------------------
// Named solves
// ---------------------------------------------------------------------------

namespace {

std::vector<double> terminal_values(const TerminalPayoff& X, const LatticeView& view) {
    const int M = view.steps;
    std::vector<double> stock(static_cast<std::size_t>(view.width(M)));
    for (int j = 0; j < view.width(M); ++j) stock[static_cast<std::size_t>(j)] = view.x(M, j);
    return X.values_on(stock);
}

}  // namespace

SolveResult solve_plain(const TerminalPayoff& X, const GeneratorSpec& gen, const LatticeView& view) {
    return solve_single(terminal_values(X, view), gen, nullptr, 0.0, ObstacleClosure::none(), 0.0,
                        true, view);
}

SolveResult solve_plain(const TerminalPayoff& X, const GeneratorSpec& gen, const Lattice& lat) {
    return solve_plain(X, gen, LatticeView::full(lat));
}

SolveResult solve_penalized(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ConstraintSpec& cons, double n, const ObstacleSpec& obstacle,
                            double n_obs, const LatticeView& view) {
    return solve_single(terminal_values(X, view), gen, &cons, n, ObstacleClosure::from_spec(obstacle),
                        n_obs, false, view);
}

SolveResult solve_penalized(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ConstraintSpec& cons, double n, const ObstacleSpec& obstacle,
                            double n_obs, const Lattice& lat) {
    return solve_penalized(X, gen, cons, n, obstacle, n_obs, LatticeView::full(lat));
}

SolveResult solve_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ObstacleSpec& obstacle, const LatticeView& view) {
    return solve_single(terminal_values(X, view), gen, nullptr, 0.0,
                        ObstacleClosure::from_spec(obstacle), 0.0, true, view);
}

SolveResult solve_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                            const ObstacleSpec& obstacle, const Lattice& lat) {
    return solve_reflected(X, gen, obstacle, LatticeView::full(lat));
}

// ---------------------------------------------------------------------------
// Schedule drivers
// ---------------------------------------------------------------------------

namespace {

ConstrainedSolveOutput run_projection_schedule(const std::vector<double>& terminal,
                                               const GeneratorSpec& gen, const ConstraintSpec& cons,
                                               const ObstacleClosure& obs,
                                               const PenaltySchedule& schedule,
                                               const LatticeView& view) {
    schedule.validate();
    cons.validate();
    const double dt = view.dt();
    const double cap = implicit_cap(dt);
    const bool needs_cap = cons.depends_on_y();

    ConstrainedSolveOutput out;
    out.report.cap_value = cap;

    const int K = schedule.effective_levels();
    double prev_root = kInf;
    for (int k = 0; k < K; ++k) {
        double n = schedule.levels[static_cast<std::size_t>(k)];
        if (needs_cap && n > cap) {
            n = cap;
            out.report.n_capped = true;
        }
        SolveResult res = solve_single(terminal, gen, &cons, n, obs, 0.0, true, view);
        out.report.penalty_levels.push_back(n);
        out.report.root_values.push_back(res.root());
        out.report.max_violations.push_back(res.diagnostics.max_constraint_violation);
        out.report.levels_run = k + 1;
        const double root = res.root();
        out.result = std::move(res);
        if (!out.result.diagnostics.constraint_active) {
            // The penalty never acted: larger weights change nothing.
            out.report.converged = true;
            break;
        }
        if (k > 0 && std::abs(root - prev_root) <= schedule.stop_tol) {
            out.report.converged = true;
            break;
        }
        prev_root = root;
    }
    return out;
}

}  // namespace

ConstrainedSolveOutput solve_constrained_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                                                   const ConstraintSpec& cons,
                                                   const ObstacleSpec& obstacle,
                                                   const PenaltySchedule& schedule,
                                                   const LatticeView& view) {
    return run_projection_schedule(terminal_values(X, view), gen, cons,
                                   ObstacleClosure::from_spec(obstacle), schedule, view);
}

ConstrainedSolveOutput solve_constrained_reflected(const TerminalPayoff& X, const GeneratorSpec& gen,
                                                   const ConstraintSpec& cons,
                                                   const ObstacleSpec& obstacle,
                                                   const PenaltySchedule& schedule,
                                                   const Lattice& lat) {
    return solve_constrained_reflected(X, gen, cons, obstacle, schedule, LatticeView::full(lat));
}

ConstrainedSolveOutput solve_constrained_reflected_field(const std::vector<double>& terminal,
                                                         const GeneratorSpec& gen,
                                                         const ConstraintSpec& cons,
                                                         const ObstacleClosure& obstacle,
                                                         const PenaltySchedule& schedule,
                                                         const LatticeView& view) {
    return run_projection_schedule(terminal, gen, cons, obstacle, schedule, view);
}

ModeComparisonResult run_schedule_modes(const TerminalPayoff& X, const GeneratorSpec& gen,
                                        const ConstraintSpec& cons, const ObstacleSpec& obstacle,
                                        const PenaltySchedule& schedule, const Lattice& lat) {
    schedule.validate();
    const LatticeView view = LatticeView::full(lat);
    const std::vector<double> terminal = terminal_values(X, view);
    const ObstacleClosure obs = ObstacleClosure::from_spec(obstacle);
    const double dt = view.dt();
    const double cap = implicit_cap(dt);
    const bool cap_n = cons.depends_on_y();
    const int K = schedule.effective_levels();
    const double tol = schedule.stop_tol;

    auto level = [&](int k) { return schedule.levels[static_cast<std::size_t>(k)]; };
    auto capped = [&](double v) { return std::min(v, cap); };
    auto root_at = [&](double n, double m) {
        return solve_single(terminal, gen, &cons, cap_n ? capped(n) : n, obs, capped(m), false, view)
            .root();
    };

    // Converge the inner parameter at a fixed outer one.
    auto inner_limit = [&](bool inner_is_constraint, double outer, bool* converged) {
        double prev = kInf, val = 0.0;
        *converged = false;
        for (int k = 0; k < K; ++k) {
            val = inner_is_constraint ? root_at(level(k), outer) : root_at(outer, level(k));
            if (k > 0 && std::abs(val - prev) <= tol) {
                *converged = true;
                break;
            }
            prev = val;
        }
        return val;
    };

    ModeComparisonResult out;
    bool ok_diag = false, ok_c = false, ok_o = false;

    {  // diagonal: both weights march together
        double prev = kInf;
        for (int k = 0; k < K; ++k) {
            const double v = root_at(level(k), level(k));
            if (k > 0 && std::abs(v - prev) <= tol) {
                ok_diag = true;
                out.diagonal_root = v;
                break;
            }
            prev = v;
            out.diagonal_root = v;
        }
    }
    {  // constraint-first: inner constraint limit at each obstacle weight
        double prev = kInf;
        for (int k = 0; k < K; ++k) {
            bool inner_ok = false;
            const double v = inner_limit(true, level(k), &inner_ok);
            if (k > 0 && inner_ok && std::abs(v - prev) <= tol) {
                ok_c = true;
                out.constraint_first_root = v;
                break;
            }
            prev = v;
            out.constraint_first_root = v;
        }
    }
    {  // obstacle-first: inner obstacle limit at each constraint weight
        double prev = kInf;
        for (int k = 0; k < K; ++k) {
            bool inner_ok = false;
            const double v = inner_limit(false, level(k), &inner_ok);
            if (k > 0 && inner_ok && std::abs(v - prev) <= tol) {
                ok_o = true;
                out.obstacle_first_root = v;
                break;
            }
            prev = v;
            out.obstacle_first_root = v;
        }
    }

    out.all_converged = ok_diag && ok_c && ok_o;
    out.max_mutual_gap = std::max({std::abs(out.diagonal_root - out.constraint_first_root),
                                   std::abs(out.diagonal_root - out.obstacle_first_root),
                                   std::abs(out.constraint_first_root - out.obstacle_first_root)});
    return out;
}

// ---------------------------------------------------------------------------
// compare_solutions
// ---------------------------------------------------------------------------

ComparisonVerdict compare_solutions(const SolveResult& a, const SolveResult& b) {
    if (a.y.levels() != b.y.levels())
        throw std::invalid_argument("compare_solutions: results live on different lattices");
    for (int i = 0; i < a.y.levels(); ++i)
        if (a.y.v[static_cast<std::size_t>(i)].size() != b.y.v[static_cast<std::size_t>(i)].size())
            throw std::invalid_argument("compare_solutions: results live on different lattices");

    ComparisonVerdict verdict;
    constexpr double kSlack = 1e-10;
    double worst = 0.0;
    for (int i = 0; i < a.y.levels(); ++i) {
        for (std::size_t j = 0; j < a.y.v[static_cast<std::size_t>(i)].size(); ++j) {
            const double excess = a.y.at(i, static_cast<int>(j)) - b.y.at(i, static_cast<int>(j));
            if (excess > worst) {
                worst = excess;
                if (excess > kSlack && !verdict.witness)
                    verdict.witness = std::make_pair(i, static_cast<int>(j));
            }
        }
    }
    verdict.y_max_violation = worst;
    verdict.y_ordered = worst <= kSlack;

    // Informational total-mass comparison of the obstacle pushes (the
    // continuous-time comparison orders the increasing processes, but at
    // fixed lattice resolution the discrete pushes need not be ordered
    // nodewise; we report the aggregate).
    double mass_a = 0.0, mass_b = 0.0;
    for (int i = 0; i < a.dAbar.levels(); ++i)
        for (std::size_t j = 0; j < a.dAbar.v[static_cast<std::size_t>(i)].size(); ++j) {
            mass_a += a.dAbar.at(i, static_cast<int>(j));
            mass_b += b.dAbar.at(i, static_cast<int>(j));
        }
    verdict.increments_max_violation = std::max(0.0, mass_a - mass_b);
    verdict.increments_ordered = mass_a <= mass_b + kSlack;
    return verdict;
}

}  // namespace bsdeg
