#include "bsdeg/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace bsdeg::oracle {

// Abramowitz & Stegun 26.2.17: Phi(x) = 1 - phi(x) (b1 t + ... + b5 t^5),
// t = 1 / (1 + p x) for x >= 0, extended by symmetry. |error| < 7.5e-8.
double norm_cdf(double x) {
    if (x < 0.0) return 1.0 - norm_cdf(-x);
    constexpr double p = 0.2316419;
    constexpr double b1 = 0.319381530;
    constexpr double b2 = -0.356563782;
    constexpr double b3 = 1.781477937;
    constexpr double b4 = -1.821255978;
    constexpr double b5 = 1.330274429;
    const double t = 1.0 / (1.0 + p * x);
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double poly = t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
    return 1.0 - phi * poly;
}

double black_scholes_call(double x0, double k, double r, double sigma, double T) {
    const double vol = sigma * std::sqrt(std::max(T, 0.0));
    if (!(vol > 0.0)) return std::max(x0 - k * std::exp(-r * std::max(T, 0.0)), 0.0);
    const double d1 = (std::log(x0 / k) + (r + 0.5 * sigma * sigma) * T) / vol;
    const double d2 = d1 - vol;
    return x0 * norm_cdf(d1) - k * std::exp(-r * T) * norm_cdf(d2);
}

namespace {

// Strictly increasing one-step residual
//   F(y) = y - e - (g(t, y, z_arm) + extra_const + obs_pen(y)) * dt - push * sqrt(dt)
// solved by bracket expansion + bisection. Monotonicity holds for any
// n_obs >= 0 because the obstacle penalty only steepens F.
struct OneStep {
    double e;
    double t;
    double dt;
    double sqrt_dt;
    const GeneratorSpec* gen;
    ObstacleSpec::Kind obs_kind = ObstacleSpec::Kind::none;
    double obs_level = 0.0;
    bool obs_penalized = false;
    double n_obs = 0.0;

    double F(double y, double z_arm, double extra_const, double push) const {
        double pen = 0.0;
        if (obs_penalized) {
            if (obs_kind == ObstacleSpec::Kind::lower)
                pen = n_obs * std::max(obs_level - y, 0.0);
            else if (obs_kind == ObstacleSpec::Kind::upper)
                pen = -n_obs * std::max(y - obs_level, 0.0);
        }
        return y - e - ((*gen)(t, y, z_arm) + extra_const + pen) * dt - push * sqrt_dt;
    }

    double solve(double z_arm, double extra_const, double push) const {
        double radius = 1.0 + std::abs(e) + std::abs(extra_const) * dt + std::abs(push) * sqrt_dt;
        if (obs_penalized) radius += n_obs * dt * (1.0 + std::abs(obs_level));
        double lo = e - radius, hi = e + radius;
        for (int k = 0; k < 200 && F(lo, z_arm, extra_const, push) > 0.0; ++k) {
            hi = lo;
            radius *= 2.0;
            lo = e - radius;
        }
        for (int k = 0; k < 200 && F(hi, z_arm, extra_const, push) < 0.0; ++k) {
            lo = hi;
            radius *= 2.0;
            hi = e + radius;
        }
        for (int k = 0; k < 200 && lo < hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (F(mid, z_arm, extra_const, push) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

struct StepPick {
    double y;
    double z_eff;
    double dA;
};

// One-step kernel: penalty arm (literal capped-distance penalty at the
// pinned coefficient) against the per-band saturation arm (nearest
// admissible coefficient, replacement charged at sqrt(dt)); the smaller
// value wins, ties to the penalty arm.
StepPick kernel(const OneStep& step, double z_pin, const ResolvedConstraint* rc, double n_con) {
    StepPick pen{step.solve(z_pin, 0.0, 0.0), z_pin, 0.0};
    if (rc != nullptr && n_con > 0.0) {
        double dist = rc->raw_distance(0.0, z_pin);
        const double dcap = std::min(dist, 1.0);
        pen.y = step.solve(z_pin, n_con * dcap, 0.0);
        pen.dA = n_con * dcap * step.dt;

        bool have = false;
        StepPick sat{kInf, 0.0, 0.0};
        for (std::size_t m = 0; m < rc->bands.size(); ++m) {
            if (!rc->section_nonempty(m, 0.0)) continue;
            const double lo = rc->section_lo(m, 0.0);
            const double hi = rc->section_hi(m, 0.0);
            const double zs = std::min(std::max(z_pin, lo), hi);
            const double push = std::abs(z_pin - zs);
            if (push == 0.0) continue;
            const double y = step.solve(zs, 0.0, push);
            if (!have || y < sat.y || (y == sat.y && zs < sat.z_eff)) {
                sat = StepPick{y, zs, push * step.sqrt_dt};
                have = true;
            }
        }
        if (have && sat.y < pen.y) return sat;
    }
    return pen;
}

}  // namespace

TreeResult brute_force_tree_solve(const std::vector<double>& terminal, const GeneratorSpec& gen,
                                  const ConstraintSpec* cons, double n_con,
                                  const ObstacleSpec& obstacle, double n_obs,
                                  bool obstacle_by_projection, const TimeGrid& grid,
                                  const MarketModel& market) {
    grid.validate();
    market.validate();
    gen.validate();
    const int N = grid.step_count;
    if (N > 8) throw std::invalid_argument("brute_force_tree_solve: N > 8 rejected (2^N paths)");
    if (static_cast<int>(terminal.size()) != N + 1)
        throw std::invalid_argument("brute_force_tree_solve: terminal size must be N + 1");
    if (cons) {
        cons->validate();
        if (cons->depends_on_y())
            throw std::invalid_argument(
                "brute_force_tree_solve: y-dependent constraints are not supported");
        if (cons->pi_space && !gen.is_linear_wealth)
            throw std::invalid_argument(
                "brute_force_tree_solve: pi-space constraints require the linear wealth generator");
    }
    const double dt = grid.dt();
    if (!(gen.lipschitz_mu * dt < 1.0))
        throw std::invalid_argument("brute_force_tree_solve: lipschitz_mu * dt must be < 1");
    const double sdt = std::sqrt(dt);
    const double up = 1.0 + market.mu_drift * dt + market.sigma * sdt;
    const double dn = 1.0 + market.mu_drift * dt - market.sigma * sdt;
    if (!(dn > 0.0)) throw std::invalid_argument("brute_force_tree_solve: down factor not positive");

    const bool have_obs = obstacle.kind != ObstacleSpec::Kind::none;

    // Path-indexed stock: level i holds 2^i values, child down = 2*idx,
    // child up = 2*idx + 1, so popcount(idx) counts up-moves.
    std::vector<std::vector<double>> stock(static_cast<std::size_t>(N) + 1);
    stock[0] = {market.x0};
    for (int i = 0; i < N; ++i) {
        const auto& cur = stock[static_cast<std::size_t>(i)];
        auto& nxt = stock[static_cast<std::size_t>(i) + 1];
        nxt.resize(cur.size() * 2);
        for (std::size_t idx = 0; idx < cur.size(); ++idx) {
            nxt[2 * idx] = cur[idx] * dn;
            nxt[2 * idx + 1] = cur[idx] * up;
        }
    }

    std::vector<std::vector<double>> y(static_cast<std::size_t>(N) + 1);
    std::vector<std::vector<double>> zf(static_cast<std::size_t>(N)), zp(static_cast<std::size_t>(N)),
        da(static_cast<std::size_t>(N)), dab(static_cast<std::size_t>(N)),
        dk(static_cast<std::size_t>(N));

    y[static_cast<std::size_t>(N)].resize(std::size_t{1} << N);
    for (std::size_t idx = 0; idx < (std::size_t{1} << N); ++idx) {
        const double v = terminal[static_cast<std::size_t>(
            std::popcount(static_cast<unsigned long long>(idx)))];
        if (!std::isfinite(v))
            throw std::invalid_argument("brute_force_tree_solve: non-finite terminal value");
        y[static_cast<std::size_t>(N)][idx] = v;
    }
    if (have_obs && obstacle_by_projection) {
        for (std::size_t idx = 0; idx < y[static_cast<std::size_t>(N)].size(); ++idx) {
            const double b = obstacle.handle(grid.horizon, stock[static_cast<std::size_t>(N)][idx]);
            const double v = y[static_cast<std::size_t>(N)][idx];
            if (obstacle.kind == ObstacleSpec::Kind::lower && v < b - 1e-12)
                throw std::invalid_argument(
                    "brute_force_tree_solve: terminal payoff below the lower obstacle");
            if (obstacle.kind == ObstacleSpec::Kind::upper && v > b + 1e-12)
                throw std::invalid_argument(
                    "brute_force_tree_solve: terminal payoff above the upper obstacle");
        }
    }

    ResolvedConstraint rc_fixed;
    if (cons && !cons->pi_space) rc_fixed = cons->resolve(1.0);

    for (int i = N - 1; i >= 0; --i) {
        const std::size_t width = std::size_t{1} << i;
        y[static_cast<std::size_t>(i)].resize(width);
        zf[static_cast<std::size_t>(i)].resize(width);
        zp[static_cast<std::size_t>(i)].resize(width);
        da[static_cast<std::size_t>(i)].resize(width);
        dab[static_cast<std::size_t>(i)].resize(width);
        dk[static_cast<std::size_t>(i)].resize(width);
        const double t = grid.time_at(i);
        for (std::size_t idx = 0; idx < width; ++idx) {
            const double v_dn = y[static_cast<std::size_t>(i) + 1][2 * idx];
            const double v_up = y[static_cast<std::size_t>(i) + 1][2 * idx + 1];
            OneStep step;
            step.e = 0.5 * (v_up + v_dn);
            step.t = t;
            step.dt = dt;
            step.sqrt_dt = sdt;
            step.gen = &gen;
            step.obs_kind = obstacle.kind;
            step.obs_level =
                have_obs ? obstacle.handle(t, stock[static_cast<std::size_t>(i)][idx]) : 0.0;
            step.obs_penalized = have_obs && !obstacle_by_projection;
            step.n_obs = n_obs;

            const double z_pin = (v_up - v_dn) / (2.0 * sdt);
            ResolvedConstraint rc_scaled;
            const ResolvedConstraint* rc = nullptr;
            if (cons) {
                if (cons->pi_space) {
                    rc_scaled =
                        cons->resolve(gen.wealth_sigma * stock[static_cast<std::size_t>(i)][idx]);
                    rc = &rc_scaled;
                } else {
                    rc = &rc_fixed;
                }
            }
            StepPick pick = kernel(step, z_pin, rc, n_con);

            double val = pick.y;
            double dAbar = 0.0, dK = 0.0;
            if (have_obs) {
                if (obstacle_by_projection) {
                    if (obstacle.kind == ObstacleSpec::Kind::lower) {
                        const double proj = std::max(val, step.obs_level);
                        dAbar = proj - val;
                        val = proj;
                    } else {
                        const double proj = std::min(val, step.obs_level);
                        dK = val - proj;
                        val = proj;
                    }
                } else {
                    if (obstacle.kind == ObstacleSpec::Kind::lower)
                        dAbar = n_obs * std::max(step.obs_level - val, 0.0) * dt;
                    else
                        dK = n_obs * std::max(val - step.obs_level, 0.0) * dt;
                }
            }
            double dA = pick.dA;
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
            y[static_cast<std::size_t>(i)][idx] = val;
            zf[static_cast<std::size_t>(i)][idx] = pick.z_eff;
            zp[static_cast<std::size_t>(i)][idx] = z_pin;
            da[static_cast<std::size_t>(i)][idx] = dA;
            dab[static_cast<std::size_t>(i)][idx] = dAbar;
            dk[static_cast<std::size_t>(i)][idx] = dK;
        }
    }

    // Collapse onto the recombining lattice, verifying that equal-up-count
    // histories agree to 1e-12 relative.
    TreeResult out;
    out.stock = NodeField::triangular(N + 1);
    out.y = NodeField::triangular(N + 1);
    out.z = NodeField::triangular(N);
    out.z_pinned = NodeField::triangular(N);
    out.dA = NodeField::triangular(N);
    out.dAbar = NodeField::triangular(N);
    out.dK = NodeField::triangular(N);
    double worst = 0.0;
    auto collapse = [&worst](const std::vector<std::vector<double>>& field, NodeField& dst,
                             int levels) {
        for (int i = 0; i < levels; ++i) {
            std::vector<bool> seen(static_cast<std::size_t>(i) + 1, false);
            for (std::size_t idx = 0; idx < field[static_cast<std::size_t>(i)].size(); ++idx) {
                const int j = std::popcount(static_cast<unsigned long long>(idx));
                const double v = field[static_cast<std::size_t>(i)][idx];
                if (!seen[static_cast<std::size_t>(j)]) {
                    dst.at(i, j) = v;
                    seen[static_cast<std::size_t>(j)] = true;
                } else {
                    const double ref = dst.at(i, j);
                    const double gap =
                        std::abs(v - ref) / std::max({1.0, std::abs(v), std::abs(ref)});
                    worst = std::max(worst, gap);
                }
            }
        }
    };
    collapse(stock, out.stock, N + 1);
    collapse(y, out.y, N + 1);
    collapse(zf, out.z, N);
    collapse(zp, out.z_pinned, N);
    collapse(da, out.dA, N);
    collapse(dab, out.dAbar, N);
    collapse(dk, out.dK, N);
    out.collapse_gap = worst;
    out.recombined = worst <= 1e-12;
    return out;
}

TreeResult brute_force_tree_solve(const TerminalPayoff& X, const GeneratorSpec& gen,
                                  const ConstraintSpec* cons, double n_con,
                                  const ObstacleSpec& obstacle, double n_obs,
                                  bool obstacle_by_projection, const TimeGrid& grid,
                                  const MarketModel& market) {
    grid.validate();
    market.validate();
    const int N = grid.step_count;
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    const double up = 1.0 + market.mu_drift * dt + market.sigma * sdt;
    const double dn = 1.0 + market.mu_drift * dt - market.sigma * sdt;
    std::vector<double> terminal_stock(static_cast<std::size_t>(N) + 1);
    for (int j = 0; j <= N; ++j)
        terminal_stock[static_cast<std::size_t>(j)] =
            market.x0 * std::pow(up, j) * std::pow(dn, N - j);
    return brute_force_tree_solve(X.values_on(terminal_stock), gen, cons, n_con, obstacle, n_obs,
                                  obstacle_by_projection, grid, market);
}

}  // namespace bsdeg::oracle
