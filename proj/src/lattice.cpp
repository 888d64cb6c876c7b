#include "bsdeg/lattice.hpp"

#include <cmath>
#include <sstream>

namespace bsdeg {

Lattice build_lattice(const TimeGrid& grid, const MarketModel& market) {
    grid.validate();
    market.validate();
    const double dt = grid.dt();
    const double sq = std::sqrt(dt);
    const double up = 1.0 + market.mu_drift * dt + market.sigma * sq;
    const double down = 1.0 + market.mu_drift * dt - market.sigma * sq;
    if (!(down > 0.0)) {
        // Positivity requires 1 + mu*dt - sigma*sqrt(dt) > 0; solve the
        // quadratic in sqrt(dt) for the largest admissible step.
        const double s = market.sigma, m = market.mu_drift;
        double max_dt;
        if (m <= 0.0) {
            // 1 - s*sq + m*sq^2 > 0 for sq below the smaller positive root.
            const double disc = s * s - 4.0 * m;
            const double sq_max = (m == 0.0) ? 1.0 / s : (s - std::sqrt(disc)) / (2.0 * m);
            max_dt = sq_max * sq_max;
        } else {
            const double disc = s * s - 4.0 * m;
            if (disc <= 0.0)
                max_dt = kInf;  // unreachable here: down <= 0 implies a real root
            else
                max_dt = std::pow((s - std::sqrt(disc)) / (2.0 * m), 2);
        }
        std::ostringstream msg;
        msg << "build_lattice: positivity condition 1 + mu*dt - sigma*sqrt(dt) > 0 violated; "
            << "use dt < " << max_dt << " (got dt = " << dt << ")";
        throw std::invalid_argument(msg.str());
    }

    Lattice lat;
    lat.grid = grid;
    lat.market = market;
    lat.sqrt_dt = sq;
    lat.up_factor = up;
    lat.down_factor = down;
    const int N = grid.step_count;
    lat.X.resize(static_cast<std::size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) {
        auto& level = lat.X[static_cast<std::size_t>(i)];
        level.resize(static_cast<std::size_t>(i) + 1);
        for (int j = 0; j <= i; ++j)
            level[static_cast<std::size_t>(j)] =
                market.x0 * std::pow(up, j) * std::pow(down, i - j);
    }
    return lat;
}

double step_expectation(const std::vector<double>& next, int j) {
    return 0.5 * (next[static_cast<std::size_t>(j) + 1] + next[static_cast<std::size_t>(j)]);
}

double step_martingale_coeff(const std::vector<double>& next, int j, double sqrt_dt) {
    return (next[static_cast<std::size_t>(j) + 1] - next[static_cast<std::size_t>(j)]) / (2.0 * sqrt_dt);
}

}  // namespace bsdeg
