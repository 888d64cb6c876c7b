#pragma once

// Recombining binomial discretization of the driving noise and the stock
// process, with exact one-step conditional expectation / martingale
// coefficient operators, plus windowed views used for sub-tree solves.

#include <vector>

#include "bsdeg/core.hpp"

namespace bsdeg {

// Node convention: level i holds i+1 nodes j = 0..i, where j counts up-moves.
// Node (i, j) branches to (i+1, j+1) on {dB = +sqrt(dt)} and to (i+1, j) on
// {dB = -sqrt(dt)}, each with probability 1/2.
struct Lattice {
    TimeGrid grid;
    MarketModel market;
    std::vector<std::vector<double>> X;  // X[i][j], i = 0..N
    double sqrt_dt = 0.0;
    double up_factor = 1.0;    // 1 + mu*dt + sigma*sqrt(dt)
    double down_factor = 1.0;  // 1 + mu*dt - sigma*sqrt(dt)
};

Lattice build_lattice(const TimeGrid& grid, const MarketModel& market);

// A field of per-node values over consecutive lattice levels. levels() may be
// smaller than the lattice depth (e.g. z lives on levels 0..N-1).
struct NodeField {
    std::vector<std::vector<double>> v;

    int levels() const { return static_cast<int>(v.size()); }
    double& at(int i, int j) { return v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

    // Triangular field with `level_count` levels, level i holding
    // base_width + i entries, zero-initialized.
    static NodeField triangular(int level_count, int base_width = 1) {
        NodeField f;
        f.v.resize(static_cast<std::size_t>(level_count));
        for (int i = 0; i < level_count; ++i)
            f.v[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(base_width + i), 0.0);
        return f;
    }
};

// One-step conditional expectation at node (i, j) given the level-(i+1)
// values: (v_up + v_down) / 2.
double step_expectation(const std::vector<double>& next, int j);

// One-step martingale coefficient at node (i, j):
// E[y_{i+1} * dB] / dt = (v_up - v_down) / (2 * sqrt(dt)).
double step_martingale_coeff(const std::vector<double>& next, int j, double sqrt_dt);

// A window [level_lo, level_lo + steps] of a lattice, rooted at column offset
// col_offset. Relative node (i, j) of the view maps to absolute node
// (level_lo + i, col_offset + j). Used for time-consistency and sub-tree
// evaluations: the sub-tree of absolute node (t, j0) is the view with
// level_lo = t, col_offset = j0.
struct LatticeView {
    const Lattice* lat = nullptr;
    int level_lo = 0;
    int steps = 0;       // number of time steps in the window
    int col_offset = 0;  // column of the window's root at level level_lo
    int base_width = 1;  // nodes at relative level 0 (1 for sub-trees,
                         // level_lo + 1 for full-width windows)

    double dt() const { return lat->grid.dt(); }
    double sqrt_dt() const { return lat->sqrt_dt; }
    double t(int i) const { return lat->grid.time_at(level_lo + i); }
    double x(int i, int j) const {
        return lat->X[static_cast<std::size_t>(level_lo + i)][static_cast<std::size_t>(col_offset + j)];
    }
    int width(int i) const { return base_width + i; }

    static LatticeView full(const Lattice& lat) {
        return LatticeView{&lat, 0, lat.grid.step_count, 0, 1};
    }
    // Window [0, level_hi] at full width (terminal data given on level_hi).
    static LatticeView prefix(const Lattice& lat, int level_hi) {
        if (level_hi < 0 || level_hi > lat.grid.step_count)
            throw std::invalid_argument("LatticeView: prefix level out of range");
        return LatticeView{&lat, 0, level_hi, 0, 1};
    }
    // Sub-tree rooted at absolute node (level_lo, j0), running to level N.
    static LatticeView subtree(const Lattice& lat, int level_lo, int j0) {
        if (level_lo < 0 || level_lo > lat.grid.step_count || j0 < 0 || j0 > level_lo)
            throw std::invalid_argument("LatticeView: subtree root out of range");
        return LatticeView{&lat, level_lo, lat.grid.step_count - level_lo, j0, 1};
    }
};

}  // namespace bsdeg
