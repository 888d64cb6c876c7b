#pragma once

// Core domain types shared by every module: time grids, market parameters,
// BSDE generators (drivers), closed constraint sets with capped distance
// functions, reflecting obstacles, and terminal payoffs.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsdeg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

struct TimeGrid {
    double horizon = 1.0;  // T > 0
    int step_count = 1;    // N >= 1

    double dt() const { return horizon / static_cast<double>(step_count); }
    double time_at(int i) const { return dt() * static_cast<double>(i); }

    void validate() const {
        if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (step_count < 1) throw std::invalid_argument("TimeGrid: step_count must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// MarketModel (shared by lattice construction and pricing)
// ---------------------------------------------------------------------------

struct MarketModel {
    double x0 = 100.0;      // initial stock level, > 0
    double mu_drift = 0.08; // stock drift per unit time
    double sigma = 0.2;     // stock volatility per unit time, > 0
    double r = 0.05;        // riskless rate per unit time, >= 0

    void validate() const {
        if (!(x0 > 0.0)) throw std::invalid_argument("MarketModel: x0 must be > 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("MarketModel: sigma must be > 0");
        if (r < 0.0) throw std::invalid_argument("MarketModel: r must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// GeneratorSpec: the driver g(t, y, z) with a declared Lipschitz constant and
// structural flags consumed by the property suites.
// ---------------------------------------------------------------------------

struct GeneratorSpec {
    std::function<double(double t, double y, double z)> g;
    double lipschitz_mu = 0.0;

    // Structural flags. They declare what the handle is known to satisfy;
    // property suites gate their checks on these instead of attempting
    // symbolic verification.
    bool depends_on_y = false;
    bool is_linear_wealth = false;
    bool vanishes_at_zero = false;        // g(t, 0, 0) = 0 for all t
    bool z_only = false;                  // g does not read y
    bool positively_homogeneous = false;  // g(t, c*y, c*z) = c*g(t, y, z), c >= 0
    bool convex = false;                  // jointly convex in (y, z)
    bool sublinear = false;               // subadditive + positively homogeneous
    bool bounded_in_z = false;            // sup_z |g| < inf for fixed (t, y)
    bool has_affine_rate = false;         // g = g1(t, z) + affine_rate_a * y
    double affine_rate_a = 0.0;

    // Linear-wealth parameters (meaningful only when is_linear_wealth).
    double wealth_r = 0.0;
    double wealth_mu_drift = 0.0;
    double wealth_sigma = 1.0;

    std::string name = "custom";

    double operator()(double t, double y, double z) const { return g(t, y, z); }

    void validate() const {
        if (!g) throw std::invalid_argument("GeneratorSpec: missing driver handle");
        if (lipschitz_mu < 0.0) throw std::invalid_argument("GeneratorSpec: lipschitz_mu must be >= 0");
        if (is_linear_wealth && !(wealth_sigma > 0.0))
            throw std::invalid_argument("GeneratorSpec: linear wealth form requires sigma > 0");
    }

    // g(t,y,z) = -r*y - ((mu_drift - r)/sigma) * z, the self-financing wealth
    // driver. Lipschitz constant max(r, |theta|).
    static GeneratorSpec linear_wealth(double r, double mu_drift, double sigma);
    static GeneratorSpec zero();
};

// Spot-check the declared Lipschitz bound on `samples` random tuples drawn
// inside [-range, range]. Returns the maximum excess
// |g(t,y,z) - g(t,y',z')| - mu*(|y-y'| + |z-z'|) observed (<= 0 means the
// declaration held on every sample).
double audit_lipschitz(const GeneratorSpec& gen, std::uint64_t seed, int samples, double range = 10.0);

// ---------------------------------------------------------------------------
// ConstraintSpec: a closed, non-empty set per time, represented as a finite
// union of closed "bands" in the (y, z) plane. Each band is
//   { (y, z) : (lo_a + lo_b*y) * scale <= z <= (hi_a + hi_b*y) * scale }.
// With lo_b = hi_b = 0 this is an ordinary interval in z. Endpoints may be
// +/-inf. The optional pi-space flag requests the nodewise scale sigma*X used
// by the pricing mapping z = pi * sigma * X; outside pricing scale = 1.
// ---------------------------------------------------------------------------

struct ConstraintInterval {
    double lo_a = -kInf;
    double lo_b = 0.0;
    double hi_a = kInf;
    double hi_b = 0.0;
};

// Constraint geometry with endpoints resolved at a concrete scale. Distances
// are Euclidean in the (y, z) plane, which keeps the capped distance jointly
// 1-Lipschitz even when endpoints depend on y.
struct ResolvedConstraint {
    struct Band {
        double lo_a, lo_b, hi_a, hi_b;  // already multiplied by scale
    };
    std::vector<Band> bands;

    bool depends_on_y() const;
    // Uncapped Euclidean distance from the point (y, z) to the union.
    double raw_distance(double y, double z) const;
    // min(raw_distance, 1): the capped distance the penalty multiplies.
    double capped_distance(double y, double z) const;
    // Nearest point of the union; ties broken toward the smaller z*, then the
    // smaller y*. Returns {y*, z*}.
    std::pair<double, double> nearest_point(double y, double z) const;
    // z-section of band m at the given y: [lo, hi] (may be empty: lo > hi).
    double section_lo(std::size_t m, double y) const;
    double section_hi(std::size_t m, double y) const;
    bool section_nonempty(std::size_t m, double y) const;
    bool contains(double y, double z) const;
};

struct ConstraintSpec {
    std::vector<ConstraintInterval> intervals;  // union members, >= 1
    bool pi_space = false;  // endpoints live in portfolio space; solver scales by sigma*X

    void validate() const;
    bool depends_on_y() const;
    bool is_all_of_space() const;
    bool is_convex() const;  // single band
    bool is_cone() const;    // each endpoint is 0 or +/-inf with no y term

    ResolvedConstraint resolve(double scale) const;

    static ConstraintSpec all_of_space();
    // Constant interval [lo, hi] in z-space.
    static ConstraintSpec interval(double lo, double hi);
    // Union of constant intervals in z-space.
    static ConstraintSpec interval_union(const std::vector<std::pair<double, double>>& ivs);
    // pi-space interval [lo, hi] (scaled by sigma*X nodewise).
    static ConstraintSpec pi_interval(double lo, double hi);
    // No-borrowing: pi <= y, i.e. z <= sigma*X*y (pi-space upper endpoint y).
    static ConstraintSpec no_borrowing();
};

// Capped distance at scale 1 for constraints that do not depend on y.
// Throws std::invalid_argument for y-dependent specs (use the _yz form).
double distance_to_constraint(const ConstraintSpec& spec, double t, double z);
// Capped distance at scale 1 from the point (y, z).
double distance_to_constraint_yz(const ConstraintSpec& spec, double t, double y, double z);
// Nearest z* at scale 1 for constraints that do not depend on y; ties toward
// the smaller z*. Distance here is uncapped (diagnostic geometry).
double project_to_constraint(const ConstraintSpec& spec, double t, double z);

// ---------------------------------------------------------------------------
// ObstacleSpec: one-sided reflecting barrier. The handle maps (t, stock) to
// the barrier level; -inf (lower) / +inf (upper) disables the barrier at that
// point, which is how barriers active on a sub-interval of time are written.
// ---------------------------------------------------------------------------

struct ObstacleSpec {
    enum class Kind { none, lower, upper };
    Kind kind = Kind::none;
    std::function<double(double t, double x)> handle;

    double value(double t, double x) const {
        if (kind == Kind::none) throw std::logic_error("ObstacleSpec: no obstacle present");
        return handle(t, x);
    }

    static ObstacleSpec none() { return ObstacleSpec{}; }
    static ObstacleSpec lower(std::function<double(double, double)> h) {
        ObstacleSpec o;
        o.kind = Kind::lower;
        o.handle = std::move(h);
        return o;
    }
    static ObstacleSpec upper(std::function<double(double, double)> h) {
        ObstacleSpec o;
        o.kind = Kind::upper;
        o.handle = std::move(h);
        return o;
    }
};

// ---------------------------------------------------------------------------
// TerminalPayoff: X as a function of the terminal stock level, or a raw
// vector of values at level N.
// ---------------------------------------------------------------------------

struct TerminalPayoff {
    std::function<double(double x)> handle;
    std::optional<std::vector<double>> raw;

    std::vector<double> values_on(const std::vector<double>& terminal_stock) const {
        if (raw) {
            if (raw->size() != terminal_stock.size())
                throw std::invalid_argument("TerminalPayoff: raw vector size does not match terminal level");
            for (double v : *raw)
                if (!std::isfinite(v)) throw std::invalid_argument("TerminalPayoff: non-finite raw value");
            return *raw;
        }
        if (!handle) throw std::invalid_argument("TerminalPayoff: neither handle nor raw values given");
        std::vector<double> out(terminal_stock.size());
        for (std::size_t j = 0; j < terminal_stock.size(); ++j) {
            out[j] = handle(terminal_stock[j]);
            if (!std::isfinite(out[j])) throw std::invalid_argument("TerminalPayoff: non-finite payoff value");
        }
        return out;
    }

    static TerminalPayoff from_handle(std::function<double(double)> h) {
        TerminalPayoff p;
        p.handle = std::move(h);
        return p;
    }
    static TerminalPayoff from_values(std::vector<double> v) {
        TerminalPayoff p;
        p.raw = std::move(v);
        return p;
    }
    static TerminalPayoff call(double strike) {
        return from_handle([strike](double x) { return std::max(x - strike, 0.0); });
    }
    static TerminalPayoff put(double strike) {
        return from_handle([strike](double x) { return std::max(strike - x, 0.0); });
    }
    static TerminalPayoff constant(double c) {
        return from_handle([c](double) { return c; });
    }
};

}  // namespace bsdeg
