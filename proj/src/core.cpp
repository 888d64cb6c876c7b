#include "bsdeg/core.hpp"

#include <algorithm>
#include <random>

namespace bsdeg {

// ---------------------------------------------------------------------------
// GeneratorSpec factories
// ---------------------------------------------------------------------------

GeneratorSpec GeneratorSpec::linear_wealth(double r, double mu_drift, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("linear_wealth: sigma must be > 0");
    const double theta = (mu_drift - r) / sigma;
    GeneratorSpec spec;
    spec.g = [r, theta](double, double y, double z) { return -r * y - theta * z; };
    spec.lipschitz_mu = std::max(r, std::abs(theta));
    spec.depends_on_y = (r != 0.0);
    spec.is_linear_wealth = true;
    spec.vanishes_at_zero = true;
    spec.z_only = (r == 0.0);
    spec.positively_homogeneous = true;
    spec.convex = true;
    spec.sublinear = true;  // linear maps are sublinear
    spec.bounded_in_z = false;
    spec.has_affine_rate = true;
    spec.affine_rate_a = -r;
    spec.wealth_r = r;
    spec.wealth_mu_drift = mu_drift;
    spec.wealth_sigma = sigma;
    spec.name = "linear_wealth";
    return spec;
}

GeneratorSpec GeneratorSpec::zero() {
    GeneratorSpec spec;
    spec.g = [](double, double, double) { return 0.0; };
    spec.lipschitz_mu = 0.0;
    spec.vanishes_at_zero = true;
    spec.z_only = true;
    spec.positively_homogeneous = true;
    spec.convex = true;
    spec.sublinear = true;
    spec.bounded_in_z = true;
    spec.has_affine_rate = true;
    spec.affine_rate_a = 0.0;
    spec.name = "zero";
    return spec;
}

double audit_lipschitz(const GeneratorSpec& gen, std::uint64_t seed, int samples, double range) {
    gen.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-range, range);
    std::uniform_real_distribution<double> ut(0.0, std::max(range, 1.0));
    double worst = -kInf;
    for (int s = 0; s < samples; ++s) {
        const double t = ut(rng);
        const double y1 = u(rng), z1 = u(rng), y2 = u(rng), z2 = u(rng);
        const double lhs = std::abs(gen(t, y1, z1) - gen(t, y2, z2));
        const double rhs = gen.lipschitz_mu * (std::abs(y1 - y2) + std::abs(z1 - z2));
        worst = std::max(worst, lhs - rhs);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// ResolvedConstraint geometry
// ---------------------------------------------------------------------------

bool ResolvedConstraint::depends_on_y() const {
    for (const auto& b : bands)
        if (b.lo_b != 0.0 || b.hi_b != 0.0) return true;
    return false;
}

double ResolvedConstraint::section_lo(std::size_t m, double y) const {
    const auto& b = bands[m];
    return std::isfinite(b.lo_a) || b.lo_b != 0.0 ? b.lo_a + b.lo_b * y : b.lo_a;
}

double ResolvedConstraint::section_hi(std::size_t m, double y) const {
    const auto& b = bands[m];
    return std::isfinite(b.hi_a) || b.hi_b != 0.0 ? b.hi_a + b.hi_b * y : b.hi_a;
}

bool ResolvedConstraint::section_nonempty(std::size_t m, double y) const {
    return section_lo(m, y) <= section_hi(m, y);
}

bool ResolvedConstraint::contains(double y, double z) const {
    for (std::size_t m = 0; m < bands.size(); ++m)
        if (section_nonempty(m, y) && z >= section_lo(m, y) && z <= section_hi(m, y)) return true;
    return false;
}

namespace {

struct Candidate {
    double dist;
    double y;
    double z;
};

// Perpendicular foot of (y0, z0) on the line z = m*y + c, in (y, z) coords.
Candidate foot_on_line(double y0, double z0, double m, double c) {
    const double u = (z0 - m * y0 - c) / (1.0 + m * m);
    Candidate cand;
    cand.y = y0 + m * u;
    cand.z = z0 - u;
    cand.dist = std::abs(u) * std::sqrt(1.0 + m * m);
    return cand;
}

void consider(std::optional<Candidate>& best, const Candidate& c) {
    if (!best || c.dist < best->dist ||
        (c.dist == best->dist && (c.z < best->z || (c.z == best->z && c.y < best->y))))
        best = c;
}

// Nearest point of one band (wedge between the lines z = lo(y) and z = hi(y),
// restricted to {y : lo(y) <= hi(y)}) from (y0, z0).
std::optional<Candidate> nearest_on_band(const ResolvedConstraint::Band& b, double y0, double z0) {
    const bool lo_finite = std::isfinite(b.lo_a) || b.lo_b != 0.0;
    const bool hi_finite = std::isfinite(b.hi_a) || b.hi_b != 0.0;
    auto lo_at = [&](double y) { return lo_finite ? b.lo_a + b.lo_b * y : -kInf; };
    auto hi_at = [&](double y) { return hi_finite ? b.hi_a + b.hi_b * y : kInf; };

    // Domain of the wedge in y.
    auto in_domain = [&](double y) { return lo_at(y) <= hi_at(y); };

    if (!lo_finite && !hi_finite) return Candidate{0.0, y0, z0};  // whole plane

    if (in_domain(y0) && z0 >= lo_at(y0) && z0 <= hi_at(y0)) return Candidate{0.0, y0, z0};

    std::optional<Candidate> best;
    if (hi_finite && z0 > hi_at(y0)) {
        Candidate f = foot_on_line(y0, z0, b.hi_b, b.hi_a);
        if (in_domain(f.y)) consider(best, f);
    }
    if (lo_finite && z0 < lo_at(y0)) {
        Candidate f = foot_on_line(y0, z0, b.lo_b, b.lo_a);
        if (in_domain(f.y)) consider(best, f);
    }
    // Wedge corner where the lines meet (only when both finite with distinct
    // slopes); it is the nearest point whenever both perpendicular feet fall
    // outside the wedge domain.
    if (lo_finite && hi_finite && b.lo_b != b.hi_b) {
        const double yx = (b.hi_a - b.lo_a) / (b.lo_b - b.hi_b);
        const double zx = b.hi_a + b.hi_b * yx;
        const double d = std::hypot(y0 - yx, z0 - zx);
        consider(best, Candidate{d, yx, zx});
    }
    return best;
}

}  // namespace

double ResolvedConstraint::raw_distance(double y, double z) const {
    double best = kInf;
    for (const auto& b : bands) {
        auto c = nearest_on_band(b, y, z);
        if (c) best = std::min(best, c->dist);
    }
    if (!std::isfinite(best)) throw std::invalid_argument("ResolvedConstraint: empty constraint set");
    return best;
}

double ResolvedConstraint::capped_distance(double y, double z) const {
    return std::min(raw_distance(y, z), 1.0);
}

std::pair<double, double> ResolvedConstraint::nearest_point(double y, double z) const {
    std::optional<Candidate> best;
    for (const auto& b : bands) {
        auto c = nearest_on_band(b, y, z);
        if (c) consider(best, *c);
    }
    if (!best) throw std::invalid_argument("ResolvedConstraint: empty constraint set");
    return {best->y, best->z};
}

// ---------------------------------------------------------------------------
// ConstraintSpec
// ---------------------------------------------------------------------------

void ConstraintSpec::validate() const {
    if (intervals.empty()) throw std::invalid_argument("ConstraintSpec: constraint set must be non-empty");
    for (const auto& iv : intervals) {
        if (std::isnan(iv.lo_a) || std::isnan(iv.hi_a) || std::isnan(iv.lo_b) || std::isnan(iv.hi_b))
            throw std::invalid_argument("ConstraintSpec: NaN endpoint");
        const bool lo_finite = std::isfinite(iv.lo_a) || iv.lo_b != 0.0;
        const bool hi_finite = std::isfinite(iv.hi_a) || iv.hi_b != 0.0;
        if (lo_finite && hi_finite && iv.lo_b == iv.hi_b && iv.lo_a > iv.hi_a)
            throw std::invalid_argument("ConstraintSpec: interval with lo > hi is empty");
        if (iv.lo_a == kInf || iv.hi_a == -kInf)
            throw std::invalid_argument("ConstraintSpec: interval with lo=+inf or hi=-inf is empty");
    }
}

bool ConstraintSpec::depends_on_y() const {
    for (const auto& iv : intervals)
        if (iv.lo_b != 0.0 || iv.hi_b != 0.0) return true;
    return false;
}

bool ConstraintSpec::is_all_of_space() const {
    for (const auto& iv : intervals)
        if (iv.lo_a == -kInf && iv.lo_b == 0.0 && iv.hi_a == kInf && iv.hi_b == 0.0) return true;
    return false;
}

bool ConstraintSpec::is_convex() const { return intervals.size() == 1; }

bool ConstraintSpec::is_cone() const {
    for (const auto& iv : intervals) {
        const bool lo_ok = iv.lo_a == -kInf || iv.lo_a == 0.0;
        const bool hi_ok = iv.hi_a == kInf || iv.hi_a == 0.0;
        if (!lo_ok || !hi_ok) return false;
    }
    return true;
}

ResolvedConstraint ConstraintSpec::resolve(double scale) const {
    validate();
    if (!(scale > 0.0)) throw std::invalid_argument("ConstraintSpec: resolve scale must be > 0");
    ResolvedConstraint rc;
    rc.bands.reserve(intervals.size());
    for (const auto& iv : intervals) {
        ResolvedConstraint::Band b;
        b.lo_a = std::isfinite(iv.lo_a) ? iv.lo_a * scale : iv.lo_a;
        b.lo_b = iv.lo_b * scale;
        b.hi_a = std::isfinite(iv.hi_a) ? iv.hi_a * scale : iv.hi_a;
        b.hi_b = iv.hi_b * scale;
        rc.bands.push_back(b);
    }
    return rc;
}

ConstraintSpec ConstraintSpec::all_of_space() {
    ConstraintSpec c;
    c.intervals.push_back(ConstraintInterval{});
    return c;
}

ConstraintSpec ConstraintSpec::interval(double lo, double hi) {
    ConstraintSpec c;
    ConstraintInterval iv;
    iv.lo_a = lo;
    iv.hi_a = hi;
    c.intervals.push_back(iv);
    c.validate();
    return c;
}

ConstraintSpec ConstraintSpec::interval_union(const std::vector<std::pair<double, double>>& ivs) {
    ConstraintSpec c;
    for (const auto& [lo, hi] : ivs) {
        ConstraintInterval iv;
        iv.lo_a = lo;
        iv.hi_a = hi;
        c.intervals.push_back(iv);
    }
    c.validate();
    return c;
}

ConstraintSpec ConstraintSpec::pi_interval(double lo, double hi) {
    ConstraintSpec c = interval(lo, hi);
    c.pi_space = true;
    return c;
}

ConstraintSpec ConstraintSpec::no_borrowing() {
    ConstraintSpec c;
    ConstraintInterval iv;
    iv.lo_a = -kInf;
    iv.hi_a = 0.0;
    iv.hi_b = 1.0;  // pi <= y
    c.intervals.push_back(iv);
    c.pi_space = true;
    return c;
}

double distance_to_constraint(const ConstraintSpec& spec, double /*t*/, double z) {
    if (spec.depends_on_y())
        throw std::invalid_argument(
            "distance_to_constraint: constraint depends on y; use distance_to_constraint_yz");
    return spec.resolve(1.0).capped_distance(0.0, z);
}

double distance_to_constraint_yz(const ConstraintSpec& spec, double /*t*/, double y, double z) {
    return spec.resolve(1.0).capped_distance(y, z);
}

double project_to_constraint(const ConstraintSpec& spec, double /*t*/, double z) {
    if (spec.depends_on_y())
        throw std::invalid_argument("project_to_constraint: constraint depends on y");
    return spec.resolve(1.0).nearest_point(0.0, z).second;
}

}  // namespace bsdeg
