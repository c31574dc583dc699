#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpflow/boundary.hpp"
#include "wpflow/fit.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/metric.hpp"
#include "wpflow/parallel.hpp"

namespace wpflow {

/// A metric ball in the compact part, measured with the chart-frozen
/// quadratic distance d^2 = 4 dx^2 + x_c^6 dtau^2 + P_c (dy1^2 + dy2^2)
/// (coefficients taken at the center, periodic differences minimized).
struct BallSpec {
    ManifoldPoint center{0.6, 0.5, 0.5, 0.5};
    double radius = 0.3;

    double x_lo() const { return center.x - radius / 2.0; }  // metric length of dx is 2 dx
    double x_hi() const { return center.x + radius / 2.0; }

    /// Smallest value of f = sqrt(l) over the ball; the ball's systole scale.
    double systole_scale(const MetricSpec& spec) const { return spec.f_of_x(x_lo()); }

    double distance(const ManifoldPoint& p, const MetricSpec& spec) const {
        auto wrapped = [](double d, double period) {
            d = std::fmod(d, period);
            if (d > 0.5 * period) d -= period;
            if (d < -0.5 * period) d += period;
            return d;
        };
        const double dx = p.x - center.x;
        const double dtau = wrapped(p.tau - center.tau, spec.tau_period);
        const double dy1 = wrapped(p.y1 - center.y1, spec.torus_sides[0]);
        const double dy2 = wrapped(p.y2 - center.y2, spec.torus_sides[1]);
        const double xc3 = center.x * center.x * center.x;
        const double Pc = torus_factor(center, spec).P;
        return std::sqrt(4.0 * dx * dx + xc3 * xc3 * dtau * dtau +
                         Pc * (dy1 * dy1 + dy2 * dy2));
    }

    void validate(const MetricSpec& spec) const {
        if (!(radius > 0.0)) throw std::invalid_argument("BallSpec: radius must be positive");
        if (!(x_lo() > spec.x_floor) || !(x_hi() < spec.x_max))
            throw std::invalid_argument("BallSpec: ball leaves the chart in x");
    }
};

/// Region selector for sampling and volume estimation.
struct RegionSpec {
    enum class Kind { ERho, VEps, NEps, Ball, Tube, ControlX };

    Kind kind = Kind::ERho;
    double param = 0.1;  // rho for ERho/NEps, eps for VEps, x-cap for ControlX
    BallSpec ball;

    static RegionSpec e_rho(double rho) { return {Kind::ERho, rho, {}}; }
    static RegionSpec v_eps(double eps) { return {Kind::VEps, eps, {}}; }
    static RegionSpec n_eps(double eps) { return {Kind::NEps, eps, {}}; }
    static RegionSpec ball_region(const BallSpec& b) { return {Kind::Ball, 0.0, b}; }
    static RegionSpec tube(const BallSpec& b) { return {Kind::Tube, 0.0, b}; }
    static RegionSpec control_x(double cap) { return {Kind::ControlX, cap, {}}; }
};

/// Total base mass of the Liouville measure, integral of 2 x^3 P over the
/// chart. The coupling term integrates to zero over a full torus period, so
/// the closed form holds for every eta.
inline double total_liouville_mass(const MetricSpec& spec) {
    const double x4 = spec.x_max * spec.x_max * spec.x_max * spec.x_max;
    return 0.5 * x4 * spec.tau_period * spec.torus_sides[0] * spec.torus_sides[1];
}

/// Draws base points of `region` from the normalized Liouville footprint
/// density. Deterministic per (seed, label, index).
inline std::vector<ManifoldPoint> liouville_sample_base(const RegionSpec& region, std::size_t n,
                                                        const MetricSpec& spec,
                                                        std::uint64_t seed,
                                                        std::string_view label = "base") {
    spec.validate();
    std::vector<ManifoldPoint> out(n);
    using Kind = RegionSpec::Kind;
    switch (region.kind) {
        case Kind::ERho:
        case Kind::NEps: {
            const double x_hi = spec.x_of_f(region.param);
            if (!(x_hi > spec.x_floor) || !(x_hi <= spec.x_max))
                throw std::invalid_argument("liouville_sample_base: region outside chart");
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                out[i] = detail::liouville_base_point(rng, spec, spec.x_floor, x_hi);
            }
            return out;
        }
        case Kind::Ball:
        case Kind::Tube: {
            region.ball.validate(spec);
            const BallSpec& b = region.ball;
            const double xc3 = b.center.x * b.center.x * b.center.x;
            const double Pc = torus_factor(b.center, spec).P;
            const double htau = std::min(b.radius / xc3, 0.5 * spec.tau_period);
            const double hy = std::min(b.radius / std::sqrt(Pc), 0.5 * spec.torus_sides[0]);
            const double w_max =
                2.0 * b.x_hi() * b.x_hi() * b.x_hi() * (1.0 + spec.eta);
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                for (std::uint64_t attempt = 0;; ++attempt) {
                    if (attempt > 1000000)
                        throw std::runtime_error("liouville_sample_base: ball rejection stalled");
                    ManifoldPoint p{rng.uniform(b.x_lo(), b.x_hi()),
                                    rng.uniform(b.center.tau - htau, b.center.tau + htau),
                                    rng.uniform(b.center.y1 - hy, b.center.y1 + hy),
                                    rng.uniform(b.center.y2 - hy, b.center.y2 + hy)};
                    if (b.distance(p, spec) > b.radius) continue;
                    const double w = 2.0 * p.x * p.x * p.x * torus_factor(p, spec).P;
                    if (rng.uniform() * w_max <= w) {
                        out[i] = p.reduced(spec);
                        break;
                    }
                }
            }
            return out;
        }
        case Kind::ControlX: {
            // Synthetic control: artificial density ~ x on {x <= cap}.
            const double cap = region.param;
            if (!(cap > spec.x_floor))
                throw std::invalid_argument("liouville_sample_base: control cap below floor");
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                const double lo2 = spec.x_floor * spec.x_floor;
                const double x = std::sqrt(lo2 + (cap * cap - lo2) * rng.uniform());
                out[i] = {x, rng.uniform(0.0, spec.tau_period),
                          rng.uniform(0.0, spec.torus_sides[0]),
                          rng.uniform(0.0, spec.torus_sides[1])};
            }
            return out;
        }
        case Kind::VEps:
            throw std::invalid_argument(
                "liouville_sample_base: VEps is a phase-space region; use liouville_sample_phase");
    }
    throw std::logic_error("liouville_sample_base: unreachable");
}

/// Draws phase points of `region` (base density times uniform metric fiber;
/// VEps additionally conditions the fiber on r <= eps^2).
inline std::vector<PhasePoint> liouville_sample_phase(const RegionSpec& region, std::size_t n,
                                                      const MetricSpec& spec, std::uint64_t seed,
                                                      std::string_view label = "phase") {
    if (region.kind == RegionSpec::Kind::VEps)
        return sample_V_eps(region.param, n, spec, seed, label);
    const auto base = liouville_sample_base(region, n, spec, seed, label);
    std::vector<PhasePoint> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, std::string(label) + "#fiber", i);
        out[i] = {base[i], detail::from_frame(base[i], spec, rng.sphere3())};
    }
    return out;
}

/// Liouville sample of the whole unit tangent bundle.
inline std::vector<PhasePoint> liouville_sample_all(std::size_t n, const MetricSpec& spec,
                                                    std::uint64_t seed,
                                                    std::string_view label = "all") {
    std::vector<PhasePoint> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, label, i);
        const ManifoldPoint p =
            detail::liouville_base_point(rng, spec, spec.x_floor, spec.x_max);
        out[i] = {p, detail::from_frame(p, spec, rng.sphere3())};
    }
    return out;
}

struct VolumeEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Monte Carlo volume of `region` relative to the total Liouville mass.
///
/// The base integral uses a uniform proposal over the region's chart box with
/// Liouville density weights; the fiber constraint of VEps enters through the
/// exact fraction min(1, (eps^2/|lambda|)^2) of the unit sphere (the squared
/// projection of a uniform direction onto a 2-plane is U(0,1)). ControlX uses
/// its artificial density ~ x normalized by its own total mass.
inline VolumeEstimate estimate_region_volume(const RegionSpec& region, std::size_t n,
                                             const MetricSpec& spec, std::uint64_t seed,
                                             std::string_view label = "vol") {
    spec.validate();
    if (n < 2) throw std::invalid_argument("estimate_region_volume: need n >= 2");
    using Kind = RegionSpec::Kind;

    double sum = 0.0, sum2 = 0.0;
    double box = 0.0;
    double fiber = 1.0;
    double mass = total_liouville_mass(spec);

    auto accumulate = [&](double w) {
        sum += w;
        sum2 += w * w;
    };

    switch (region.kind) {
        case Kind::ERho:
        case Kind::NEps:
        case Kind::VEps: {
            const double x_hi = spec.x_of_f(region.param);
            if (!(x_hi > spec.x_floor) || !(x_hi <= spec.x_max))
                throw std::invalid_argument("estimate_region_volume: region outside chart");
            if (region.kind == Kind::VEps) fiber = fiber_fraction(region.param);
            box = x_hi * spec.tau_period * spec.torus_sides[0] * spec.torus_sides[1];
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                ManifoldPoint p{rng.uniform(0.0, x_hi), rng.uniform(0.0, spec.tau_period),
                                rng.uniform(0.0, spec.torus_sides[0]),
                                rng.uniform(0.0, spec.torus_sides[1])};
                accumulate(2.0 * p.x * p.x * p.x * torus_factor(p, spec).P);
            }
            break;
        }
        case Kind::Ball:
        case Kind::Tube: {
            region.ball.validate(spec);
            const BallSpec& b = region.ball;
            const double xc3 = b.center.x * b.center.x * b.center.x;
            const double Pc = torus_factor(b.center, spec).P;
            const double htau = std::min(b.radius / xc3, 0.5 * spec.tau_period);
            const double hy = std::min(b.radius / std::sqrt(Pc), 0.5 * spec.torus_sides[0]);
            box = (b.x_hi() - b.x_lo()) * (2.0 * htau) * (2.0 * hy) * (2.0 * hy);
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                ManifoldPoint p{rng.uniform(b.x_lo(), b.x_hi()),
                                rng.uniform(b.center.tau - htau, b.center.tau + htau),
                                rng.uniform(b.center.y1 - hy, b.center.y1 + hy),
                                rng.uniform(b.center.y2 - hy, b.center.y2 + hy)};
                const bool in = b.distance(p, spec) <= b.radius;
                accumulate(in ? 2.0 * p.x * p.x * p.x * torus_factor(p, spec).P : 0.0);
            }
            break;
        }
        case Kind::ControlX: {
            const double cap = region.param;
            box = cap;  // 1-d proposal; periodic directions integrate out
            mass = 0.5 * spec.x_max * spec.x_max;  // its own total: integral of x dx
            for (std::size_t i = 0; i < n; ++i) {
                Rng rng = Rng::derive(seed, label, i);
                accumulate(rng.uniform(0.0, cap));
            }
            break;
        }
    }

    const double nn = static_cast<double>(n);
    const double mean = sum / nn;
    const double var = std::max(0.0, sum2 / nn - mean * mean) / (nn - 1.0);
    VolumeEstimate est;
    est.value = mean * box * fiber / mass;
    est.stderr_ = std::sqrt(var) * box * fiber / mass;
    return est;
}

struct VolumeScalingResult {
    std::vector<FitPoint> points;  // (param, relative volume, stderr)
    FitResult fit;
};

/// Estimates vol(region(param)) over a parameter sweep and fits the scaling
/// exponent. Points whose relative stderr exceeds 5% are re-estimated with a
/// doubled sample count (up to three times).
inline VolumeScalingResult volume_scaling(RegionSpec::Kind kind,
                                          const std::vector<double>& params, std::size_t n_per,
                                          const MetricSpec& spec, std::uint64_t seed,
                                          unsigned workers = 0,
                                          const BallSpec& ball = {}) {
    spec.validate();
    if (params.size() < 4)
        throw std::invalid_argument("volume_scaling: need at least 4 parameter values");
    double lo = params.front(), hi = params.front();
    for (double p : params) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    if (!(hi / lo >= 8.0))
        throw std::invalid_argument("volume_scaling: insufficient decades in parameter sweep");
    if (workers == 0) workers = default_workers();

    std::vector<FitPoint> pts(params.size());
    parallel_for(params.size(), workers, [&](std::size_t i) {
        RegionSpec region;
        region.kind = kind;
        region.param = params[i];
        region.ball = ball;
        std::size_t n = n_per;
        VolumeEstimate est;
        for (int attempt = 0; attempt < 4; ++attempt) {
            est = estimate_region_volume(region, n, spec, seed + i,
                                         "vol/" + std::to_string(i) + "/" + std::to_string(attempt));
            if (est.stderr_ <= 0.05 * est.value) break;
            n *= 2;
        }
        pts[i] = {params[i], est.value, est.stderr_};
    });

    VolumeScalingResult out;
    out.points = pts;
    out.fit = power_law_fit(pts);
    return out;
}

struct CodimensionResult {
    FitResult fit;
    bool criterion = false;  // true iff the codimension is significantly above 2
};

/// Minkowski codimension of the boundary from the scaling of vol(N_eps).
/// The criterion flag requires the 95% lower confidence bound to exceed 2
/// (the almost-polarity threshold), so a borderline codimension-2 family
/// reports false rather than flapping on noise.
inline CodimensionResult minkowski_codimension(const std::vector<double>& eps_list,
                                               std::size_t n_per, const MetricSpec& spec,
                                               std::uint64_t seed, unsigned workers = 0,
                                               RegionSpec::Kind kind = RegionSpec::Kind::NEps) {
    const auto scaling = volume_scaling(kind, eps_list, n_per, spec, seed, workers);
    CodimensionResult out;
    out.fit = scaling.fit;
    out.criterion = scaling.fit.ci_low > 2.0;
    return out;
}

}  // namespace wpflow
