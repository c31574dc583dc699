#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpflow/boundary.hpp"
#include "wpflow/measure.hpp"
#include "wpflow/metric.hpp"

namespace wpflow {

/// Standard C-infinity bump, peak 1 at s = 0, support |s| < 1.
inline double bump(double s) {
    const double s2 = s * s;
    if (s2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s2));
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between.
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

/// Plateau profile: 1 on [0, 1-w], smooth drop to 0 at 1. Smoothing a
/// characteristic function needs the plateau; a centered bump would lose
/// half the mass requirement.
inline double plateau(double s, double w) {
    s = std::fabs(s);
    if (s >= 1.0) return 0.0;
    if (s <= 1.0 - w) return 1.0;
    return smooth_step((1.0 - s) / w);
}

/// A smooth [0,1]-valued test function on the unit tangent bundle. Two
/// constructions are supported:
///  - BallBump: plateau profile of the distance to a ball center in the
///    compact part, constant along the fiber.
///  - VepsBump: bump(f/eps) * bump(r/eps^2), supported inside V_eps.
class Observable {
  public:
    enum class Kind { BallBump, VepsBump, Constant };

    static Observable ball_bump(const BallSpec& ball, double plateau_width = 0.25) {
        Observable o;
        o.kind_ = Kind::BallBump;
        o.ball_ = ball;
        o.width_ = plateau_width;
        return o;
    }

    static Observable veps_bump(double eps) {
        Observable o;
        o.kind_ = Kind::VepsBump;
        o.eps_ = eps;
        return o;
    }

    static Observable constant(double value) {
        Observable o;
        o.kind_ = Kind::Constant;
        o.value_ = value;
        return o;
    }

    double operator()(const PhasePoint& v, const MetricSpec& spec) const {
        switch (kind_) {
            case Kind::BallBump:
                return plateau(ball_.distance(v.point, spec) / ball_.radius, width_);
            case Kind::Constant: return value_;
            case Kind::VepsBump: break;
        }
        const BoundaryState bs = boundary_state(v, spec);
        return bump(bs.f / eps_) * bump(bs.r / (eps_ * eps_));
    }

    Kind kind() const { return kind_; }
    const BallSpec& ball() const { return ball_; }
    double eps() const { return eps_; }
    double plateau_width() const { return width_; }

    RegionSpec support_region() const {
        return kind_ == Kind::VepsBump ? RegionSpec::v_eps(eps_) : RegionSpec::tube(ball_);
    }

    /// Metric length scale of base-direction variation.
    double base_feature_scale() const {
        return kind_ == Kind::VepsBump ? eps_ / kSqrt2Pi2 : width_ * ball_.radius;
    }

    /// Angular scale of fiber variation (radians on the fiber sphere).
    double fiber_feature_scale() const {
        return kind_ == Kind::VepsBump ? eps_ * eps_ / kLambdaNorm : 0.5;
    }

  private:
    Kind kind_ = Kind::BallBump;
    BallSpec ball_;
    double eps_ = 0.1;
    double width_ = 0.25;
    double value_ = 0.0;
};

/// Smoothed indicator of a ball in the compact part. Errors out if the ball
/// comes close enough to the boundary to collide with the V_eps scales in
/// play (default guard eps_max = 0.1).
inline Observable build_a(const BallSpec& ball, const MetricSpec& spec, double eps_max = 0.1) {
    spec.validate();
    ball.validate(spec);
    if (ball.x_lo() < 2.0 * spec.x_of_f(eps_max))
        throw std::invalid_argument("build_a: ball overlaps the near-boundary region");
    return Observable::ball_bump(ball);
}

/// Smoothed indicator of V_eps.
inline Observable build_b(double eps, const MetricSpec& spec) {
    spec.validate();
    if (!(spec.x_of_f(eps) > spec.x_floor))
        throw std::invalid_argument("build_b: eps too small for the chart floor");
    return Observable::veps_bump(eps);
}

/// Requires the scale separation 2 eps < systole scale of U that every
/// correlation-type experiment needs between a and b_eps.
inline void check_scale_separation(const BallSpec& U, double eps, const MetricSpec& spec) {
    if (!(2.0 * eps < U.systole_scale(spec)))
        throw std::invalid_argument("scale separation violated: 2 eps >= systole scale of U");
}

/// Estimated C^k norm: sup over sampled support points of the observable and
/// of its frame-direction derivatives up to order k (central differences,
/// steps refined to a tenth of the observable's feature scales). Fiber
/// derivatives rotate the velocity along great circles of the fiber sphere.
inline double estimate_ck_norm(const Observable& obs, int k, const MetricSpec& spec,
                               std::uint64_t seed, std::size_t n_points = 400,
                               std::string_view label = "cknorm") {
    spec.validate();
    if (k < 1 || k > 3) throw std::invalid_argument("estimate_ck_norm: k must be 1, 2 or 3");

    const auto points = liouville_sample_phase(obs.support_region(), n_points, spec, seed, label);
    const double h_base = obs.base_feature_scale() / 10.0;
    const double h_fib = obs.fiber_feature_scale() / 10.0;

    double best = 0.0;
    for (const auto& v : points) {
        best = std::max(best, obs(v, spec));
        const auto frame = orthonormal_frame(v.point, spec);

        // Base directions: displace the footprint along the orthonormal frame.
        for (int d = 0; d < 4; ++d) {
            auto shifted = [&](double step) {
                PhasePoint w = v;
                for (int c = 0; c < 4; ++c) {
                    const double dd = step * frame[d][c];
                    if (c == 0) w.point.x += dd;
                    else if (c == 1) w.point.tau += dd;
                    else if (c == 2) w.point.y1 += dd;
                    else w.point.y2 += dd;
                }
                if (w.point.x <= spec.x_floor || w.point.x >= spec.x_max) return -1.0;
                return obs(w, spec);
            };
            const double fm2 = shifted(-2.0 * h_base), fm1 = shifted(-h_base);
            const double f0 = obs(v, spec);
            const double fp1 = shifted(h_base), fp2 = shifted(2.0 * h_base);
            if (fm2 < 0.0 || fm1 < 0.0 || fp1 < 0.0 || fp2 < 0.0) continue;
            best = std::max(best, std::fabs(fp1 - fm1) / (2.0 * h_base));
            if (k >= 2)
                best = std::max(best, std::fabs(fp1 - 2.0 * f0 + fm1) / (h_base * h_base));
            if (k >= 3)
                best = std::max(best, std::fabs(fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) /
                                          (2.0 * h_base * h_base * h_base));
        }

        // Fiber directions: rotate v toward each frame vector orthogonal to it.
        for (int d = 0; d < 4; ++d) {
            TangentVector w = frame[d];
            const double c = inner(v.point, spec, w, v.velocity);
            w = w - v.velocity * c;
            const double nw = norm(v.point, spec, w);
            if (nw < 1e-6) continue;
            w = w * (1.0 / nw);
            auto rotated = [&](double theta) {
                PhasePoint r = v;
                r.velocity = v.velocity * std::cos(theta) + w * std::sin(theta);
                return obs(r, spec);
            };
            const double fm2 = rotated(-2.0 * h_fib), fm1 = rotated(-h_fib);
            const double f0 = obs(v, spec);
            const double fp1 = rotated(h_fib), fp2 = rotated(2.0 * h_fib);
            best = std::max(best, std::fabs(fp1 - fm1) / (2.0 * h_fib));
            if (k >= 2) best = std::max(best, std::fabs(fp1 - 2.0 * f0 + fm1) / (h_fib * h_fib));
            if (k >= 3)
                best = std::max(best, std::fabs(fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) /
                                          (2.0 * h_fib * h_fib * h_fib));
        }
    }
    return best;
}

}  // namespace wpflow
