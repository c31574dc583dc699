#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wpflow/metric.hpp"

namespace wpflow {

/// A point of the unit tangent bundle: footprint plus velocity.
struct PhasePoint {
    ManifoldPoint point;
    TangentVector velocity;
};

inline double speed(const PhasePoint& v, const MetricSpec& spec) {
    return norm(v.point, spec, v.velocity);
}

/// Rescales the velocity to unit metric speed.
inline PhasePoint normalized(PhasePoint v, const MetricSpec& spec) {
    const double s = speed(v, spec);
    if (!(s > 0.0)) throw std::invalid_argument("normalized: zero velocity");
    v.velocity = v.velocity * (1.0 / s);
    return v;
}

enum class EventKind { BoundaryHit, WallReflection, ThresholdCross };

struct TrajectoryEvent {
    double t = 0.0;
    EventKind kind = EventKind::BoundaryHit;
};

struct IntegratorStats {
    std::uint64_t steps = 0;
    std::uint64_t rejected = 0;
    double max_energy_drift = 0.0;  // max |speed - 1| seen at accepted steps
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    std::vector<TrajectoryEvent> events;
    IntegratorStats stats;
    double final_time = 0.0;
    PhasePoint final_state;
    bool hit_floor = false;

    bool valid(double drift_tol = 1e-8) const { return stats.max_energy_drift <= drift_tol; }
};

struct IntegratorOptions {
    double rel_tol = 2e-12;
    double abs_tol = 1e-14;
    double max_step = 0.25;
    double min_step = 1e-12;     // adaptive step below this aborts
    double step_x_fraction = 0.1;  // geometric cap h <= fraction * x
    double sample_dt = 0.0;      // 0: record every accepted step
    bool record = true;
    double threshold_x = 0.0;    // if > 0, detect upward crossings of x = threshold_x
    bool stop_at_threshold = false;
    double unit_speed_tol = 1e-6;
};

/// Raised when the adaptive step underflows; carries the last valid state.
class StepUnderflowError : public std::runtime_error {
  public:
    StepUnderflowError(double t, const PhasePoint& state)
        : std::runtime_error("geodesic integration: step size underflow at t = " +
                             std::to_string(t)),
          t_(t),
          state_(state) {}
    double t() const { return t_; }
    const PhasePoint& last_state() const { return state_; }

  private:
    double t_;
    PhasePoint state_;
};

namespace detail {

using State8 = std::array<double, 8>;

inline State8 pack(const PhasePoint& v) {
    return {v.point.x,    v.point.tau,    v.point.y1,    v.point.y2,
            v.velocity.vx, v.velocity.vtau, v.velocity.vy1, v.velocity.vy2};
}

inline PhasePoint unpack(const State8& s) {
    return {{s[0], s[1], s[2], s[3]}, {s[4], s[5], s[6], s[7]}};
}

/// Geodesic equation in closed form. Equivalent to contracting the velocity
/// with christoffel_at; written out so the hot loop stays cheap.
inline void geodesic_rhs(const State8& s, const MetricSpec& spec, State8& out) {
    const double x = s[0];
    const double vx = s[4], vtau = s[5], vy1 = s[6], vy2 = s[7];
    const double x2 = x * x;
    const double x3 = x2 * x;
    const double x5 = x3 * x2;

    out[0] = vx;
    out[1] = vtau;
    out[2] = vy1;
    out[3] = vy2;
    out[4] = 0.75 * x5 * vtau * vtau;
    out[5] = -6.0 / x * vx * vtau;
    out[6] = 0.0;
    out[7] = 0.0;

    if (spec.eta != 0.0) {
        const double k = 2.0 * std::numbers::pi_v<double> / spec.torus_sides[0];
        const double c = std::cos(k * s[2]);
        const double cp = -k * std::sin(k * s[2]);
        const double P = 1.0 + spec.eta * x3 * x * c;
        const double Px = 4.0 * spec.eta * x3 * c;
        const double Py = spec.eta * x3 * x * cp;
        const double A = Px / (2.0 * P);
        const double B = Py / (2.0 * P);
        out[4] += (Px / 8.0) * (vy1 * vy1 + vy2 * vy2);
        out[6] = -2.0 * A * vx * vy1 - B * (vy1 * vy1 - vy2 * vy2);
        out[7] = -2.0 * A * vx * vy2 - 2.0 * B * vy1 * vy2;
    }
}

inline double energy_deviation(const State8& s, const MetricSpec& spec) {
    const PhasePoint v = unpack(s);
    return std::fabs(norm(v.point, spec, v.velocity) - 1.0);
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

/// One DP5 step from (t, y) with derivative k1 already evaluated.
/// Returns the scaled error estimate; fills y_new and k_new (FSAL).
inline double dopri5_step(const State8& y, const State8& k1, double h, const MetricSpec& spec,
                          State8& y_new, State8& k_new, double rel_tol, double abs_tol) {
    using T = Dopri5;
    State8 k2, k3, k4, k5, k6, tmp;

    for (int i = 0; i < 8; ++i) tmp[i] = y[i] + h * T::a21 * k1[i];
    geodesic_rhs(tmp, spec, k2);
    for (int i = 0; i < 8; ++i) tmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    geodesic_rhs(tmp, spec, k3);
    for (int i = 0; i < 8; ++i)
        tmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    geodesic_rhs(tmp, spec, k4);
    for (int i = 0; i < 8; ++i)
        tmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    geodesic_rhs(tmp, spec, k5);
    for (int i = 0; i < 8; ++i)
        tmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                             T::a65 * k5[i]);
    geodesic_rhs(tmp, spec, k6);
    for (int i = 0; i < 8; ++i)
        y_new[i] = y[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] +
                               T::b6 * k6[i]);
    geodesic_rhs(y_new, spec, k_new);

    double err = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                              T::e6 * k6[i] + T::e7 * k_new[i]);
        const double sc = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
        err += (e / sc) * (e / sc);
    }
    return std::sqrt(err / 8.0);
}

/// Cubic Hermite interpolation on an accepted step.
struct DenseSegment {
    double t0, h;
    State8 y0, y1, k0, k1;

    State8 eval(double t) const {
        const double s = (t - t0) / h;
        const double s2 = s * s;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s2 * (3 - 2 * s);
        const double h11 = s2 * (s - 1);
        State8 out;
        for (int i = 0; i < 8; ++i)
            out[i] = h00 * y0[i] + h10 * h * k0[i] + h01 * y1[i] + h11 * h * k1[i];
        return out;
    }

    /// First time in (t0, t0+h] where x crosses `level`; NaN if none.
    /// Scans a few interior samples to bracket, then bisects.
    double first_x_crossing(double level, bool upward) const {
        auto val = [&](double t) { return eval(t)[0] - level; };
        const int scan = 8;
        double ta = t0;
        double fa = y0[0] - level;
        for (int j = 1; j <= scan; ++j) {
            const double tb = t0 + h * static_cast<double>(j) / scan;
            const double fb = (j == scan) ? (y1[0] - level) : val(tb);
            const bool crossed = upward ? (fa < 0.0 && fb >= 0.0) : (fa > 0.0 && fb <= 0.0);
            if (crossed) {
                double lo = ta, hi = tb;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = val(mid);
                    const bool side = upward ? (fm < 0.0) : (fm > 0.0);
                    (side ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
            ta = tb;
            fa = fb;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
};

}  // namespace detail

/// Integrates the geodesic flow from v0 for `horizon` time units.
///
/// Adaptive Dormand-Prince 5(4); the step is additionally capped at
/// step_x_fraction * x because the curvature grows like x^-2 toward the
/// boundary. The speed is never renormalized: the drift |speed - 1| is
/// tracked and reported in the stats. A reflecting wall sits at x = x_max
/// (x-velocity negated, event logged); reaching x_floor aborts the
/// trajectory with a BoundaryHit event.
inline Trajectory integrate(const PhasePoint& v0, double horizon, const MetricSpec& spec,
                            const IntegratorOptions& opts = {}) {
    spec.validate();
    check_chart_domain(v0.point, spec);
    if (!(horizon > 0.0)) throw std::invalid_argument("integrate: horizon must be positive");
    if (std::fabs(speed(v0, spec) - 1.0) > opts.unit_speed_tol)
        throw std::invalid_argument("integrate: initial condition is not unit speed");

    using detail::State8;
    Trajectory traj;
    State8 y = detail::pack(v0);
    State8 k;
    detail::geodesic_rhs(y, spec, k);

    double t = 0.0;
    double h = std::min({opts.max_step, opts.step_x_fraction * y[0], horizon, 1e-3});
    double next_sample = opts.sample_dt;
    bool threshold_seen = false;

    auto record_state = [&](double tt, const State8& ss) {
        traj.times.push_back(tt);
        traj.states.push_back(detail::unpack(ss));
    };
    if (opts.record) record_state(0.0, y);

    while (t < horizon) {
        h = std::min({h, opts.max_step, opts.step_x_fraction * y[0], horizon - t});
        if (h < opts.min_step) throw StepUnderflowError(t, detail::unpack(y));

        State8 y_new, k_new;
        const double err =
            detail::dopri5_step(y, k, h, spec, y_new, k_new, opts.rel_tol, opts.abs_tol);
        if (err > 1.0) {
            ++traj.stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            continue;
        }

        detail::DenseSegment seg{t, h, y, y_new, k, k_new};
        const double t_end = t + h;
        double t_stop = t_end;
        bool stop = false;

        // Events are relocated by a direct partial step rather than by the
        // interpolant, so the propagated state keeps the integrator's own
        // accuracy across reflections.
        auto relocate = [&](double t_event, State8& out, State8& k_out) {
            detail::dopri5_step(y, k, t_event - t, spec, out, k_out, opts.rel_tol, opts.abs_tol);
        };

        // Floor, wall and threshold crossings inside the accepted step, in
        // chronological order. The step cap keeps |dx| ~ 0.05 x, so at most
        // one boundary event occurs per step.
        const double t_floor = (std::min(y[0], y_new[0]) <= spec.x_floor * (1.0 + 1e-9))
                                   ? seg.first_x_crossing(spec.x_floor, false)
                                   : std::numeric_limits<double>::quiet_NaN();
        const double t_wall = (std::max(y[0], y_new[0]) >= spec.x_max * (1.0 - 1e-12))
                                  ? seg.first_x_crossing(spec.x_max, true)
                                  : std::numeric_limits<double>::quiet_NaN();
        double t_thresh = std::numeric_limits<double>::quiet_NaN();
        if (opts.threshold_x > 0.0 && !threshold_seen &&
            std::max(y[0], y_new[0]) >= opts.threshold_x)
            t_thresh = seg.first_x_crossing(opts.threshold_x, true);

        if (!std::isnan(t_thresh) && (std::isnan(t_floor) || t_thresh < t_floor) &&
            (std::isnan(t_wall) || t_thresh < t_wall)) {
            traj.events.push_back({t_thresh, EventKind::ThresholdCross});
            threshold_seen = true;
            if (opts.stop_at_threshold) {
                t_stop = t_thresh;
                relocate(t_thresh, y_new, k_new);
                stop = true;
            }
        }
        if (!stop && !std::isnan(t_floor) && (std::isnan(t_wall) || t_floor < t_wall)) {
            traj.events.push_back({t_floor, EventKind::BoundaryHit});
            t_stop = t_floor;
            relocate(t_floor, y_new, k_new);
            y_new[0] = spec.x_floor;
            traj.hit_floor = true;
            stop = true;
        } else if (!stop && !std::isnan(t_wall)) {
            traj.events.push_back({t_wall, EventKind::WallReflection});
            t_stop = t_wall;
            relocate(t_wall, y_new, k_new);
            y_new[0] = spec.x_max;
            y_new[4] = -y_new[4];  // exact speed preservation: metric is diagonal
            detail::geodesic_rhs(y_new, spec, k_new);
        }

        ++traj.stats.steps;
        traj.stats.max_energy_drift =
            std::max(traj.stats.max_energy_drift, detail::energy_deviation(y_new, spec));

        if (opts.record) {
            if (opts.sample_dt > 0.0) {
                while (next_sample <= t_stop + 1e-15 && next_sample <= horizon) {
                    record_state(next_sample, seg.eval(std::min(next_sample, t_stop)));
                    next_sample += opts.sample_dt;
                }
            } else {
                record_state(t_stop, y_new);
            }
        }

        t = t_stop;
        y = y_new;
        k = k_new;  // FSAL; recomputed above whenever the state was relocated

        if (stop) break;
        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
    }

    traj.final_time = t;
    traj.final_state = detail::unpack(y);
    if (opts.record && (opts.sample_dt > 0.0)) {
        if (traj.times.empty() || traj.times.back() < traj.final_time - 1e-15)
            record_state(traj.final_time, y);
    }
    return traj;
}

/// Clairaut momentum of the cusp plane, x^6 * dtau/dt. Exactly conserved when
/// eta = 0.
inline double clairaut_momentum(const PhasePoint& v) {
    const double x3 = v.point.x * v.point.x * v.point.x;
    return x3 * x3 * v.velocity.vtau;
}

}  // namespace wpflow
