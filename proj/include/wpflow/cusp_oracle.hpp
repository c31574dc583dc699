#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wpflow/geodesic.hpp"
#include "wpflow/metric.hpp"
#include "wpflow/quadrature.hpp"

namespace wpflow {

/// Exact-quadrature reference solution for geodesics of the unperturbed cusp
/// plane, used to verify the general integrator on an independent path.
///
/// In the radius coordinate u = 2x the cusp metric is du^2 + rho(u)^2 dtau^2
/// with rho(u) = u^3/8, a surface of revolution. Unit speed and the conserved
/// angular momentum p = rho^2 dtau/dt reduce the motion to
///     du/dt = +-sqrt(1 - p^2/rho(u)^2),   dtau/dt = p/rho(u)^2,
/// which this class integrates by Gauss-Kronrod quadrature in the substituted
/// variable w = sqrt(u - u*), where rho(u*) = |p| is the turning radius. The
/// substitution removes the inverse-square-root turning singularity entirely:
/// with q = u*/u one has 1 - q^6 = (w^2/u) * (1+q+q^2+q^3+q^4+q^5), so the
/// time integrand 2 sqrt(u / (1+...+q^5)) is smooth through the turning point.
class CuspGeodesicOracle {
  public:
    CuspGeodesicOracle(const PhasePoint& v0, double horizon, const MetricSpec& spec)
        : spec_(spec), horizon_(horizon) {
        spec.validate();
        if (spec.eta != 0.0)
            throw std::invalid_argument("cusp oracle: requires eta = 0");
        if (std::fabs(v0.velocity.vy1) > 1e-14 || std::fabs(v0.velocity.vy2) > 1e-14)
            throw std::invalid_argument("cusp oracle: velocity must lie in the cusp plane");
        check_chart_domain(v0.point, spec);
        if (std::fabs(speed(v0, spec) - 1.0) > 1e-8)
            throw std::invalid_argument("cusp oracle: initial condition is not unit speed");
        if (!(horizon > 0.0)) throw std::invalid_argument("cusp oracle: horizon must be positive");

        tau0_ = v0.point.tau;
        y1_ = v0.point.y1;
        y2_ = v0.point.y2;
        const double u0 = 2.0 * v0.point.x;
        p_ = rho(u0) * rho(u0) * v0.velocity.vtau;
        u_star_ = (p_ == 0.0) ? 0.0 : 2.0 * std::cbrt(std::fabs(p_));
        if (u_star_ > u0 * (1.0 + 1e-12))
            throw std::invalid_argument("cusp oracle: no real motion (p exceeds rho(u0))");
        u_star_ = std::min(u_star_, u0);

        build_segments(u0, 2.0 * v0.velocity.vx);
    }

    double stop_time() const { return stop_time_; }
    bool hit_floor() const { return hit_floor_; }
    const std::vector<TrajectoryEvent>& events() const { return events_; }

    /// State at time t (requires 0 <= t <= stop_time()).
    PhasePoint state_at(double t) const {
        if (t < 0.0 || t > stop_time_ + 1e-12)
            throw std::out_of_range("cusp oracle: time beyond trajectory");
        t = std::min(t, stop_time_);
        const Segment* seg = &segments_.back();
        for (const auto& s : segments_)
            if (t <= s.t1 + 1e-15) {
                seg = &s;
                break;
            }
        const double dt = t - seg->t0;
        double w;
        if (seg->dir > 0) {
            w = invert_time(seg->w0, dt);
        } else {
            // Inward motion mirrors outward motion run backwards.
            w = invert_time_down(seg->w0, dt);
        }
        const double u = u_star_ + w * w;
        const double udot = seg_udot(w, seg->dir);
        const double tau = seg->tau0 + seg->dir * (theta_from_star(w) - theta_from_star(seg->w0));
        return {{u / 2.0, tau, y1_, y2_}, {udot / 2.0, p_ == 0.0 ? 0.0 : p_ / (rho(u) * rho(u)),
                                           0.0, 0.0}};
    }

    /// Samples the trajectory at spacing dt, mirroring integrate()'s layout.
    Trajectory sample(double dt) const {
        Trajectory traj;
        for (double t = 0.0; t <= stop_time_ + 1e-12; t += dt) {
            const double tc = std::min(t, stop_time_);
            traj.times.push_back(tc);
            traj.states.push_back(state_at(tc));
        }
        traj.events = events_;
        traj.final_time = stop_time_;
        traj.final_state = traj.states.back();
        traj.hit_floor = hit_floor_;
        return traj;
    }

    /// Turning radius in the x coordinate (0 for radial motion).
    double turning_x() const { return u_star_ / 2.0; }

  private:
    struct Segment {
        double t0, t1;
        double w0;    // w at t0
        int dir;      // +1 outward (u increasing), -1 inward
        double tau0;  // tau at t0
    };

    static double rho(double u) { return u * u * u / 8.0; }

    // Smooth time integrand 2*sqrt(u/S(q)), S = sum_{j<6} q^j, q = u*/u.
    double time_integrand(double w) const {
        const double u = u_star_ + w * w;
        const double q = (u_star_ == 0.0) ? 0.0 : u_star_ / u;
        double S = 1.0, qj = 1.0;
        for (int j = 1; j < 6; ++j) {
            qj *= q;
            S += qj;
        }
        return 2.0 * std::sqrt(u / S);
    }

    double theta_integrand(double w) const {
        const double u = u_star_ + w * w;
        const double r2 = rho(u) * rho(u);
        return (p_ / r2) * time_integrand(w);
    }

    /// Time from the turning point to w (outward).
    double time_from_star(double w) const {
        return integrate_gk([this](double s) { return time_integrand(s); }, 0.0, w, 1e-13);
    }

    double theta_from_star(double w) const {
        if (p_ == 0.0) return 0.0;
        return integrate_gk([this](double s) { return theta_integrand(s); }, 0.0, w, 1e-13);
    }

    /// Solves time_from_star(w) - time_from_star(w_a) = dt for w >= w_a.
    double invert_time(double w_a, double dt) const {
        if (dt <= 0.0) return w_a;
        const double base = time_from_star(w_a);
        const double u_a = u_star_ + w_a * w_a;
        const double w_hi = std::sqrt(u_a + dt - u_star_) + 1e-9;  // |du/dt| <= 1
        return bisect(
            [&](double w) { return (time_from_star(w) - base) - dt; }, w_a, w_hi);
    }

    /// Inward: solves time_from_star(w_a) - time_from_star(w) = dt for w <= w_a.
    double invert_time_down(double w_a, double dt) const {
        if (dt <= 0.0) return w_a;
        const double base = time_from_star(w_a);
        if (dt >= base) return 0.0;
        return bisect([&](double w) { return (base - time_from_star(w)) - dt; }, 0.0, w_a);
    }

    double seg_udot(double w, int dir) const {
        const double u = u_star_ + w * w;
        const double q = (u_star_ == 0.0) ? 0.0 : u_star_ / u;
        double S = 1.0, qj = 1.0;
        for (int j = 1; j < 6; ++j) {
            qj *= q;
            S += qj;
        }
        return dir * w * std::sqrt(S / u);
    }

    void build_segments(double u0, double udot0) {
        const double u_wall = 2.0 * spec_.x_max;
        const double u_floor = 2.0 * spec_.x_floor;
        double w_cur = std::sqrt(std::max(0.0, u0 - u_star_));
        int dir = (udot0 < 0.0) ? -1 : +1;
        double t_cur = 0.0;
        double tau_cur = tau0_;
        const double w_wall = std::sqrt(std::max(0.0, u_wall - u_star_));

        while (t_cur < horizon_) {
            Segment seg{t_cur, 0.0, w_cur, dir, tau_cur};
            if (dir < 0) {
                if (u_star_ >= u_floor) {
                    // Reaches the turning point, then heads outward.
                    const double dt = time_from_star(w_cur);
                    seg.t1 = t_cur + dt;
                    segments_.push_back(seg);
                    tau_cur += theta_from_star(w_cur);  // dir = -1: tau advances by Theta(w0)-Theta(0)
                    t_cur = seg.t1;
                    w_cur = 0.0;
                    dir = +1;
                } else {
                    // Falls through the numerical floor.
                    const double w_floor = std::sqrt(std::max(0.0, u_floor - u_star_));
                    const double dt = time_from_star(w_cur) - time_from_star(w_floor);
                    seg.t1 = t_cur + dt;
                    segments_.push_back(seg);
                    t_cur = seg.t1;
                    events_.push_back({t_cur, EventKind::BoundaryHit});
                    hit_floor_ = true;
                    stop_time_ = std::min(t_cur, horizon_);
                    trim_to_horizon();
                    return;
                }
            } else {
                const double dt = time_from_star(w_wall) - time_from_star(w_cur);
                seg.t1 = t_cur + dt;
                segments_.push_back(seg);
                tau_cur += theta_from_star(w_wall) - theta_from_star(w_cur);
                t_cur = seg.t1;
                if (t_cur < horizon_) events_.push_back({t_cur, EventKind::WallReflection});
                w_cur = w_wall;
                dir = -1;
            }
        }
        stop_time_ = horizon_;
        trim_to_horizon();
    }

    void trim_to_horizon() {
        while (segments_.size() > 1 && segments_[segments_.size() - 2].t1 >= stop_time_)
            segments_.pop_back();
        segments_.back().t1 = std::min(segments_.back().t1, stop_time_);
    }

    MetricSpec spec_;
    double horizon_;
    double tau0_, y1_, y2_;
    double p_ = 0.0;       // conserved angular momentum rho^2 dtau/dt
    double u_star_ = 0.0;  // turning radius in u
    std::vector<Segment> segments_;
    std::vector<TrajectoryEvent> events_;
    double stop_time_ = 0.0;
    bool hit_floor_ = false;
};

}  // namespace wpflow
