#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wpflow/boundary.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/parallel.hpp"

using namespace wpflow;

TEST_CASE("torus-only initial data follows a straight line") {
    MetricSpec spec;
    ManifoldPoint p{0.5, 0.3, 0.1, 0.9};
    PhasePoint v0{p, {0.0, 0.0, 0.6, 0.8}};
    IntegratorOptions opts;
    opts.sample_dt = 0.25;
    const Trajectory traj = integrate(v0, 4.0, spec, opts);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        CHECK(traj.states[i].point.x == Catch::Approx(0.5).margin(1e-12));
        CHECK(traj.states[i].point.tau == Catch::Approx(0.3).margin(1e-12));
        CHECK(traj.states[i].point.y1 == Catch::Approx(0.1 + 0.6 * t).margin(1e-10));
        CHECK(traj.states[i].point.y2 == Catch::Approx(0.9 + 0.8 * t).margin(1e-10));
    }
}

TEST_CASE("radial plunge has constant velocity and hits the floor") {
    MetricSpec spec;
    PhasePoint v0{{0.5, 0.1, 0.2, 0.3}, {-0.5, 0.0, 0.0, 0.0}};
    IntegratorOptions opts;
    opts.sample_dt = 0.1;
    const Trajectory traj = integrate(v0, 2.0, spec, opts);
    REQUIRE(traj.hit_floor);
    // unit speed forces 4 vx^2 = 1, so x(t) = 0.5 - t/2 until the floor.
    for (std::size_t i = 0; i + 1 < traj.times.size(); ++i)
        CHECK(traj.states[i].point.x ==
              Catch::Approx(0.5 - 0.5 * traj.times[i]).margin(1e-10));
    CHECK(traj.final_time == Catch::Approx(2.0 * (0.5 - spec.x_floor)).margin(1e-8));
    REQUIRE_FALSE(traj.events.empty());
    CHECK(traj.events.back().kind == EventKind::BoundaryHit);
    CHECK(traj.final_state.point.x == Catch::Approx(spec.x_floor).margin(1e-12));
}

TEST_CASE("clairaut momentum is a first integral of the product metric") {
    MetricSpec spec;
    for (int i = 0; i < 20; ++i) {
        Rng rng(derive_seed(21, "cl", i));
        ManifoldPoint p{rng.uniform(0.3, 0.95), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                        rng.uniform(0.0, 1.0)};
        const auto e = orthonormal_frame(p, spec);
        const double a = rng.uniform(0.0, 2 * std::numbers::pi);
        // generic cusp-plane + torus mixture, unit speed
        TangentVector v = e[0] * (0.8 * std::cos(a)) + e[1] * (0.8 * std::sin(a)) + e[2] * 0.6;
        PhasePoint v0{p, v};
        IntegratorOptions opts;
        opts.sample_dt = 0.5;
        const Trajectory traj = integrate(v0, 10.0, spec, opts);
        const double c0 = clairaut_momentum(traj.states.front());
        for (const auto& s : traj.states)
            CHECK(std::fabs(clairaut_momentum(s) - c0) < 1e-8);
    }
}

TEST_CASE("energy drift stays below 1e-8 per 10 time units") {
    for (const double eta : {0.0, 0.3}) {
        MetricSpec spec;
        spec.eta = eta;
        const std::size_t n = 200;
        std::vector<double> drift(n, 0.0);
        parallel_for(n, 2, [&](std::size_t i) {
            Rng rng(derive_seed(22, "en", i));
            const double lo4 = std::pow(0.15, 4.0);
            ManifoldPoint p{std::pow(lo4 + (1.0 - lo4) * rng.uniform(), 0.25),
                            rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            PhasePoint v0{p, detail::from_frame(p, spec, rng.sphere3())};
            IntegratorOptions opts;
            opts.record = false;
            const Trajectory traj = integrate(v0, 10.0, spec, opts);
            drift[i] = traj.stats.max_energy_drift;
        });
        for (double d : drift) CHECK(d < 1e-8);
    }
}

TEST_CASE("integration is time reversible") {
    MetricSpec spec;
    for (int i = 0; i < 20; ++i) {
        Rng rng(derive_seed(23, "rev", i));
        ManifoldPoint p{rng.uniform(0.3, 0.9), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                        rng.uniform(0.0, 1.0)};
        PhasePoint v0{p, detail::from_frame(p, spec, rng.sphere3())};
        IntegratorOptions opts;
        opts.record = false;
        const Trajectory fwd = integrate(v0, 3.0, spec, opts);
        if (fwd.hit_floor) continue;
        PhasePoint back = fwd.final_state;
        back.velocity = -back.velocity;
        const Trajectory rev = integrate(back, fwd.final_time, spec, opts);
        if (rev.hit_floor) continue;
        CHECK(std::fabs(rev.final_state.point.x - v0.point.x) < 1e-5);
        CHECK(std::fabs(rev.final_state.point.tau - v0.point.tau) < 1e-5);
        CHECK(std::fabs(rev.final_state.point.y1 - v0.point.y1) < 1e-5);
        CHECK(std::fabs(rev.final_state.velocity.vx + v0.velocity.vx) < 1e-5);
    }
}

TEST_CASE("wall reflection negates vx, preserves speed exactly and continues") {
    MetricSpec spec;
    ManifoldPoint p{0.9, 0.0, 0.5, 0.5};
    const auto e = orthonormal_frame(p, spec);
    PhasePoint v0{p, e[0]};  // outward radial
    IntegratorOptions opts;
    opts.sample_dt = 0.05;
    const Trajectory traj = integrate(v0, 1.0, spec, opts);

    REQUIRE_FALSE(traj.events.empty());
    const auto& ev = traj.events.front();
    CHECK(ev.kind == EventKind::WallReflection);
    // outward at speed 1/2 from x = 0.9: wall at t = 0.2
    CHECK(ev.t == Catch::Approx(0.2).margin(1e-9));
    CHECK(traj.stats.max_energy_drift < 1e-12);
    CHECK(traj.final_time == Catch::Approx(1.0));
    // after reflection the trajectory moves inward: x(1) = 1 - 0.8/2 = 0.6
    CHECK(traj.final_state.point.x == Catch::Approx(0.6).margin(1e-9));
    CHECK(traj.final_state.velocity.vx == Catch::Approx(-0.5).margin(1e-12));
}

TEST_CASE("threshold crossing is detected and can stop the flow") {
    MetricSpec spec;
    PhasePoint v0{{0.3, 0.0, 0.5, 0.5}, {0.5, 0.0, 0.0, 0.0}};
    IntegratorOptions opts;
    opts.record = false;
    opts.threshold_x = 0.4;
    opts.stop_at_threshold = true;
    const Trajectory traj = integrate(v0, 5.0, spec, opts);
    REQUIRE_FALSE(traj.events.empty());
    CHECK(traj.events.front().kind == EventKind::ThresholdCross);
    CHECK(traj.events.front().t == Catch::Approx(0.2).margin(1e-9));
    CHECK(traj.final_time == Catch::Approx(0.2).margin(1e-9));
}

TEST_CASE("integrator rejects bad inputs and reports step underflow") {
    MetricSpec spec;
    PhasePoint not_unit{{0.5, 0, 0, 0}, {1.0, 0.0, 0.0, 0.0}};  // speed 2
    CHECK_THROWS_AS(integrate(not_unit, 1.0, spec), std::invalid_argument);

    PhasePoint ok{{0.5, 0, 0, 0}, {0.5, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(integrate(ok, -1.0, spec), std::invalid_argument);

    IntegratorOptions opts;
    opts.rel_tol = 1e-300;  // unappeasable error control
    opts.abs_tol = 1e-300;
    try {
        integrate(ok, 1.0, spec, opts);
        FAIL("expected StepUnderflowError");
    } catch (const StepUnderflowError& e) {
        CHECK(e.last_state().point.x == Catch::Approx(0.5).margin(1e-3));
        CHECK(e.t() >= 0.0);
    }
}

TEST_CASE("closed-form rhs matches the christoffel contraction") {
    MetricSpec spec;
    spec.eta = 0.45;
    for (int i = 0; i < 50; ++i) {
        Rng rng(derive_seed(25, "rhs", i));
        const ManifoldPoint p{rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0),
                              rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const TangentVector v{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        detail::State8 s = detail::pack({p, v}), out;
        detail::geodesic_rhs(s, spec, out);
        const auto G = christoffel_at(p, spec);
        for (int k = 0; k < 4; ++k) {
            double acc = 0.0;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) acc -= G[k][a][b] * v[a] * v[b];
            CHECK(out[4 + k] == Catch::Approx(acc).margin(1e-12).epsilon(1e-10));
        }
    }
}
