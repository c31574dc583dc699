#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wpflow/correlation.hpp"
#include "wpflow/measure.hpp"
#include "wpflow/observables.hpp"

using namespace wpflow;

TEST_CASE("bump and plateau profiles") {
    CHECK(bump(0.0) == 1.0);
    CHECK(bump(1.0) == 0.0);
    CHECK(bump(-1.2) == 0.0);
    CHECK(bump(0.5) == Catch::Approx(std::exp(1.0 - 1.0 / 0.75)));

    CHECK(plateau(0.0, 0.25) == 1.0);
    CHECK(plateau(0.74, 0.25) == 1.0);
    CHECK(plateau(1.0, 0.25) == 0.0);
    CHECK(plateau(0.9, 0.25) > 0.0);
    CHECK(plateau(0.9, 0.25) < 1.0);

    // monotone smooth step
    double prev = -1.0;
    for (int i = 0; i <= 20; ++i) {
        const double v = smooth_step(i / 20.0);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("the compact bump a is a smoothed indicator of its ball") {
    MetricSpec spec;
    const BallSpec U{};
    const Observable a = build_a(U, spec);

    CHECK(a({U.center, {}}, spec) == 1.0);
    // outside the ball: zero
    ManifoldPoint far{0.2, 0.0, 0.0, 0.0};
    CHECK(U.distance(far, spec) > U.radius);
    CHECK(a({far, {}}, spec) == 0.0);

    // int a >= vol(U)/2, by Monte Carlo with a 3 sigma margin.
    const auto ia = integral_of(a, 60000, spec, 3);
    const auto volU = estimate_region_volume(RegionSpec::tube(U), 60000, spec, 4);
    const double se = std::hypot(ia.stderr_, 0.5 * volU.stderr_);
    CHECK(ia.value - 0.5 * volU.value > -3.0 * se);
    CHECK(ia.value / volU.value > 0.55);  // comfortably above the bound

    // a does not depend on any eps: its norm estimate is stable.
    const double n1 = estimate_ck_norm(a, 1, spec, 5, 400);
    const double n2 = estimate_ck_norm(a, 1, spec, 6, 400);
    CHECK(std::fabs(n1 - n2) < 0.05 * std::max(n1, n2));

    // systole guard: a ball dipping into the eps range is rejected
    BallSpec low;
    low.center.x = 0.2;
    low.radius = 0.25;
    CHECK_THROWS_AS(build_a(low, spec, 0.3), std::invalid_argument);
}

TEST_CASE("b_eps is supported in V_eps") {
    MetricSpec spec;
    const double eps = 0.08;
    const Observable b = build_b(eps, spec);
    for (int i = 0; i < 4000; ++i) {
        Rng rng(derive_seed(61, "bsup", i));
        const double x = rng.uniform(spec.x_floor * 2, 3.0 * eps / kSqrt2Pi2);
        ManifoldPoint p{x, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const PhasePoint v{p, detail::from_frame(p, spec, rng.sphere3())};
        const double val = b(v, spec);
        CHECK(val >= 0.0);
        CHECK(val <= 1.0);
        const auto bs = boundary_state(v, spec);
        if (bs.f > eps || bs.r > eps * eps) CHECK(val == 0.0);
    }
    CHECK_THROWS_AS(build_b(1e-7, spec), std::invalid_argument);
}

TEST_CASE("integral of b_eps scales like eps^8") {
    MetricSpec spec;
    std::vector<FitPoint> pts;
    for (const double eps : {0.2, 0.1, 0.05, 0.025}) {
        const Observable b = build_b(eps, spec);
        const auto ib = integral_of(b, 60000, spec, derive_seed(62, "intb", 0));
        CHECK(ib.value > 0.0);
        pts.push_back({eps, ib.value, ib.stderr_});
    }
    const auto fit = power_law_fit(pts);
    CHECK(fit.exponent == Catch::Approx(8.0).margin(0.2));
}

TEST_CASE("C^k norms scale like eps^(-2k)") {
    MetricSpec spec;
    std::vector<FitPoint> c1, c2;
    for (const double eps : {0.2, 0.1, 0.05, 0.025}) {
        const Observable b = build_b(eps, spec);
        // common random numbers across the sweep: scale-equivariant estimator
        c1.push_back({eps, estimate_ck_norm(b, 1, spec, derive_seed(63, "n1", 0), 250), 0.0});
        c2.push_back({eps, estimate_ck_norm(b, 2, spec, derive_seed(63, "n2", 0), 250), 0.0});
    }
    CHECK(power_law_fit(c1).exponent == Catch::Approx(-2.0).margin(0.2));
    CHECK(power_law_fit(c2).exponent == Catch::Approx(-4.0).margin(0.3));
}

TEST_CASE("ck norm of simple observables") {
    MetricSpec spec;
    const Observable c = Observable::constant(0.37);
    CHECK(estimate_ck_norm(c, 1, spec, 1, 100) == Catch::Approx(0.37));
    CHECK(estimate_ck_norm(c, 3, spec, 1, 100) == Catch::Approx(0.37));
    CHECK_THROWS_AS(estimate_ck_norm(c, 0, spec, 1, 10), std::invalid_argument);
    CHECK_THROWS_AS(estimate_ck_norm(c, 4, spec, 1, 10), std::invalid_argument);

    // C1 norm of a: of order 1/(width * radius), independent of eps scales.
    const Observable a = build_a(BallSpec{}, spec);
    const double n1 = estimate_ck_norm(a, 1, spec, 2, 400);
    CHECK(n1 > 1.0);
    CHECK(n1 < 1.0 / (0.25 * 0.3) * 10.0);
}

TEST_CASE("scale separation guard") {
    MetricSpec spec;
    const BallSpec U{};
    CHECK_NOTHROW(check_scale_separation(U, 0.1, spec));
    CHECK_THROWS_AS(check_scale_separation(U, 1.1, spec), std::invalid_argument);
}
