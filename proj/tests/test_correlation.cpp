#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wpflow/correlation.hpp"

using namespace wpflow;

TEST_CASE("correlation at time zero is the variance identity") {
    MetricSpec spec;
    const BallSpec U{};
    const Observable a = build_a(U, spec);
    const std::size_t n = 20000;

    const auto est = correlation(a, a, 0.0, n, spec, 404, 2);
    CHECK(est.value >= 0.0);  // int a^2 - (int a)^2
    CHECK(est.n == n);
    CHECK(est.failures == 0);

    // bitwise identity with the direct same-stream estimate
    const auto samples = liouville_sample_all(n, spec, 404, "corr");
    double sa = 0, sab = 0;
    for (const auto& v : samples) {
        const double va = a(v, spec);
        sa += va;
        sab += va * va;
    }
    CHECK(est.value == sab / n - (sa / n) * (sa / n));
    CHECK(est.int_a == sa / n);
}

TEST_CASE("disjoint supports at time zero give minus the product of means") {
    MetricSpec spec;
    BallSpec u1, u2;
    u1.center.x = 0.45;
    u1.radius = 0.15;
    u2.center.x = 0.85;
    u2.radius = 0.15;
    const Observable a1 = Observable::ball_bump(u1);
    const Observable a2 = Observable::ball_bump(u2);

    const auto est = correlation(a1, a2, 0.0, 30000, spec, 405, 2);
    // supports are disjoint in x, so a1 * a2 = 0 pointwise and the estimator
    // collapses to -(mean a1)(mean a2) exactly.
    CHECK(est.value == -est.int_a * est.int_b);
    CHECK(est.int_a > 0.0);
    CHECK(est.int_b > 0.0);
}

TEST_CASE("correlation estimates are deterministic across worker counts") {
    MetricSpec spec;
    const BallSpec U{};
    const Observable a = build_a(U, spec);
    const auto e1 = correlation(a, a, 1.0, 2000, spec, 406, 1);
    const auto e2 = correlation(a, a, 1.0, 2000, spec, 406, 2);
    CHECK(e1.value == e2.value);
    CHECK(e1.stderr_ == e2.stderr_);
}

TEST_CASE("nonmixing certificate holds inside the protected window") {
    MetricSpec spec;
    const BallSpec U{};
    const double eps = 0.05;
    const auto rep = nonmixing_certificate(U, eps, 3000, 1.2, spec, 407, 2);
    CHECK(rep.pass);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ab == 0.0);
    CHECK(rep.window == Catch::Approx(1.0 / (1.2 * eps)));

    // Far beyond the window the claim is out of warranty; the run must
    // complete and report, whatever the count.
    const auto far = nonmixing_certificate(U, eps, 300, 1.2, spec, 408, 2, 10.0);
    CHECK(far.n == 300);
    CHECK(far.window == Catch::Approx(10.0 / (1.2 * eps)));

    CHECK_THROWS_AS(nonmixing_certificate(U, 1.2, 10, 1.0, spec, 1, 1), std::invalid_argument);
}

TEST_CASE("gamma bound reproduces 8 + 2k") {
    MetricSpec spec;
    const BallSpec U{};
    const std::vector<double> eps = {0.1, 0.05, 0.025, 0.0125};

    const auto rep = gamma_upper_bound(eps, 1, 20000, U, 1.2, spec, 409, 2, 600);
    REQUIRE(rep.status == GammaStatus::Bound);
    CHECK(rep.gamma.exponent == Catch::Approx(10.0).margin(0.5));
    CHECK(rep.slope_m.exponent == Catch::Approx(8.0).margin(0.3));
    CHECK(rep.slope_N.exponent == Catch::Approx(-2.0).margin(0.3));
    CHECK(rep.slope_T == -1.0);
    for (const auto& row : rep.rows) {
        CHECK(row.certified);
        CHECK(row.implied_gamma > rep.gamma.exponent);  // finite-eps bounds are weaker
    }

    const auto rep2 = gamma_upper_bound(eps, 2, 20000, U, 1.2, spec, 409, 2, 600);
    REQUIRE(rep2.status == GammaStatus::Bound);
    CHECK(rep2.gamma.exponent == Catch::Approx(12.0).margin(0.6));

    CHECK_THROWS_AS(gamma_upper_bound({0.1, 0.05}, 1, 100, U, 1.0, spec, 1, 1),
                    std::invalid_argument);
}

TEST_CASE("fixed-scale control observable yields no obstruction") {
    MetricSpec spec;
    const BallSpec U{};
    BallSpec other;
    other.center.x = 0.45;
    other.center.tau = 0.1;
    other.radius = 0.15;
    const Observable control = Observable::ball_bump(other);

    const std::vector<double> eps = {0.1, 0.05, 0.025, 0.0125};
    const auto rep = gamma_upper_bound(eps, 1, 5000, U, 1.2, spec, 410, 2, 300, &control);
    CHECK(rep.status == GammaStatus::NoObstruction);
    // m and N are eps-independent for the control
    CHECK(std::fabs(rep.slope_m.exponent) < 0.5);
    CHECK(std::fabs(rep.slope_N.exponent) < 0.5);
}

TEST_CASE("liouville mean is flow invariant at the estimator level") {
    MetricSpec spec;
    const std::size_t n = 4000;
    const auto samples = liouville_sample_all(n, spec, 411);
    auto c_fn = [](const PhasePoint& v) {
        return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * v.point.tau));
    };
    double before = 0.0, after = 0.0, after2 = 0.0;
    std::size_t m = 0;
    for (const auto& v : samples) {
        IntegratorOptions opts;
        opts.record = false;
        const Trajectory traj = integrate(v, 2.0, spec, opts);
        if (traj.hit_floor) continue;
        before += c_fn(v);
        const double cafter = c_fn(traj.final_state);
        after += cafter;
        after2 += cafter * cafter;
        ++m;
    }
    const double mb = before / m, ma = after / m;
    const double sd = std::sqrt((after2 / m - ma * ma) / m);
    CHECK(std::fabs(ma - mb) < 3.0 * sd);
}
