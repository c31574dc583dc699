#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wpflow/metric.hpp"
#include "wpflow/rng.hpp"

using namespace wpflow;

namespace {

// Finite-difference Riemann tensor built only from christoffel_at, as an
// independent route to the curvature.
double riemann_vwvw_fd(const ManifoldPoint& p, const MetricSpec& spec, const TangentVector& v,
                       const TangentVector& w, double h) {
    auto dGamma = [&](int m, int k, int i, int j) {
        ManifoldPoint pp = p, pm = p;
        if (m == 0) { pp.x += h; pm.x -= h; }
        if (m == 1) { pp.tau += h; pm.tau -= h; }
        if (m == 2) { pp.y1 += h; pm.y1 -= h; }
        if (m == 3) { pp.y2 += h; pm.y2 -= h; }
        return (christoffel_at(pp, spec)[k][i][j] - christoffel_at(pm, spec)[k][i][j]) /
               (2.0 * h);
    };
    const auto G = christoffel_at(p, spec);
    const auto gd = metric_diag(p, spec);
    double total = 0.0;
    for (int k = 0; k < 4; ++k)
        for (int s = 0; s < 4; ++s)
            for (int m = 0; m < 4; ++m)
                for (int n = 0; n < 4; ++n) {
                    double r = dGamma(m, k, n, s) - dGamma(n, k, m, s);
                    for (int hh = 0; hh < 4; ++hh)
                        r += G[k][m][hh] * G[hh][n][s] - G[k][n][hh] * G[hh][m][s];
                    total += gd[k] * r * v[k] * w[s] * v[m] * w[n];
                }
    return total;
}

}  // namespace

TEST_CASE("metric spec validation") {
    MetricSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.x_floor = 2.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = MetricSpec{};
    spec.eta = 1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = MetricSpec{};
    spec.eta = 0.5;
    spec.x_max = 1.5;  // eta * x_max^4 > 1
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("metric tensor block values") {
    MetricSpec spec;
    const Mat4 g1 = metric_at({1.0, 0.0, 0.0, 0.0}, spec);
    CHECK(g1[0][0] == 4.0);
    CHECK(g1[1][1] == 1.0);
    CHECK(g1[2][2] == 1.0);
    CHECK(g1[3][3] == 1.0);

    const Mat4 g2 = metric_at({0.5, 0.0, 0.0, 0.0}, spec);
    CHECK(g2[1][1] == Catch::Approx(0.015625).epsilon(1e-15));

    MetricSpec coupled = spec;
    coupled.eta = 0.5;
    const Mat4 g3 = metric_at({0.5, 0.0, 0.0, 0.0}, coupled);
    CHECK(g3[2][2] == Catch::Approx(1.03125).epsilon(1e-15));
    CHECK(g3[3][3] == Catch::Approx(1.03125).epsilon(1e-15));
    CHECK(g3[0][0] == 4.0);

    CHECK_THROWS_AS(metric_at({2.0, 0, 0, 0}, spec), std::domain_error);
    CHECK_THROWS_AS(metric_at({1e-9, 0, 0, 0}, spec), std::domain_error);
}

TEST_CASE("christoffel closed-form values") {
    MetricSpec spec;
    const auto g1 = christoffel_at({1.0, 0.1, 0.2, 0.3}, spec);
    CHECK(g1[1][0][1] == Catch::Approx(3.0));
    CHECK(g1[0][1][1] == Catch::Approx(-0.75));

    const auto g05 = christoffel_at({0.5, 0.1, 0.2, 0.3}, spec);
    CHECK(g05[1][0][1] == Catch::Approx(6.0));
    CHECK(g05[0][1][1] == Catch::Approx(-0.0234375));

    // Flat product factor: every torus symbol vanishes when eta = 0.
    for (int k = 2; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(g05[k][i][j] == 0.0);
}

TEST_CASE("christoffel symbols agree with metric finite differences") {
    // The independent oracle for the analytic symbols: Gamma from central
    // differences of metric_at with step 1e-5.
    for (const double eta : {0.0, 0.3}) {
        MetricSpec spec;
        spec.eta = eta;
        double worst = 0.0;
        for (int i = 0; i < 60; ++i) {
            Rng rng(derive_seed(2024, "chfd", i + 100 * static_cast<int>(10 * eta)));
            const ManifoldPoint p{rng.uniform(0.05, 0.999), rng.uniform(0.0, 1.0),
                                  rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            const auto ga = christoffel_at(p, spec);

            const double h = 1e-5;
            std::array<Mat4, 4> dg{};
            for (int m = 0; m < 4; ++m) {
                ManifoldPoint pp = p, pm = p;
                if (m == 0) { pp.x += h; pm.x -= h; }
                if (m == 1) { pp.tau += h; pm.tau -= h; }
                if (m == 2) { pp.y1 += h; pm.y1 -= h; }
                if (m == 3) { pp.y2 += h; pm.y2 -= h; }
                const Mat4 gp = metric_at(pp, spec), gm = metric_at(pm, spec);
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) dg[m][a][b] = (gp[a][b] - gm[a][b]) / (2 * h);
            }
            const Mat4 ginv = metric_inverse_at(p, spec);
            for (int k = 0; k < 4; ++k)
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        double acc = 0.0;
                        for (int l = 0; l < 4; ++l)
                            acc += ginv[k][l] * (dg[a][b][l] + dg[b][a][l] - dg[l][a][b]);
                        const double fd = 0.5 * acc;
                        worst = std::max(worst, std::fabs(ga[k][a][b] - fd) /
                                                    std::max(1.0, std::fabs(ga[k][a][b])));
                    }
        }
        INFO("eta = " << eta);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("cusp-plane sectional curvature") {
    MetricSpec spec;
    const TangentVector ex{1, 0, 0, 0}, etau{0, 1, 0, 0}, ey1{0, 0, 1, 0}, ey2{0, 0, 0, 1};

    CHECK(sectional_curvature({1.0, 0, 0, 0}, ex, etau, spec) == Catch::Approx(-1.5).epsilon(1e-9));
    CHECK(sectional_curvature({0.1, 0, 0, 0}, ex, etau, spec) ==
          Catch::Approx(-150.0).epsilon(1e-9));
    CHECK(sectional_curvature({0.3, 0, 0, 0}, ey1, ey2, spec) == Catch::Approx(0.0).margin(1e-12));

    // K * x^2 = -3/2 across the range.
    for (int i = 0; i < 100; ++i) {
        const double x = 0.05 + 0.95 * i / 99.0;
        const double K = sectional_curvature({x, 0.5, 0.5, 0.5}, ex, etau, spec);
        CHECK(std::fabs(K * x * x + 1.5) < 1.5e-6);
    }

    // Cross-check against a finite-difference Riemann tensor, including the
    // coupled metric.
    for (const double eta : {0.0, 0.3}) {
        MetricSpec s;
        s.eta = eta;
        for (int i = 0; i < 10; ++i) {
            Rng rng(derive_seed(7, "riemfd", i));
            const ManifoldPoint p{rng.uniform(0.2, 0.9), rng.uniform(0.0, 1.0),
                                  rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            TangentVector v{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            TangentVector w{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
            const double exact = riemann_vwvw(p, s, v, w);
            const double fd = riemann_vwvw_fd(p, s, v, w, 1e-5);
            CHECK(std::fabs(exact - fd) < 1e-5 * std::max(1.0, std::fabs(exact)));
        }
    }

    CHECK_THROWS_AS(sectional_curvature({0.5, 0, 0, 0}, ex, ex * 2.0, spec),
                    std::invalid_argument);
}

TEST_CASE("gradient of the root length function") {
    MetricSpec spec;
    const ManifoldPoint p{0.37, 0.1, 0.9, 0.4};
    const TangentVector lambda = grad_sqrt_length(p, spec);
    CHECK(lambda.vx == Catch::Approx(kSqrt2Pi2 / 4.0).epsilon(1e-15));
    CHECK(lambda.vtau == 0.0);
    CHECK(lambda.vy1 == 0.0);

    // |lambda|^2 = pi^2 / 2, constant across the chart (also for eta > 0).
    MetricSpec coupled = spec;
    coupled.eta = 0.4;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < 500; ++i) {
        Rng rng(derive_seed(11, "lam", i));
        const ManifoldPoint q{rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0),
                              rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const double n2 = inner(q, coupled, grad_sqrt_length(q, coupled),
                                grad_sqrt_length(q, coupled));
        CHECK(std::fabs(n2 - 0.5 * std::numbers::pi * std::numbers::pi) < 1e-12);
        const double nl = std::sqrt(n2);
        const double delta = nl - mean;
        mean += delta / (i + 1);
        m2 += delta * (nl - mean);
    }
    CHECK(std::sqrt(m2 / 499.0) < 1e-10);
}

TEST_CASE("complex structure rotates the orthonormal frame") {
    MetricSpec spec;
    const ManifoldPoint p{0.42, 0.3, 0.1, 0.8};
    const TangentVector lambda = grad_sqrt_length(p, spec);
    const TangentVector jl = apply_complex_structure(p, spec, lambda);

    CHECK(norm(p, spec, jl) == Catch::Approx(norm(p, spec, lambda)).epsilon(1e-14));
    CHECK(std::fabs(inner(p, spec, lambda, jl)) < 1e-14);

    // J^2 = -Id and isometry on random cusp-plane vectors.
    for (int i = 0; i < 200; ++i) {
        Rng rng(derive_seed(12, "J", i));
        const ManifoldPoint q{rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0),
                              rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const TangentVector v{rng.normal(), rng.normal(), 0, 0};
        const TangentVector w{rng.normal(), rng.normal(), 0, 0};
        const auto jv = apply_complex_structure(q, spec, v);
        const auto jjv = apply_complex_structure(q, spec, jv);
        CHECK(std::fabs(jjv.vx + v.vx) < 1e-12 * std::max(1.0, std::fabs(v.vx)));
        CHECK(std::fabs(jjv.vtau + v.vtau) < 1e-12 * std::max(1.0, std::fabs(v.vtau)));
        const auto jw = apply_complex_structure(q, spec, w);
        const double lhs = inner(q, spec, jv, jw), rhs = inner(q, spec, v, w);
        CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(rhs)));
    }
}

TEST_CASE("metric is positive definite under coupling") {
    for (const double eta : {0.0, 0.5, 0.9}) {
        MetricSpec spec;
        spec.eta = eta;
        double min_diag = 1e300;
        for (int i = 0; i < 10000; ++i) {
            Rng rng(derive_seed(13, "pd", i));
            const ManifoldPoint p{rng.uniform(spec.x_floor, spec.x_max), rng.uniform(0.0, 1.0),
                                  rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            for (double d : metric_diag(p, spec)) min_diag = std::min(min_diag, d);
        }
        INFO("eta = " << eta);
        CHECK(min_diag > 0.0);
    }
}

TEST_CASE("point reduction wraps periodic coordinates") {
    MetricSpec spec;
    spec.tau_period = 2.0;
    const ManifoldPoint p{0.5, -0.5, 1.25, 3.5};
    const ManifoldPoint q = p.reduced(spec);
    CHECK(q.tau == Catch::Approx(1.5));
    CHECK(q.y1 == Catch::Approx(0.25));
    CHECK(q.y2 == Catch::Approx(0.5));
    CHECK(q.x == p.x);
}
