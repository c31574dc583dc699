#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "wpflow/boundary.hpp"
#include "wpflow/correlation.hpp"
#include "wpflow/cusp_oracle.hpp"
#include "wpflow/fit.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/measure.hpp"
#include "wpflow/metric.hpp"
#include "wpflow/observables.hpp"
#include "wpflow/parallel.hpp"

namespace wpflow {

struct CheckResult {
    std::string name;
    bool pass = false;
    double metric_value = 0.0;  // the number the check gates on
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

namespace validate_detail {

inline PhasePoint random_unit_point(Rng& rng, const MetricSpec& spec, double x_lo, double x_hi) {
    const double lo4 = x_lo * x_lo * x_lo * x_lo;
    const double hi4 = x_hi * x_hi * x_hi * x_hi;
    ManifoldPoint p{std::pow(lo4 + (hi4 - lo4) * rng.uniform(), 0.25),
                    rng.uniform(0.0, spec.tau_period), rng.uniform(0.0, spec.torus_sides[0]),
                    rng.uniform(0.0, spec.torus_sides[1])};
    return {p, detail::from_frame(p, spec, rng.sphere3())};
}

/// Central finite differences of the metric, the oracle for the analytic
/// Christoffel symbols.
inline Christoffel christoffel_fd(const ManifoldPoint& p, const MetricSpec& spec, double h) {
    std::array<Mat4, 4> dg{};
    for (int m = 0; m < 4; ++m) {
        ManifoldPoint pp = p, pm = p;
        if (m == 0) { pp.x += h; pm.x -= h; }
        if (m == 1) { pp.tau += h; pm.tau -= h; }
        if (m == 2) { pp.y1 += h; pm.y1 -= h; }
        if (m == 3) { pp.y2 += h; pm.y2 -= h; }
        const Mat4 gp = metric_at(pp, spec);
        const Mat4 gm = metric_at(pm, spec);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) dg[m][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
    }
    const Mat4 ginv = metric_inverse_at(p, spec);
    Christoffel G{};
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (int l = 0; l < 4; ++l)
                    acc += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                G[k][i][j] = 0.5 * acc;
            }
    return G;
}

}  // namespace validate_detail

/// Quick invariant suite covering every module; used by the `validate`
/// subcommand. Deterministic given (seed, spec defaults).
inline std::vector<CheckResult> run_validation_suite(std::uint64_t seed, unsigned workers = 0) {
    if (workers == 0) workers = default_workers();
    std::vector<CheckResult> results;

    auto run = [&](const std::string& name, auto&& body) {
        CheckResult r;
        r.name = name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(r);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results.push_back(r);
    };

    MetricSpec flat;            // eta = 0
    MetricSpec coupled = flat;
    coupled.eta = 0.3;

    run("christoffel_matches_metric_differences", [&](CheckResult& r) {
        double worst = 0.0;
        for (const double eta : {0.0, 0.3}) {
            MetricSpec s = flat;
            s.eta = eta;
            for (int i = 0; i < 40; ++i) {
                Rng rng = Rng::derive(seed, "chfd" + std::to_string(eta), i);
                ManifoldPoint p{rng.uniform(0.05, 1.0) * s.x_max * 0.999,
                                rng.uniform(0.0, s.tau_period), rng.uniform(0.0, s.torus_sides[0]),
                                rng.uniform(0.0, s.torus_sides[1])};
                if (p.x < 0.05) p.x = 0.05;
                const auto Ga = christoffel_at(p, s);
                const auto Gf = validate_detail::christoffel_fd(p, s, 1e-5);
                for (int k = 0; k < 4; ++k)
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b) {
                            const double scale = std::max(1.0, std::fabs(Ga[k][a][b]));
                            worst = std::max(worst, std::fabs(Ga[k][a][b] - Gf[k][a][b]) / scale);
                        }
            }
        }
        r.metric_value = worst;
        r.threshold = 1e-6;
        r.pass = worst < r.threshold;
    });

    run("cusp_curvature_times_x2_is_minus_1_5", [&](CheckResult& r) {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double x = 0.05 + (1.0 - 0.05) * i / 99.0;
            ManifoldPoint p{std::min(x, flat.x_max), 0.2, 0.3, 0.4};
            const double K =
                sectional_curvature(p, {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, flat);
            worst = std::max(worst, std::fabs(K * x * x + 1.5) / 1.5);
        }
        r.metric_value = worst;
        r.threshold = 1e-6;
        r.pass = worst < r.threshold;
    });

    run("metric_positive_definite", [&](CheckResult& r) {
        double min_eig = std::numeric_limits<double>::infinity();
        for (const double eta : {0.0, 0.5, 0.9}) {
            MetricSpec s = flat;
            s.eta = eta;
            for (int i = 0; i < 10000; ++i) {
                Rng rng = Rng::derive(seed, "posdef" + std::to_string(eta), i);
                ManifoldPoint p{rng.uniform(s.x_floor, s.x_max), rng.uniform(0.0, s.tau_period),
                                rng.uniform(0.0, s.torus_sides[0]),
                                rng.uniform(0.0, s.torus_sides[1])};
                for (double d : metric_diag(p, s)) min_eig = std::min(min_eig, d);
            }
        }
        r.metric_value = min_eig;
        r.threshold = 0.0;
        r.pass = min_eig > 0.0;
        r.detail = "smallest metric eigenvalue over 3x10^4 points";
    });

    run("lambda_norm_constant", [&](CheckResult& r) {
        double mean = 0.0, m2 = 0.0;
        const int n = 2000;
        for (int i = 0; i < n; ++i) {
            Rng rng = Rng::derive(seed, "lnorm", i);
            ManifoldPoint p{rng.uniform(0.05, flat.x_max), rng.uniform(0.0, 1.0),
                            rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            const double nl = norm(p, flat, grad_sqrt_length(p, flat));
            const double delta = nl - mean;
            mean += delta / (i + 1);
            m2 += delta * (nl - mean);
        }
        const double sd = std::sqrt(m2 / (n - 1));
        r.metric_value = sd;
        r.threshold = 1e-10;
        r.pass = sd < r.threshold && std::fabs(mean - kLambdaNorm) < 1e-12;
    });

    run("complex_structure_isometry", [&](CheckResult& r) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            Rng rng = Rng::derive(seed, "jstruct", i);
            ManifoldPoint p{rng.uniform(0.05, flat.x_max), rng.uniform(0.0, 1.0),
                            rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            TangentVector v{rng.normal(), rng.normal(), 0.0, 0.0};
            TangentVector w{rng.normal(), rng.normal(), 0.0, 0.0};
            const auto jv = apply_complex_structure(p, flat, v);
            const auto jw = apply_complex_structure(p, flat, w);
            const auto jjv = apply_complex_structure(p, flat, jv);
            worst = std::max(worst, std::fabs(jjv.vx + v.vx));
            worst = std::max(worst, std::fabs(jjv.vtau + v.vtau));
            worst = std::max(worst,
                             std::fabs(inner(p, flat, jv, jw) - inner(p, flat, v, w)) /
                                 std::max(1.0, std::fabs(inner(p, flat, v, w))));
        }
        r.metric_value = worst;
        r.threshold = 1e-12;
        r.pass = worst < r.threshold;
    });

    run("energy_conservation_10_units", [&](CheckResult& r) {
        double worst = 0.0;
        for (const double eta : {0.0, 0.3}) {
            MetricSpec s = flat;
            s.eta = eta;
            const std::size_t n = 1000;
            std::vector<double> drift(n, 0.0);
            parallel_for(n, workers, [&](std::size_t i) {
                Rng rng = Rng::derive(seed, "energy" + std::to_string(eta), i);
                PhasePoint v0 = validate_detail::random_unit_point(rng, s, 0.15, s.x_max);
                IntegratorOptions opts;
                opts.record = false;
                try {
                    const Trajectory traj = integrate(v0, 10.0, s, opts);
                    const double scale = std::max(traj.final_time, 1e-3) / 10.0;
                    drift[i] = traj.stats.max_energy_drift / std::max(scale, 1.0);
                } catch (const StepUnderflowError&) {
                    drift[i] = 0.0;
                }
            });
            for (double d : drift) worst = std::max(worst, d);
        }
        r.metric_value = worst;
        r.threshold = 1e-8;
        r.pass = worst < r.threshold;
        r.detail = "max |speed - 1| per 10 time units, 2x1000 trajectories";
    });

    run("clairaut_momentum_conserved", [&](CheckResult& r) {
        double worst = 0.0;
        const std::size_t n = 200;
        std::vector<double> drift(n, 0.0);
        parallel_for(n, workers, [&](std::size_t i) {
            Rng rng = Rng::derive(seed, "clairaut", i);
            PhasePoint v0 = validate_detail::random_unit_point(rng, flat, 0.2, flat.x_max);
            IntegratorOptions opts;
            opts.sample_dt = 0.5;
            const Trajectory traj = integrate(v0, 10.0, flat, opts);
            const double p0 = clairaut_momentum(traj.states.front());
            for (const auto& s : traj.states)
                drift[i] = std::max(drift[i], std::fabs(clairaut_momentum(s) - p0));
        });
        for (double d : drift) worst = std::max(worst, d);
        r.metric_value = worst;
        r.threshold = 1e-8;
        r.pass = worst < r.threshold;
    });

    run("time_reversibility", [&](CheckResult& r) {
        double worst = 0.0;
        const std::size_t n = 50;
        std::vector<double> err(n, 0.0);
        parallel_for(n, workers, [&](std::size_t i) {
            Rng rng = Rng::derive(seed, "reverse", i);
            PhasePoint v0 = validate_detail::random_unit_point(rng, flat, 0.25, flat.x_max);
            IntegratorOptions opts;
            opts.record = false;
            const Trajectory fwd = integrate(v0, 3.0, flat, opts);
            if (fwd.hit_floor) return;
            PhasePoint back = fwd.final_state;
            back.velocity = -back.velocity;
            const Trajectory rev = integrate(back, fwd.final_time, flat, opts);
            if (rev.hit_floor) return;
            const auto& f = rev.final_state;
            err[i] = std::max({std::fabs(f.point.x - v0.point.x),
                               std::fabs(f.point.tau - v0.point.tau),
                               std::fabs(f.point.y1 - v0.point.y1),
                               std::fabs(f.point.y2 - v0.point.y2),
                               std::fabs(f.velocity.vx + v0.velocity.vx),
                               std::fabs(f.velocity.vtau + v0.velocity.vtau)});
        });
        for (double e : err) worst = std::max(worst, e);
        r.metric_value = worst;
        r.threshold = 1e-5;
        r.pass = worst < r.threshold;
    });

    run("quadrature_oracle_agreement", [&](CheckResult& r) {
        double worst = 0.0;
        const std::size_t n = 20;
        std::vector<double> err(n, 0.0);
        MetricSpec wide = flat;
        wide.x_max = 4.0;  // keep the horizon wall-free
        parallel_for(n, workers, [&](std::size_t i) {
            Rng rng = Rng::derive(seed, "oracle", i);
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi_v<double>);
            ManifoldPoint p{rng.uniform(0.3, 0.9), rng.uniform(0.0, 1.0), 0.5, 0.5};
            const auto e = orthonormal_frame(p, wide);
            PhasePoint v0{p, e[0] * std::cos(angle) + e[1] * std::sin(angle)};
            const CuspGeodesicOracle oracle(v0, 5.0, wide);
            IntegratorOptions opts;
            opts.sample_dt = 0.5;
            const Trajectory traj = integrate(v0, std::min(5.0, oracle.stop_time()), wide, opts);
            if (traj.hit_floor) return;
            for (std::size_t j = 0; j < traj.times.size(); ++j) {
                const PhasePoint ref = oracle.state_at(traj.times[j]);
                err[i] = std::max({err[i], std::fabs(traj.states[j].point.x - ref.point.x),
                                   std::fabs(traj.states[j].point.tau - ref.point.tau)});
            }
        });
        for (double e : err) worst = std::max(worst, e);
        r.metric_value = worst;
        r.threshold = 1e-6;
        r.pass = worst < r.threshold;
    });

    run("wall_reflection_preserves_speed", [&](CheckResult& r) {
        ManifoldPoint p{0.9, 0.1, 0.2, 0.3};
        const auto e = orthonormal_frame(p, flat);
        PhasePoint v0{p, e[0]};  // radially outward, hits the wall
        const Trajectory traj = integrate(v0, 1.0, flat);
        bool reflected = false;
        for (const auto& ev : traj.events)
            reflected |= (ev.kind == EventKind::WallReflection);
        r.metric_value = traj.stats.max_energy_drift;
        r.threshold = 1e-10;
        r.pass = reflected && traj.stats.max_energy_drift < r.threshold;
        r.detail = reflected ? "wall hit and reflected" : "no reflection event";
    });

    run("v_eps_membership_and_symmetry", [&](CheckResult& r) {
        const double eps = 0.05;
        const auto samples = sample_V_eps(eps, 2000, flat, seed);
        double worst_f = 0.0, worst_r = 0.0, worst_sym = 0.0, worst_speed = 0.0;
        for (const auto& v : samples) {
            const auto bs = boundary_state(v, flat);
            worst_f = std::max(worst_f, bs.f - eps);
            worst_r = std::max(worst_r, bs.r - eps * eps);
            PhasePoint neg = v;
            neg.velocity = -neg.velocity;
            const auto bs2 = boundary_state(neg, flat);
            worst_sym = std::max(worst_sym, std::fabs(bs2.r - bs.r) + std::fabs(bs2.f - bs.f));
            worst_speed = std::max(worst_speed, std::fabs(speed(v, flat) - 1.0));
        }
        r.metric_value = std::max({worst_f, worst_r, worst_sym, worst_speed});
        r.threshold = 1e-12;
        r.pass = r.metric_value < r.threshold;
    });

    run("f_prime_equals_projection_and_bounded_by_r", [&](CheckResult& r) {
        double worst_identity = 0.0, worst_bound = 0.0;
        for (int i = 0; i < 20; ++i) {
            Rng rng = Rng::derive(seed, "fprime", i);
            PhasePoint v0 = validate_detail::random_unit_point(rng, coupled, 0.3, 0.9);
            IntegratorOptions opts;
            opts.sample_dt = 0.01;
            const Trajectory traj = integrate(v0, 2.0, coupled, opts);
            if (traj.hit_floor || traj.states.size() < 9) continue;
            std::vector<double> fs(traj.states.size());
            for (std::size_t j = 0; j < traj.states.size(); ++j)
                fs[j] = boundary_state(traj.states[j], coupled).f;
            for (std::size_t j = 2; j + 2 < traj.states.size() - 1; ++j) {
                const double fd =
                    (-fs[j + 2] + 8.0 * fs[j + 1] - 8.0 * fs[j - 1] + fs[j - 2]) / (12.0 * 0.01);
                const auto& s = traj.states[j];
                const double proj =
                    inner(s.point, coupled, s.velocity, grad_sqrt_length(s.point, coupled));
                const double rr = boundary_state(s, coupled).r;
                worst_identity = std::max(worst_identity, std::fabs(fd - proj));
                worst_bound = std::max(worst_bound, std::fabs(proj) - rr);
            }
        }
        r.metric_value = std::max(worst_identity, worst_bound);
        r.threshold = 1e-6;
        r.pass = worst_identity < 1e-6 && worst_bound < 1e-12;
        r.detail = "chain-rule identity to 1e-6; |<v,lambda>| <= r to 1e-12";
    });

    run("drift_vanishes_for_product_metric", [&](CheckResult& r) {
        DriftOptions opt;
        opt.bins = 6;
        opt.per_bin = 20;
        const auto res = drift_experiment(flat, seed, workers, opt);
        r.metric_value = res.max_abs_rprime;
        r.threshold = 1e-10;
        r.pass = res.degenerate && res.max_abs_rprime < r.threshold;
    });

    run("gradient_expansion_structure", [&](CheckResult& r) {
        const auto rep = gradient_expansion_check(200, flat, seed);
        const double cstar_err = std::fabs(rep.cstar - 3.0);
        r.metric_value = std::max({rep.max_orthogonal, cstar_err, rep.cstar_spread,
                                   std::fabs(rep.slope_norm_vs_invf - 1.0)});
        r.threshold = 1e-6;
        r.pass = r.metric_value < r.threshold;
        std::ostringstream ss;
        ss << "cstar = " << rep.cstar << " (reference 3/(2 pi) = " << rep.reference_constant
           << ")";
        r.detail = ss.str();
    });

    run("volume_estimator_unbiased_on_e_rho", [&](CheckResult& r) {
        double worst_sigma = 0.0;
        for (const double rho : {0.4, 0.2, 0.1, 0.05}) {
            const auto est = estimate_region_volume(RegionSpec::e_rho(rho), 40000, flat,
                                                    derive_seed(seed, "vunb", int(rho * 1000)));
            const double x_hi = flat.x_of_f(rho);
            const double exact = std::pow(x_hi / flat.x_max, 4.0);
            worst_sigma = std::max(worst_sigma, std::fabs(est.value - exact) / est.stderr_);
        }
        r.metric_value = worst_sigma;
        r.threshold = 3.0;
        r.pass = worst_sigma < r.threshold;
        r.detail = "max |MC - closed form| in stderr units over 4 radii";
    });

    run("sampler_deterministic", [&](CheckResult& r) {
        const auto s1 = sample_V_eps(0.05, 500, flat, seed);
        const auto s2 = sample_V_eps(0.05, 500, flat, seed);
        const auto l1 = liouville_sample_all(500, flat, seed);
        const auto l2 = liouville_sample_all(500, flat, seed);
        bool same = true;
        for (std::size_t i = 0; i < s1.size(); ++i) {
            same = same && s1[i].point.x == s2[i].point.x &&
                   s1[i].velocity.vtau == s2[i].velocity.vtau;
            same = same && l1[i].point.x == l2[i].point.x &&
                   l1[i].velocity.vy2 == l2[i].velocity.vy2;
        }
        r.metric_value = same ? 0.0 : 1.0;
        r.threshold = 0.5;
        r.pass = same;
    });

    run("power_law_fit_exact_data", [&](CheckResult& r) {
        std::vector<FitPoint> quartic, constant;
        for (const double x : {0.1, 0.2, 0.4, 0.8, 1.6}) {
            quartic.push_back({x, x * x * x * x, 0.0});
            constant.push_back({x, 7.0, 0.0});
        }
        const auto f1 = power_law_fit(quartic);
        const auto f2 = power_law_fit(constant);
        r.metric_value = std::max(std::fabs(f1.exponent - 4.0), std::fabs(f2.exponent));
        r.threshold = 1e-12;
        r.pass = r.metric_value < r.threshold && (f1.ci_high - f1.ci_low) < 1e-12;
    });

    run("observable_range_and_support", [&](CheckResult& r) {
        const BallSpec U{};
        const Observable a = build_a(U, flat);
        const Observable b = build_b(0.05, flat);
        double worst = 0.0;
        for (int i = 0; i < 5000; ++i) {
            Rng rng = Rng::derive(seed, "obsrange", i);
            const PhasePoint v = validate_detail::random_unit_point(rng, flat, flat.x_floor * 2,
                                                                    flat.x_max);
            const double va = a(v, flat);
            const double vb = b(v, flat);
            worst = std::max({worst, -va, va - 1.0, -vb, vb - 1.0});
            if (U.distance(v.point, flat) > U.radius && va != 0.0) worst = std::max(worst, 1.0);
            const auto bs = boundary_state(v, flat);
            if ((bs.f > 0.05 || bs.r > 0.0025) && vb != 0.0) worst = std::max(worst, 1.0);
        }
        r.metric_value = worst;
        r.threshold = 1e-15;
        r.pass = worst <= 0.0;
    });

    run("correlation_t0_identity", [&](CheckResult& r) {
        const BallSpec U{};
        const Observable a = build_a(U, flat);
        const std::size_t n = 20000;
        const auto est = correlation(a, a, 0.0, n, flat, seed, workers);
        // Direct same-stream computation.
        const auto samples = liouville_sample_all(n, flat, seed, "corr");
        double sa = 0, sab = 0;
        for (const auto& v : samples) {
            const double va = a(v, flat);
            sa += va;
            sab += va * va;
        }
        const double direct = sab / n - (sa / n) * (sa / n);
        r.metric_value = std::fabs(est.value - direct);
        r.threshold = 0.0;
        r.pass = est.value == direct && est.value >= 0.0;
        r.detail = "bitwise match of the t = 0 estimator with its direct form";
    });

    run("liouville_mean_invariant_under_flow", [&](CheckResult& r) {
        auto c_fn = [](const PhasePoint& v) {
            return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi_v<double> * v.point.tau)) *
                   v.point.x;
        };
        const std::size_t n = 4000;
        const auto samples = liouville_sample_all(n, flat, seed, "invmean");
        std::vector<double> before(n, 0.0), after(n, 0.0);
        std::vector<unsigned char> ok(n, 1);
        parallel_for(n, workers, [&](std::size_t i) {
            before[i] = c_fn(samples[i]);
            IntegratorOptions opts;
            opts.record = false;
            try {
                const Trajectory traj = integrate(samples[i], 3.0, flat, opts);
                if (traj.hit_floor) {
                    ok[i] = 0;
                    return;
                }
                after[i] = c_fn(traj.final_state);
            } catch (const StepUnderflowError&) {
                ok[i] = 0;
            }
        });
        double sb = 0, sa2 = 0, sa = 0, m = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!ok[i]) continue;
            sb += before[i];
            sa += after[i];
            sa2 += after[i] * after[i];
            m += 1.0;
        }
        const double mean_b = sb / m, mean_a = sa / m;
        const double sd = std::sqrt((sa2 / m - mean_a * mean_a) / m);
        r.metric_value = std::fabs(mean_a - mean_b) / sd;
        r.threshold = 3.0;
        r.pass = r.metric_value < r.threshold;
        r.detail = "|mean c o flow_3 - mean c| in stderr units";
    });

    return results;
}

}  // namespace wpflow
