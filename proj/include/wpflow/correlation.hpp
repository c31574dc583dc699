#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpflow/boundary.hpp"
#include "wpflow/fit.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/measure.hpp"
#include "wpflow/observables.hpp"
#include "wpflow/parallel.hpp"

namespace wpflow {

/// Liouville integral of an observable (normalized by total mass), by
/// importance sampling over the observable's declared support region. For the
/// V_eps-type observable the fiber enters through the conditioned draw with
/// its exact weight, so the estimate stays useful at eps scales where naive
/// full-space sampling would never hit the support.
inline VolumeEstimate integral_of(const Observable& obs, std::size_t n, const MetricSpec& spec,
                                  std::uint64_t seed, std::string_view label = "integral") {
    spec.validate();
    if (n < 2) throw std::invalid_argument("integral_of: need n >= 2");
    const double mass = total_liouville_mass(spec);
    double sum = 0.0, sum2 = 0.0;

    if (obs.kind() == Observable::Kind::Constant)
        return {obs({ManifoldPoint{0.5, 0, 0, 0}, {}}, spec), 0.0};
    if (obs.kind() == Observable::Kind::BallBump) {
        const BallSpec& b = obs.ball();
        b.validate(spec);
        const double xc3 = b.center.x * b.center.x * b.center.x;
        const double Pc = torus_factor(b.center, spec).P;
        const double htau = std::min(b.radius / xc3, 0.5 * spec.tau_period);
        const double hy = std::min(b.radius / std::sqrt(Pc), 0.5 * spec.torus_sides[0]);
        const double box = (b.x_hi() - b.x_lo()) * (2.0 * htau) * (2.0 * hy) * (2.0 * hy);
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = Rng::derive(seed, label, i);
            ManifoldPoint p{rng.uniform(b.x_lo(), b.x_hi()),
                            rng.uniform(b.center.tau - htau, b.center.tau + htau),
                            rng.uniform(b.center.y1 - hy, b.center.y1 + hy),
                            rng.uniform(b.center.y2 - hy, b.center.y2 + hy)};
            const double val = obs({p, {}}, spec);
            const double w = val > 0.0 ? val * 2.0 * p.x * p.x * p.x * torus_factor(p, spec).P : 0.0;
            sum += w * box;
            sum2 += w * box * w * box;
        }
    } else {
        const double eps = obs.eps();
        const double x_hi = spec.x_of_f(eps);
        if (!(x_hi > spec.x_floor)) throw std::invalid_argument("integral_of: eps below floor");
        const double sigma_max = std::min(1.0, eps * eps / kLambdaNorm);
        const double fiber = sigma_max * sigma_max;
        const double box = x_hi * spec.tau_period * spec.torus_sides[0] * spec.torus_sides[1];
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = Rng::derive(seed, label, i);
            ManifoldPoint p{rng.uniform(0.0, x_hi), rng.uniform(0.0, spec.tau_period),
                            rng.uniform(0.0, spec.torus_sides[0]),
                            rng.uniform(0.0, spec.torus_sides[1])};
            double w = 0.0;
            if (p.x > spec.x_floor) {
                const auto u = detail::fiber_direction_conditioned(rng, sigma_max);
                const PhasePoint v{p, detail::from_frame(p, spec, u)};
                w = obs(v, spec) * 2.0 * p.x * p.x * p.x * torus_factor(p, spec).P * fiber;
            }
            sum += w * box;
            sum2 += w * box * w * box;
        }
    }

    const double nn = static_cast<double>(n);
    const double mean = sum / nn;
    const double var = std::max(0.0, sum2 / nn - mean * mean) / (nn - 1.0);
    return {mean / mass, std::sqrt(var) / mass};
}

struct CorrelationEstimate {
    double t = 0.0;
    double value = 0.0;   // mean(a * b o flow_t) - mean(a) * mean(b)
    double stderr_ = 0.0;
    std::uint64_t n = 0;
    double int_a = 0.0, int_a_stderr = 0.0;
    double int_b = 0.0, int_b_stderr = 0.0;
    std::uint64_t failures = 0;
};

/// Monte Carlo correlation at time t over full-manifold Liouville samples.
/// The transported factor b(flow_t v) is only computed where a(v) != 0; the
/// plain means of a and b come from the same, unflowed sample (the flow
/// preserves the measure). At t = 0 no trajectory is integrated, so the
/// result coincides bit for bit with the direct estimate of
/// int a*b - int a int b on the same stream. Trajectories that abort are
/// excluded and counted; more than 1% of them is an error.
inline CorrelationEstimate correlation(const Observable& a, const Observable& b, double t,
                                       std::size_t n, const MetricSpec& spec, std::uint64_t seed,
                                       unsigned workers = 0, std::string_view label = "corr") {
    spec.validate();
    if (t < 0.0) throw std::invalid_argument("correlation: t must be nonnegative");
    if (n < 2) throw std::invalid_argument("correlation: need n >= 2");
    if (workers == 0) workers = default_workers();

    const auto samples = liouville_sample_all(n, spec, seed, label);
    std::vector<double> av(n), bv(n), abv(n);
    std::vector<unsigned char> ok(n, 1);

    parallel_for(n, workers, [&](std::size_t i) {
        const PhasePoint& v = samples[i];
        av[i] = a(v, spec);
        bv[i] = b(v, spec);
        if (t == 0.0) {
            abv[i] = av[i] * bv[i];
            return;
        }
        if (av[i] == 0.0) {
            abv[i] = 0.0;
            return;
        }
        IntegratorOptions opts;
        opts.record = false;
        try {
            const Trajectory traj = integrate(v, t, spec, opts);
            if (traj.hit_floor) {
                ok[i] = 0;
                return;
            }
            abv[i] = av[i] * b(traj.final_state, spec);
        } catch (const StepUnderflowError&) {
            ok[i] = 0;
        }
    });

    double sa = 0, sb = 0, sab = 0;
    std::uint64_t m = 0, failures = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) {
            ++failures;
            continue;
        }
        sa += av[i];
        sb += bv[i];
        sab += abv[i];
        ++m;
    }
    if (failures * 100 > n)
        throw std::runtime_error("correlation: more than 1% of trajectories failed");
    const double mm = static_cast<double>(m);
    const double ma = sa / mm, mb = sb / mm, mab = sab / mm;

    // Delta method on (mean_ab, mean_a, mean_b) with the sample covariance.
    double c_aa = 0, c_bb = 0, c_abab = 0, c_ab = 0, c_ab_a = 0, c_ab_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        const double da = av[i] - ma, db = bv[i] - mb, dab = abv[i] - mab;
        c_aa += da * da;
        c_bb += db * db;
        c_abab += dab * dab;
        c_ab += da * db;
        c_ab_a += dab * da;
        c_ab_b += dab * db;
    }
    const double denom = mm * (mm - 1.0);
    const double var_value = (c_abab + mb * mb * c_aa + ma * ma * c_bb - 2.0 * mb * c_ab_a -
                              2.0 * ma * c_ab_b + 2.0 * ma * mb * c_ab) /
                             denom;

    CorrelationEstimate est;
    est.t = t;
    est.value = mab - ma * mb;
    est.stderr_ = std::sqrt(std::max(0.0, var_value));
    est.n = m;
    est.int_a = ma;
    est.int_a_stderr = std::sqrt(std::max(0.0, c_aa / denom));
    est.int_b = mb;
    est.int_b_stderr = std::sqrt(std::max(0.0, c_bb / denom));
    est.failures = failures;
    return est;
}

struct CertificateReport {
    double eps = 0.0;
    double window = 0.0;       // transport time 1 / (c0 * eps), times window_factor
    double window_factor = 1.0;
    std::uint64_t n = 0;
    std::uint64_t violations = 0;   // samples landing where b_eps > 0
    std::uint64_t floor_hits = 0;
    double max_ab = 0.0;            // max over samples of a(v) * b(flow_T v)
    bool pass = false;
};

/// Transport certificate: flows Liouville samples of the tube over U forward
/// by the protected window and checks that none lands in the support of
/// b_eps. window_factor > 1 probes beyond the protected window (reported, not
/// asserted).
inline CertificateReport nonmixing_certificate(const BallSpec& U, double eps, std::size_t n,
                                               double c0_emp, const MetricSpec& spec,
                                               std::uint64_t seed, unsigned workers = 0,
                                               double window_factor = 1.0,
                                               std::string_view label = "cert") {
    spec.validate();
    check_scale_separation(U, eps, spec);
    if (!(c0_emp > 0.0)) throw std::invalid_argument("nonmixing_certificate: c0 must be positive");
    if (workers == 0) workers = default_workers();

    const Observable a = build_a(U, spec, eps);
    const Observable b = build_b(eps, spec);
    const double window = window_factor / (c0_emp * eps);

    const auto samples = liouville_sample_phase(RegionSpec::tube(U), n, spec, seed, label);
    std::vector<double> ab(n, 0.0);
    std::vector<unsigned char> flag(n, 0);  // 1 = violation, 2 = floor hit

    parallel_for(n, workers, [&](std::size_t i) {
        IntegratorOptions opts;
        opts.record = false;
        try {
            const Trajectory traj = integrate(samples[i], window, spec, opts);
            if (traj.hit_floor) {
                flag[i] = 2;
                return;
            }
            const double bT = b(traj.final_state, spec);
            if (bT > 0.0) flag[i] = 1;
            ab[i] = a(samples[i], spec) * bT;
        } catch (const StepUnderflowError&) {
            flag[i] = 2;
        }
    });

    CertificateReport rep;
    rep.eps = eps;
    rep.window = window;
    rep.window_factor = window_factor;
    rep.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (flag[i] == 1) ++rep.violations;
        if (flag[i] == 2) ++rep.floor_hits;
        rep.max_ab = std::max(rep.max_ab, ab[i]);
    }
    rep.pass = (rep.violations == 0);
    return rep;
}

enum class GammaStatus { Bound, NoObstruction };

struct GammaRow {
    double eps = 0.0;
    double m = 0.0, m_stderr = 0.0;  // (int a) * (int b_eps)
    double N = 0.0, N_stderr = 0.0;  // |a|_Ck * |b_eps|_Ck
    double T = 0.0;                  // protected window 1/(c0 eps)
    double implied_gamma = 0.0;      // log(N/m) / log(T)
    bool certified = false;
};

struct GammaReport {
    int k = 1;
    GammaStatus status = GammaStatus::NoObstruction;
    std::vector<GammaRow> rows;
    FitResult slope_m;
    FitResult slope_N;
    double slope_T = -1.0;  // exact by construction of T(eps)
    FitResult gamma;        // exponent = gamma_max, CI combined from m and N
};

/// Extracts the polynomial mixing-rate obstruction gamma_max from the scaling
/// of m(eps) = int a * int b_eps, N(eps) = |a|_Ck |b_eps|_Ck and the certified
/// window T(eps): a decay bound C_t <= c t^-gamma N forces
/// gamma <= (log N - log m)/log T -> slope(m) - slope(N) as eps -> 0.
/// Every eps must pass the transport certificate, otherwise no bound is
/// claimed (status NoObstruction); a control observable with eps-independent
/// m and N also yields NoObstruction.
inline GammaReport gamma_upper_bound(const std::vector<double>& eps_list, int k, std::size_t n,
                                     const BallSpec& U, double c0_emp, const MetricSpec& spec,
                                     std::uint64_t seed, unsigned workers = 0,
                                     std::size_t cert_n = 2000,
                                     const Observable* b_override = nullptr) {
    spec.validate();
    if (eps_list.size() < 4)
        throw std::invalid_argument("gamma_upper_bound: need at least 4 eps values");
    if (workers == 0) workers = default_workers();

    GammaReport rep;
    rep.k = k;
    const Observable a = build_a(U, spec, eps_list.empty() ? 0.1 : eps_list.front());
    const double norm_a = estimate_ck_norm(a, k, spec, derive_seed(seed, "norm_a", 0));

    bool all_certified = true;
    std::vector<FitPoint> m_pts, n_pts;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        const Observable b = b_override ? *b_override : build_b(eps, spec);

        GammaRow row;
        row.eps = eps;
        row.T = 1.0 / (c0_emp * eps);

        const auto cert = nonmixing_certificate(U, eps, cert_n, c0_emp, spec,
                                                derive_seed(seed, "gamma_cert", i), workers);
        row.certified = cert.pass;
        all_certified = all_certified && cert.pass;

        // Common random numbers across the sweep: the estimators are
        // scale-equivariant in eps, so shared streams cancel their sampling
        // bias in the fitted slopes.
        const auto ia = integral_of(a, n, spec, derive_seed(seed, "int_a", 0));
        const auto ib = integral_of(b, n, spec, derive_seed(seed, "int_b", 0));
        row.m = ia.value * ib.value;
        row.m_stderr = std::sqrt(ia.stderr_ * ia.stderr_ * ib.value * ib.value +
                                 ib.stderr_ * ib.stderr_ * ia.value * ia.value);

        // Norm spread estimated from two independent half-sized estimates.
        const double nb1 = estimate_ck_norm(b, k, spec, derive_seed(seed, "norm_b1", 0), 200);
        const double nb2 = estimate_ck_norm(b, k, spec, derive_seed(seed, "norm_b2", 0), 200);
        const double norm_b = std::max(nb1, nb2);
        row.N = norm_a * norm_b;
        row.N_stderr = norm_a * (std::fabs(nb1 - nb2) * 0.5 + 0.01 * norm_b);

        if (row.m > 0.0 && row.T > 1.0)
            row.implied_gamma = std::log(row.N / row.m) / std::log(row.T);
        rep.rows.push_back(row);
        m_pts.push_back({eps, row.m, row.m_stderr});
        n_pts.push_back({eps, row.N, row.N_stderr});
    }

    rep.slope_m = power_law_fit(m_pts);
    rep.slope_N = power_law_fit(n_pts);

    const bool degenerate_scales =
        std::fabs(rep.slope_m.exponent) < 0.5 && std::fabs(rep.slope_N.exponent) < 0.5;
    if (!all_certified || degenerate_scales) {
        rep.status = GammaStatus::NoObstruction;
        return rep;
    }

    rep.status = GammaStatus::Bound;
    rep.gamma.exponent = rep.slope_m.exponent - rep.slope_N.exponent;
    rep.gamma.ci_low = rep.slope_m.ci_low - rep.slope_N.ci_high;
    rep.gamma.ci_high = rep.slope_m.ci_high - rep.slope_N.ci_low;
    rep.gamma.n_points = static_cast<int>(eps_list.size());
    return rep;
}

}  // namespace wpflow
