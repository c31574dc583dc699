#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpflow/fit.hpp"
#include "wpflow/geodesic.hpp"
#include "wpflow/metric.hpp"
#include "wpflow/parallel.hpp"
#include "wpflow/rng.hpp"

namespace wpflow {

/// Near-boundary coordinates of a phase point: f is the square-root length of
/// the pinching curve at the footprint, r the norm of the velocity projection
/// onto the complex line spanned by lambda and J lambda.
struct BoundaryState {
    double f = 0.0;
    double r = 0.0;
};

inline BoundaryState boundary_state(const PhasePoint& v, const MetricSpec& spec) {
    const TangentVector lambda = grad_sqrt_length(v.point, spec);
    const TangentVector jlambda = apply_complex_structure(v.point, spec, lambda);
    const double a = inner(v.point, spec, v.velocity, lambda);
    const double b = inner(v.point, spec, v.velocity, jlambda);
    return {spec.f_of_x(v.point.x), std::sqrt(a * a + b * b)};
}

namespace detail {

/// Assembles a unit tangent vector from orthonormal-frame coefficients.
inline TangentVector from_frame(const ManifoldPoint& p, const MetricSpec& spec,
                                const std::array<double, 4>& u) {
    const auto e = orthonormal_frame(p, spec);
    TangentVector v;
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 4; ++c) v[c] += u[i] * e[i][c];
    return v;
}

/// Draws a Liouville base point with x-density ~ x^3 * P on
/// [x_lo, x_hi] x torus. Throws if the (mild) eta-rejection stalls.
inline ManifoldPoint liouville_base_point(Rng& rng, const MetricSpec& spec, double x_lo,
                                          double x_hi) {
    const double lo4 = x_lo * x_lo * x_lo * x_lo;
    const double hi4 = x_hi * x_hi * x_hi * x_hi;
    const double p_max = 1.0 + spec.eta * x_hi * x_hi * x_hi * x_hi;
    for (std::uint64_t attempt = 0; attempt < 1000000; ++attempt) {
        const double x = std::pow(lo4 + (hi4 - lo4) * rng.uniform(), 0.25);
        ManifoldPoint p{x, rng.uniform(0.0, spec.tau_period),
                        rng.uniform(0.0, spec.torus_sides[0]),
                        rng.uniform(0.0, spec.torus_sides[1])};
        if (spec.eta == 0.0) return p;
        if (rng.uniform() * p_max <= torus_factor(p, spec).P) return p;
    }
    throw std::runtime_error("liouville_base_point: rejection efficiency below 1e-6");
}

/// Uniform fiber direction conditioned on the squared projection onto the
/// (e0, e1) plane being at most sigma_max^2. For a uniform vector on S^3 that
/// squared projection is distributed U(0, 1), so the conditional draw is
/// sigma^2 = sigma_max^2 * U. sigma_max = 1 recovers the unconstrained fiber.
inline std::array<double, 4> fiber_direction_conditioned(Rng& rng, double sigma_max) {
    const double two_pi = 6.283185307179586476925286766559;
    const double s2 = sigma_max * sigma_max * rng.uniform();
    const double sigma = std::sqrt(s2);
    const double rem = std::sqrt(std::max(0.0, 1.0 - s2));
    const double phi = rng.uniform(0.0, two_pi);
    const double psi = rng.uniform(0.0, two_pi);
    return {sigma * std::cos(phi), sigma * std::sin(phi), rem * std::cos(psi),
            rem * std::sin(psi)};
}

}  // namespace detail

/// Fraction of the unit fiber sphere satisfying r <= eps^2 (exact).
inline double fiber_fraction(double eps) {
    const double s = eps * eps / kLambdaNorm;
    return std::min(1.0, s * s);
}

/// Draws n unit-speed phase points from the Liouville measure restricted to
/// V_eps = { f <= eps, r <= eps^2 }. Deterministic per (seed, label, index).
inline std::vector<PhasePoint> sample_V_eps(double eps, std::size_t n, const MetricSpec& spec,
                                            std::uint64_t seed,
                                            std::string_view label = "V_eps") {
    spec.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("sample_V_eps: eps must be positive");
    const double x_hi = spec.x_of_f(eps);
    if (!(x_hi > spec.x_floor))
        throw std::invalid_argument("sample_V_eps: eps too small, footprint range below x_floor");
    const double sigma_max = std::min(1.0, eps * eps / kLambdaNorm);

    std::vector<PhasePoint> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, label, i);
        const ManifoldPoint p = detail::liouville_base_point(rng, spec, spec.x_floor, x_hi);
        const auto u = detail::fiber_direction_conditioned(rng, sigma_max);
        out[i] = {p, detail::from_frame(p, spec, u)};
    }
    return out;
}

enum class EscapeKind { Crossed, Capped, FloorHit };

struct EscapeOutcome {
    double time = 0.0;
    EscapeKind kind = EscapeKind::Capped;
};

/// First time f reaches 2*eps, capped at 10/eps. A floor hit before crossing
/// is returned as a lower bound (kind FloorHit).
inline EscapeOutcome escape_time(const PhasePoint& v0, double eps, const MetricSpec& spec,
                                 const IntegratorOptions& base_opts = {}) {
    if (!(eps < spec.x_max / 4.0))
        throw std::invalid_argument("escape_time: eps too large for the chart");
    IntegratorOptions opts = base_opts;
    opts.record = false;
    opts.threshold_x = spec.x_of_f(2.0 * eps);
    opts.stop_at_threshold = true;
    const double cap = 10.0 / eps;

    const Trajectory traj = integrate(v0, cap, spec, opts);
    for (const auto& ev : traj.events)
        if (ev.kind == EventKind::ThresholdCross) return {ev.t, EscapeKind::Crossed};
    if (traj.hit_floor) return {traj.final_time, EscapeKind::FloorHit};
    return {cap, EscapeKind::Capped};
}

struct EscapeRow {
    double eps = 0.0;
    std::size_t n = 0, n_crossed = 0, n_capped = 0, n_floor = 0;
    double min_time = 0.0;     // over all outcomes (censored times included)
    double median_time = 0.0;
    double q25 = 0.0, q75 = 0.0;
    double min_crossed = 0.0;  // smallest genuine crossing time
};

struct EscapeResult {
    std::vector<EscapeRow> table;
    FitResult fit;         // log median escape time vs log eps
    double c0_raw = 0.0;   // max over eps of 1/(eps * min crossing time)
    double c0_emp = 0.0;   // c0_raw * safety; defines the certified window
    double safety = 1.0;
};

/// Samples V_eps at each eps, measures escape times, fits the 1/eps law and
/// calibrates the empirical window constant C0. The safety factor shortens
/// the certified window below the observed minimum so that held-out samples
/// cannot undercut it.
inline EscapeResult escape_experiment(const std::vector<double>& eps_list, std::size_t n_per_eps,
                                      const MetricSpec& spec, std::uint64_t seed,
                                      unsigned workers = 0, double safety = 1.25,
                                      std::string_view label = "escape") {
    spec.validate();
    if (eps_list.empty()) throw std::invalid_argument("escape_experiment: empty eps list");
    if (workers == 0) workers = default_workers();

    EscapeResult result;
    result.safety = safety;
    std::vector<FitPoint> pts;

    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const double eps = eps_list[ei];
        if (!(2.0 * eps < spec.f_of_x(spec.x_max) / 2.0))
            throw std::invalid_argument("escape_experiment: eps too large");
        const std::string lab = std::string(label) + "/" + std::to_string(ei);
        const auto samples = sample_V_eps(eps, n_per_eps, spec, seed, lab);

        std::vector<EscapeOutcome> outcomes(n_per_eps);
        parallel_for(n_per_eps, workers,
                     [&](std::size_t i) { outcomes[i] = escape_time(samples[i], eps, spec); });

        EscapeRow row;
        row.eps = eps;
        row.n = n_per_eps;
        std::vector<double> times;
        times.reserve(n_per_eps);
        double min_crossed = std::numeric_limits<double>::infinity();
        for (const auto& o : outcomes) {
            times.push_back(o.time);
            switch (o.kind) {
                case EscapeKind::Crossed:
                    ++row.n_crossed;
                    min_crossed = std::min(min_crossed, o.time);
                    break;
                case EscapeKind::Capped: ++row.n_capped; break;
                case EscapeKind::FloorHit: ++row.n_floor; break;
            }
        }
        std::sort(times.begin(), times.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(times.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, times.size() - 1);
            return times[lo] + (pos - lo) * (times[hi] - times[lo]);
        };
        row.min_time = times.front();
        row.median_time = quantile(0.5);
        row.q25 = quantile(0.25);
        row.q75 = quantile(0.75);
        row.min_crossed = std::isfinite(min_crossed) ? min_crossed : 0.0;
        result.table.push_back(row);

        if (row.n_crossed > 0)
            result.c0_raw = std::max(result.c0_raw, 1.0 / (eps * row.min_crossed));

        // Median stderr from the interquartile range (asymptotic normal rule).
        const double sd = (row.q75 - row.q25) / 1.349;
        const double med_se = 1.2533 * sd / std::sqrt(static_cast<double>(n_per_eps));
        pts.push_back({eps, row.median_time, med_se});
    }

    result.c0_emp = result.c0_raw * safety;
    if (pts.size() >= 4) result.fit = power_law_fit(pts);
    return result;
}

struct DriftBin {
    double f = 0.0;             // median measured depth of the bin
    double median_abs_rprime = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

struct DriftResult {
    std::vector<DriftBin> bins;
    FitResult fit;              // log median |r'| vs log f
    bool degenerate = false;    // all |r'| below the conservation floor
    double max_abs_rprime = 0.0;
    double max_ratio = 0.0;     // max over samples of |r'| / f^3
    double fitted_B = 0.0;      // exp(intercept): |r'| ~ B * f^3
};

struct DriftOptions {
    double f_lo = 1e-3;
    double f_hi = 0.5;
    std::size_t bins = 12;
    std::size_t per_bin = 80;
    double segment_time = 0.5;
    std::size_t min_valid_bins = 4;
    double degenerate_floor = 1e-10;
};

/// Measures the decay rate of the conserved-up-to-coupling quantity r along
/// short geodesic segments held at fixed depth, and fits |r'| ~ B * f^q.
///
/// Initial data are nearly parallel to the boundary: the velocity projection
/// onto the (lambda, J lambda) plane is budgeted so the segment's depth
/// excursion stays within a quarter of x. This keeps segments long (fixed
/// length in time, not scaled with depth), which is what makes the deepest
/// bins resolvable: differentiating r over a depth-scaled window would drown
/// the ~eta*x^3 signal in double-precision roundoff.
inline DriftResult drift_experiment(const MetricSpec& spec, std::uint64_t seed,
                                    unsigned workers = 0, const DriftOptions& opt = {},
                                    std::string_view label = "drift") {
    spec.validate();
    if (workers == 0) workers = default_workers();
    if (opt.bins < 2) throw std::invalid_argument("drift_experiment: need at least 2 bins");

    DriftResult result;
    const std::size_t samples_per_seg = 9;  // 5-point stencil needs the middle 5
    const double h_out = opt.segment_time / static_cast<double>(samples_per_seg - 1);

    struct Measurement {
        double f = 0.0, abs_rp = 0.0;
        bool ok = false;
    };

    std::vector<FitPoint> pts;
    for (std::size_t bi = 0; bi < opt.bins; ++bi) {
        const double lf = std::log(opt.f_lo) +
                          (std::log(opt.f_hi) - std::log(opt.f_lo)) * static_cast<double>(bi) /
                              static_cast<double>(opt.bins - 1);
        const double f_bin = std::exp(lf);
        const double x_bin = spec.x_of_f(f_bin);
        if (!(x_bin > 2.0 * spec.x_floor) || !(x_bin < 0.5 * spec.x_max)) continue;

        std::vector<Measurement> ms(opt.per_bin);
        const std::string lab = std::string(label) + "/" + std::to_string(bi);
        parallel_for(opt.per_bin, workers, [&](std::size_t i) {
            Rng rng = Rng::derive(seed, lab, i);
            ManifoldPoint p{x_bin, rng.uniform(0.0, spec.tau_period),
                            rng.uniform(0.0, spec.torus_sides[0]),
                            rng.uniform(0.0, spec.torus_sides[1])};
            // Projection budget: |vx| = |u0|/2 <= x/(4 T) keeps depth within x/4.
            const double sigma_max = std::min(0.5, x_bin / (2.0 * opt.segment_time));
            const auto u = detail::fiber_direction_conditioned(rng, sigma_max);
            PhasePoint v0{p, detail::from_frame(p, spec, u)};

            IntegratorOptions io;
            io.sample_dt = h_out;
            io.record = true;
            // Differencing r divides integration error by h_out, so the
            // segments run at tolerances tight enough that the eta = 0
            // conservation floor of 1e-10 stays resolvable.
            io.rel_tol = 1e-14;
            io.abs_tol = 1e-15;
            Trajectory traj;
            try {
                traj = integrate(v0, opt.segment_time, spec, io);
            } catch (const StepUnderflowError&) {
                return;
            }
            if (traj.hit_floor || traj.states.size() < samples_per_seg) return;

            std::array<double, samples_per_seg> r{};
            for (std::size_t j = 0; j < samples_per_seg; ++j)
                r[j] = boundary_state(traj.states[j], spec).r;
            const std::size_t m = samples_per_seg / 2;
            const double rp =
                (-r[m + 2] + 8.0 * r[m + 1] - 8.0 * r[m - 1] + r[m - 2]) / (12.0 * h_out);
            ms[i] = {boundary_state(traj.states[m], spec).f, std::fabs(rp), true};
        });

        std::vector<double> vals, fs;
        for (const auto& m : ms)
            if (m.ok) {
                vals.push_back(m.abs_rp);
                fs.push_back(m.f);
                result.max_abs_rprime = std::max(result.max_abs_rprime, m.abs_rp);
                const double f3 = m.f * m.f * m.f;
                result.max_ratio = std::max(result.max_ratio, m.abs_rp / f3);
            }
        if (vals.size() < opt.per_bin / 2) continue;

        auto med = [](std::vector<double> v) {
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return v[v.size() / 2];
        };
        DriftBin bin;
        bin.f = med(fs);
        bin.median_abs_rprime = med(vals);
        bin.n = vals.size();
        // Spread of the median from the scatter of log |r'| values.
        std::vector<double> lv;
        for (double v : vals)
            if (v > 0.0) lv.push_back(std::log(v));
        double mean = 0.0;
        for (double v : lv) mean += v;
        mean /= std::max<std::size_t>(1, lv.size());
        double var = 0.0;
        for (double v : lv) var += (v - mean) * (v - mean);
        var /= std::max<std::size_t>(1, lv.size() > 1 ? lv.size() - 1 : 1);
        bin.stderr_ = bin.median_abs_rprime * 1.2533 *
                      std::sqrt(var / static_cast<double>(std::max<std::size_t>(1, lv.size())));
        result.bins.push_back(bin);
        if (bin.median_abs_rprime > opt.degenerate_floor)
            pts.push_back({bin.f, bin.median_abs_rprime, bin.stderr_});
    }

    if (result.max_abs_rprime < opt.degenerate_floor) {
        result.degenerate = true;
        return result;
    }
    if (pts.size() < opt.min_valid_bins)
        throw std::runtime_error("drift_experiment: fit window too small (" +
                                 std::to_string(pts.size()) + " valid depth bins)");
    result.fit = power_law_fit(pts);
    result.fitted_B = std::exp(result.fit.intercept);
    return result;
}

/// Analytic pathwise bound |r'| <= B * f^3 for the model coupling.
inline double drift_bound_B(const MetricSpec& spec) {
    const double pi2 = std::numbers::pi_v<double> * std::numbers::pi_v<double>;
    return spec.eta / ((1.0 - spec.eta) * 4.0 * pi2);
}

struct GradientExpansionReport {
    double max_orthogonal = 0.0;   // component of nabla_v lambda orthogonal to J lambda
    double cstar = 0.0;            // fitted structure constant of the model
    double cstar_spread = 0.0;     // max relative deviation across probes
    double slope_norm_vs_invf = 0.0;
    double reference_constant = 3.0 / (2.0 * std::numbers::pi_v<double>);
};

/// Structure check of the covariant derivative of lambda: nabla_v lambda must
/// be parallel to J lambda with coefficient cstar * <v, J lambda> / sqrt(l),
/// and its norm along the unit twist direction must grow like 1/f.
inline GradientExpansionReport gradient_expansion_check(std::size_t n_points,
                                                        const MetricSpec& spec,
                                                        std::uint64_t seed) {
    spec.validate();
    if (spec.eta != 0.0)
        throw std::invalid_argument("gradient_expansion_check: requires eta = 0");

    GradientExpansionReport rep;
    double cstar_min = std::numeric_limits<double>::infinity();
    double cstar_max = -std::numeric_limits<double>::infinity();
    double cstar_sum = 0.0;
    std::size_t cstar_n = 0;

    auto nabla_lambda = [&](const ManifoldPoint& p, const TangentVector& v) {
        const auto G = christoffel_at(p, spec);
        const double c = kSqrt2Pi2 / 4.0;  // lambda = c * d/dx, constant coefficient
        TangentVector out;
        for (int k = 0; k < 4; ++k) {
            double acc = 0.0;
            for (int i = 0; i < 4; ++i) acc += G[k][i][0] * v[i];
            out[k] = c * acc;
        }
        return out;
    };

    for (std::size_t i = 0; i < n_points; ++i) {
        Rng rng = Rng::derive(seed, "gradcheck", i);
        ManifoldPoint p{rng.uniform(0.05, 0.9), rng.uniform(0.0, spec.tau_period),
                        rng.uniform(0.0, spec.torus_sides[0]),
                        rng.uniform(0.0, spec.torus_sides[1])};
        const auto u = rng.sphere3();
        const TangentVector v = detail::from_frame(p, spec, u);

        const TangentVector nl = nabla_lambda(p, v);
        const TangentVector lambda = grad_sqrt_length(p, spec);
        const TangentVector jl = apply_complex_structure(p, spec, lambda);
        const double jl2 = inner(p, spec, jl, jl);
        const double along = inner(p, spec, nl, jl) / jl2;
        const TangentVector orth = nl - jl * along;
        rep.max_orthogonal = std::max(rep.max_orthogonal, norm(p, spec, orth));

        const double vjl = inner(p, spec, v, jl);
        const double sqrt_l = spec.f_of_x(p.x);
        if (std::fabs(vjl) > 1e-6) {
            // nabla_v lambda = cstar * <v, J lambda> / sqrt(l) * J lambda
            const double cs = along * sqrt_l / vjl;
            cstar_min = std::min(cstar_min, cs);
            cstar_max = std::max(cstar_max, cs);
            cstar_sum += cs;
            ++cstar_n;
        }
    }
    if (cstar_n > 0) {
        rep.cstar = cstar_sum / static_cast<double>(cstar_n);
        rep.cstar_spread = (cstar_max - cstar_min) / std::fabs(rep.cstar);
    }

    // Norm growth along the unit twist direction e1 over a deterministic grid.
    std::vector<FitPoint> pts;
    for (int j = 0; j < 12; ++j) {
        const double x = 0.05 * std::pow(0.9 / 0.05, j / 11.0);
        ManifoldPoint p{x, 0.3, 0.4, 0.6};
        const auto e = orthonormal_frame(p, spec);
        const TangentVector nl = nabla_lambda(p, e[1]);
        pts.push_back({1.0 / spec.f_of_x(x), norm(p, spec, nl), 0.0});
    }
    rep.slope_norm_vs_invf = power_law_fit(pts).exponent;
    return rep;
}

}  // namespace wpflow
