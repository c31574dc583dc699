#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "wpflow/rng.hpp"

namespace wpflow {

struct FitPoint {
    double param = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Power-law fit y = exp(intercept) * x^exponent with a 95% bootstrap
/// confidence interval on the exponent.
struct FitResult {
    double exponent = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_points = 0;
    double residual_rms = 0.0;
};

namespace detail {

struct LogLinFit {
    double slope, intercept, residual_rms;
};

inline LogLinFit weighted_loglog(const std::vector<double>& lx, const std::vector<double>& ly,
                                 const std::vector<double>& w) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
        sxx += w[i] * lx[i] * lx[i];
        sxy += w[i] * lx[i] * ly[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::fabs(det) > 0.0))
        throw std::invalid_argument("power_law_fit: degenerate design (identical parameters?)");
    const double slope = (sw * sxy - sx * sy) / det;
    const double intercept = (sxx * sy - sx * sxy) / det;
    double rss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        rss += r * r;
    }
    return {slope, intercept, std::sqrt(rss / static_cast<double>(lx.size()))};
}

}  // namespace detail

/// Weighted least squares on log-log data. Uncertainties map to log space by
/// the delta method (sigma_log = stderr / value); points with zero stderr get
/// the weight of the best-measured point. The CI comes from a parametric
/// bootstrap: Gaussian noise of the per-point log-sigma, refit, percentiles.
/// Exact data (all stderr = 0) therefore yields a zero-width interval.
inline FitResult power_law_fit(const std::vector<FitPoint>& points, int resamples = 1000) {
    if (points.size() < 4)
        throw std::invalid_argument("power_law_fit: need at least 4 points");
    std::vector<double> lx, ly, sig;
    lx.reserve(points.size());
    for (const auto& pt : points) {
        if (!(pt.param > 0.0) || !(pt.value > 0.0))
            throw std::invalid_argument("power_law_fit: parameters and values must be positive");
        lx.push_back(std::log(pt.param));
        ly.push_back(std::log(pt.value));
        sig.push_back(pt.stderr_ > 0.0 ? pt.stderr_ / pt.value : 0.0);
    }
    double sig_min = 0.0;
    for (double s : sig)
        if (s > 0.0) sig_min = (sig_min == 0.0) ? s : std::min(sig_min, s);
    std::vector<double> w(points.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = sig[i] > 0.0 ? sig[i] : (sig_min > 0.0 ? sig_min : 1.0);
        w[i] = 1.0 / (s * s);
    }

    const auto base = detail::weighted_loglog(lx, ly, w);

    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(resamples));
    Rng rng(0x77a0f1d2c3b4a596ULL);
    std::vector<double> ly_b(ly.size());
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < ly.size(); ++i) ly_b[i] = ly[i] + sig[i] * rng.normal();
        slopes.push_back(detail::weighted_loglog(lx, ly_b, w).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    const auto pct = [&](double q) {
        const double pos = q * static_cast<double>(slopes.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, slopes.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return slopes[lo] * (1.0 - frac) + slopes[hi] * frac;
    };

    FitResult out;
    out.exponent = base.slope;
    out.intercept = base.intercept;
    out.ci_low = std::min(pct(0.025), base.slope);
    out.ci_high = std::max(pct(0.975), base.slope);
    out.n_points = static_cast<int>(points.size());
    out.residual_rms = base.residual_rms;
    return out;
}

}  // namespace wpflow
