#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace wpflow {

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kGk15Nodes = {
    0.000000000000000000000000000000000, 0.207784955007898467600689403773245,
    0.405845151377397166906606412076961, 0.586087235467691130294144838258730,
    0.741531185599394439863864773280788, 0.864864423359769072789712788640926,
    0.949107912342758524526189684047851, 0.991455371120812639206854697526329};
inline constexpr std::array<double, 8> kGk15WeightsK = {
    0.209482141084727828012999174891714, 0.204432940075298892414161999234649,
    0.190350578064785409913256402421014, 0.169004726639267902826583426598550,
    0.140653259715525918745189590510238, 0.104790010322250183839876322541518,
    0.063092092629978553290700663189204, 0.022935322010529224963732008058970};
inline constexpr std::array<double, 4> kGk15WeightsG = {
    0.417959183673469387755102040816327, 0.381830050505118944950369775488975,
    0.279705391489276667901467771423780, 0.129484966168869693270611432679082};

template <typename F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    const double f0 = f(c);
    double gauss = kGk15WeightsG[0] * f0;
    kronrod = kGk15WeightsK[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double fv = f(c - hw * kGk15Nodes[i]) + f(c + hw * kGk15Nodes[i]);
        kronrod += kGk15WeightsK[i] * fv;
        if (i % 2 == 0) gauss += kGk15WeightsG[i / 2] * fv;
    }
    kronrod *= hw;
    gauss *= hw;
    err = std::fabs(kronrod - gauss);
}

template <typename F>
double adaptive_gk(const F& f, double a, double b, double tol, int depth) {
    double val, err;
    gk15(f, a, b, val, err);
    if (err <= tol || depth >= 48) return val;
    const double c = 0.5 * (a + b);
    return adaptive_gk(f, a, c, 0.5 * tol, depth + 1) +
           adaptive_gk(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 7-15 quadrature of f on [a, b].
template <typename F>
double integrate_gk(const F& f, double a, double b, double tol = 1e-12) {
    if (a == b) return 0.0;
    const double sign = (a < b) ? 1.0 : -1.0;
    if (a > b) std::swap(a, b);
    return sign * detail::adaptive_gk(f, a, b, tol, 0);
}

/// Bisection for a monotone function; requires g(lo) and g(hi) to bracket 0.
template <typename G>
double bisect(const G& g, double lo, double hi, int iterations = 80) {
    double flo = g(lo);
    double fhi = g(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("bisect: endpoints do not bracket a root");
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = g(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace wpflow
