#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wpflow {

// Chart conventions. Coordinates are ordered (x, tau, y1, y2): a cusp plane
// carrying the metric 4 dx^2 + x^6 dtau^2, crossed with a flat 2-torus whose
// block is scaled by P(x, y1) = 1 + eta * x^4 * cos(2 pi y1 / side1). The
// squared-root length function is sqrt(l) = sqrt(2 pi^2) * x, so l = 2 pi^2 x^2.

inline constexpr double kSqrt2Pi2 = std::numbers::pi_v<double> * std::numbers::sqrt2_v<double>;
/// |grad sqrt(l)| in the model metric; constant over the chart.
inline constexpr double kLambdaNorm = std::numbers::pi_v<double> / std::numbers::sqrt2_v<double>;

using Mat4 = std::array<std::array<double, 4>, 4>;
using Christoffel = std::array<std::array<std::array<double, 4>, 4>, 4>;

/// Parameters of the model manifold.
struct MetricSpec {
    double x_max = 1.0;      ///< outer reflecting wall of the cusp coordinate
    double x_floor = 1e-6;   ///< numerical guard; integration aborts below it
    double tau_period = 1.0; ///< period of the twist coordinate
    std::array<double, 2> torus_sides{1.0, 1.0};
    double eta = 0.0;        ///< coupling strength; 0 = exact product metric

    void validate() const {
        if (!(x_floor > 0.0) || !(x_floor < x_max))
            throw std::invalid_argument("MetricSpec: need 0 < x_floor < x_max");
        if (!(tau_period > 0.0) || !(torus_sides[0] > 0.0) || !(torus_sides[1] > 0.0))
            throw std::invalid_argument("MetricSpec: periods must be positive");
        if (!(eta >= 0.0) || !(eta < 1.0))
            throw std::invalid_argument("MetricSpec: need 0 <= eta < 1");
        if (eta * x_max * x_max * x_max * x_max >= 1.0)
            throw std::invalid_argument("MetricSpec: eta * x_max^4 >= 1 breaks positive-definiteness");
    }

    double f_of_x(double x) const { return kSqrt2Pi2 * x; }
    double x_of_f(double f) const { return f / kSqrt2Pi2; }
};

struct ManifoldPoint {
    double x = 0.5;
    double tau = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;

    /// Reduces periodic coordinates to the fundamental domain.
    ManifoldPoint reduced(const MetricSpec& spec) const {
        auto wrap = [](double v, double period) {
            double w = std::fmod(v, period);
            if (w < 0.0) w += period;
            return w;
        };
        return {x, wrap(tau, spec.tau_period), wrap(y1, spec.torus_sides[0]),
                wrap(y2, spec.torus_sides[1])};
    }
};

struct TangentVector {
    double vx = 0.0;
    double vtau = 0.0;
    double vy1 = 0.0;
    double vy2 = 0.0;

    double operator[](int i) const {
        switch (i) {
            case 0: return vx;
            case 1: return vtau;
            case 2: return vy1;
            default: return vy2;
        }
    }
    double& operator[](int i) {
        switch (i) {
            case 0: return vx;
            case 1: return vtau;
            case 2: return vy1;
            default: return vy2;
        }
    }

    TangentVector operator-() const { return {-vx, -vtau, -vy1, -vy2}; }
    TangentVector operator+(const TangentVector& o) const {
        return {vx + o.vx, vtau + o.vtau, vy1 + o.vy1, vy2 + o.vy2};
    }
    TangentVector operator-(const TangentVector& o) const {
        return {vx - o.vx, vtau - o.vtau, vy1 - o.vy1, vy2 - o.vy2};
    }
    TangentVector operator*(double s) const { return {vx * s, vtau * s, vy1 * s, vy2 * s}; }
};

inline void check_chart_domain(const ManifoldPoint& p, const MetricSpec& spec) {
    if (!(p.x >= spec.x_floor) || !(p.x <= spec.x_max))
        throw std::domain_error("point outside chart domain: x = " + std::to_string(p.x));
}

// Torus conformal factor and its partials.
struct TorusFactor {
    double P, Px, Py, Pxx, Pxy, Pyy;
};

inline TorusFactor torus_factor(const ManifoldPoint& p, const MetricSpec& spec) {
    if (spec.eta == 0.0) return {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const double k = 2.0 * std::numbers::pi_v<double> / spec.torus_sides[0];
    const double c = std::cos(k * p.y1);
    const double cp = -k * std::sin(k * p.y1);
    const double cpp = -k * k * c;
    const double x2 = p.x * p.x;
    const double x3 = x2 * p.x;
    const double x4 = x3 * p.x;
    return {1.0 + spec.eta * x4 * c, 4.0 * spec.eta * x3 * c,  spec.eta * x4 * cp,
            12.0 * spec.eta * x2 * c, 4.0 * spec.eta * x3 * cp, spec.eta * x4 * cpp};
}

inline std::array<double, 4> metric_diag(const ManifoldPoint& p, const MetricSpec& spec) {
    const double x3 = p.x * p.x * p.x;
    const double P = torus_factor(p, spec).P;
    return {4.0, x3 * x3, P, P};
}

/// Metric tensor at p as a symmetric 4x4 bilinear form.
inline Mat4 metric_at(const ManifoldPoint& p, const MetricSpec& spec) {
    check_chart_domain(p, spec);
    Mat4 g{};
    const auto d = metric_diag(p, spec);
    for (int i = 0; i < 4; ++i) g[i][i] = d[i];
    return g;
}

inline Mat4 metric_inverse_at(const ManifoldPoint& p, const MetricSpec& spec) {
    check_chart_domain(p, spec);
    Mat4 g{};
    const auto d = metric_diag(p, spec);
    for (int i = 0; i < 4; ++i) g[i][i] = 1.0 / d[i];
    return g;
}

inline double inner(const ManifoldPoint& p, const MetricSpec& spec, const TangentVector& v,
                    const TangentVector& w) {
    const auto d = metric_diag(p, spec);
    return d[0] * v.vx * w.vx + d[1] * v.vtau * w.vtau + d[2] * v.vy1 * w.vy1 +
           d[3] * v.vy2 * w.vy2;
}

inline double norm(const ManifoldPoint& p, const MetricSpec& spec, const TangentVector& v) {
    return std::sqrt(inner(p, spec, v, v));
}

/// Levi-Civita symbols Gamma^k_{ij} of the model metric, in closed form.
inline Christoffel christoffel_at(const ManifoldPoint& p, const MetricSpec& spec) {
    check_chart_domain(p, spec);
    Christoffel G{};
    const double x = p.x;
    const double x5 = x * x * x * x * x;
    const auto tf = torus_factor(p, spec);
    const double A = tf.Px / (2.0 * tf.P);
    const double B = tf.Py / (2.0 * tf.P);

    G[0][1][1] = -0.75 * x5;
    G[0][2][2] = G[0][3][3] = -tf.Px / 8.0;
    G[1][0][1] = G[1][1][0] = 3.0 / x;
    G[2][0][2] = G[2][2][0] = A;
    G[2][2][2] = B;
    G[2][3][3] = -B;
    G[3][0][3] = G[3][3][0] = A;
    G[3][2][3] = G[3][3][2] = B;
    return G;
}

/// Partial derivatives d_m Gamma^k_{ij}; only m = 0 (x) and m = 2 (y1) are
/// nonzero for this metric.
struct ChristoffelPartials {
    Christoffel dx{};
    Christoffel dy1{};
};

inline ChristoffelPartials christoffel_partials_at(const ManifoldPoint& p,
                                                   const MetricSpec& spec) {
    check_chart_domain(p, spec);
    ChristoffelPartials d;
    const double x = p.x;
    const double x4 = x * x * x * x;
    const auto tf = torus_factor(p, spec);
    const double P2 = tf.P * tf.P;
    const double Ax = (tf.Pxx * tf.P - tf.Px * tf.Px) / (2.0 * P2);
    const double Ay = (tf.Pxy * tf.P - tf.Px * tf.Py) / (2.0 * P2);
    const double Bx = (tf.Pxy * tf.P - tf.Py * tf.Px) / (2.0 * P2);
    const double By = (tf.Pyy * tf.P - tf.Py * tf.Py) / (2.0 * P2);

    d.dx[0][1][1] = -3.75 * x4;
    d.dx[0][2][2] = d.dx[0][3][3] = -tf.Pxx / 8.0;
    d.dx[1][0][1] = d.dx[1][1][0] = -3.0 / (x * x);
    d.dx[2][0][2] = d.dx[2][2][0] = Ax;
    d.dx[2][2][2] = Bx;
    d.dx[2][3][3] = -Bx;
    d.dx[3][0][3] = d.dx[3][3][0] = Ax;
    d.dx[3][2][3] = d.dx[3][3][2] = Bx;

    d.dy1[0][2][2] = d.dy1[0][3][3] = -tf.Pxy / 8.0;
    d.dy1[2][0][2] = d.dy1[2][2][0] = Ay;
    d.dy1[2][2][2] = By;
    d.dy1[2][3][3] = -By;
    d.dy1[3][0][3] = d.dy1[3][3][0] = Ay;
    d.dy1[3][2][3] = d.dy1[3][3][2] = By;
    return d;
}

/// Curvature tensor evaluated on vectors: R(v, w, v, w) with all indices down.
inline double riemann_vwvw(const ManifoldPoint& p, const MetricSpec& spec,
                           const TangentVector& v, const TangentVector& w) {
    const auto G = christoffel_at(p, spec);
    const auto dG = christoffel_partials_at(p, spec);
    const auto gd = metric_diag(p, spec);

    auto dGamma = [&](int m, int k, int i, int j) -> double {
        if (m == 0) return dG.dx[k][i][j];
        if (m == 2) return dG.dy1[k][i][j];
        return 0.0;
    };

    // R^k_{s m n} = d_m G^k_{n s} - d_n G^k_{m s} + G^k_{m h} G^h_{n s} - G^k_{n h} G^h_{m s}
    double total = 0.0;
    for (int k = 0; k < 4; ++k)
        for (int s = 0; s < 4; ++s)
            for (int m = 0; m < 4; ++m)
                for (int n = 0; n < 4; ++n) {
                    double r = dGamma(m, k, n, s) - dGamma(n, k, m, s);
                    for (int h = 0; h < 4; ++h)
                        r += G[k][m][h] * G[h][n][s] - G[k][n][h] * G[h][m][s];
                    if (r != 0.0) total += gd[k] * r * v[k] * w[s] * v[m] * w[n];
                }
    return total;
}

/// Sectional curvature of the plane spanned by (v, w) at p.
/// Throws if the plane is degenerate (vectors parallel within tolerance).
inline double sectional_curvature(const ManifoldPoint& p, const TangentVector& v,
                                  const TangentVector& w, const MetricSpec& spec) {
    const double gvv = inner(p, spec, v, v);
    const double gww = inner(p, spec, w, w);
    const double gvw = inner(p, spec, v, w);
    const double gram = gvv * gww - gvw * gvw;
    if (!(gram > 1e-12 * gvv * gww))
        throw std::invalid_argument("sectional_curvature: degenerate plane");
    return riemann_vwvw(p, spec, v, w) / gram;
}

/// Gradient of sqrt(l) = sqrt(2 pi^2) x with the index raised by the metric.
inline TangentVector grad_sqrt_length(const ManifoldPoint& p, const MetricSpec& spec) {
    check_chart_domain(p, spec);
    // d(sqrt l) = sqrt(2 pi^2) dx; only g^{xx} = 1/4 acts on it.
    return {kSqrt2Pi2 / 4.0, 0.0, 0.0, 0.0};
}

/// Orthonormal frame aligned with the chart axes:
/// e0 = dx/2, e1 = dtau/x^3, e2 = dy1/sqrt(P), e3 = dy2/sqrt(P).
inline std::array<TangentVector, 4> orthonormal_frame(const ManifoldPoint& p,
                                                      const MetricSpec& spec) {
    const auto d = metric_diag(p, spec);
    std::array<TangentVector, 4> e{};
    for (int i = 0; i < 4; ++i) e[i][i] = 1.0 / std::sqrt(d[i]);
    return e;
}

/// Almost complex structure: rotates e0 -> e1 in the cusp plane and e2 -> e3
/// in the torus block. Isometric for the model metric; J^2 = -Id.
inline TangentVector apply_complex_structure(const ManifoldPoint& p, const MetricSpec& spec,
                                             const TangentVector& v) {
    check_chart_domain(p, spec);
    const double x3 = p.x * p.x * p.x;
    return {-(x3 / 2.0) * v.vtau, (2.0 / x3) * v.vx, -v.vy2, v.vy1};
}

}  // namespace wpflow
