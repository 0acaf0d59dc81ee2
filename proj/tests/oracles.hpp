#pragma once

// Test-only oracles, written independently of the library code paths they
// check: plain quadrature against raw integrands, a long-double erfc, Duffy
// splits for the singular triangle integral, and a fixed-point solver for
// the coupled Volterra system.

#include <cavheat/cluster.hpp>
#include <cavheat/foldy_lax.hpp>
#include <cavheat/vec3.hpp>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using cavheat::Vec3;

// --- generic adaptive Simpson (long double) -------------------------------

template <class F>
long double simpson_rec(const F& f, long double a, long double b, long double fa,
                        long double fm, long double fb, long double whole,
                        long double tol, int depth) {
    const long double m = (a + b) / 2;
    const long double flm = f((a + m) / 2);
    const long double frm = f((m + b) / 2);
    const long double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const long double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const long double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol)
        return left + right + delta / 15;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <class F>
long double integrate(const F& f, long double a, long double b,
                      long double tol = 1e-15L, int depth = 52) {
    if (a == b) return 0.0L;
    const long double m = (a + b) / 2;
    const long double fa = f(a), fm = f(m), fb = f(b);
    const long double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// --- erfc via its integral representation ---------------------------------
// erfc(x) = (2/sqrt(pi)) exp(-x^2) int_0^inf exp(-2xu - u^2) du for x >= 0.

inline long double erfc_reference(long double x) {
    if (x < 0) return 2.0L - erfc_reference(-x);
    const long double umax = std::min<long double>(40.0L, 60.0L / (2 * x + 1) + 8.0L);
    const long double integral = integrate(
        [x](long double u) { return std::exp(-2 * x * u - u * u); }, 0.0L, umax,
        1e-21L, 60);
    const long double two_over_sqrt_pi = 1.1283791670955125738961589031215L;
    return two_over_sqrt_pi * std::exp(-x * x) * integral;
}

// --- raw heat-kernel time integral -----------------------------------------
// int_{t0}^{t1} Phi(r; t - tau) dtau straight from the Gaussian, with the
// interval pre-split geometrically toward tau = t so the boundary layer at
// small r is resolved without insight from the closed form under test.

inline long double phi_radial_raw(long double r, long double s) {
    if (s <= 0) return 0.0L;
    const long double pi = 3.14159265358979323846264338328L;
    const long double c = 4 * pi * s;
    const long double q = r * r / (4 * s);
    if (q > 11000) return 0.0L;
    return std::exp(-q) / (c * std::sqrt(c));
}

inline long double time_integral_phi_reference(double r, double t0, double t1,
                                               double t) {
    const long double R = r;
    auto f = [R, t](long double tau) { return phi_radial_raw(R, t - tau); };
    // split [t0, t1]: uniform part away from tau = t, then dyadic refinement
    // of the last r^2-scaled layer
    std::vector<long double> cuts{static_cast<long double>(t0)};
    const long double layer = std::min<long double>(
        static_cast<long double>(t1) - t0, 100.0L * R * R);
    long double edge = static_cast<long double>(t1) - layer;
    if (edge > t0) cuts.push_back(edge);
    for (long double w = layer / 2; w > 1e-22L && t1 - w > cuts.back();
         w /= 2)
        cuts.push_back(static_cast<long double>(t1) - w);
    cuts.push_back(static_cast<long double>(t1));
    long double total = 0.0L;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate(f, cuts[i], cuts[i + 1], 1e-18L, 54);
    return total;
}

// --- Gauss-Legendre nodes for the whole-space mass check -------------------

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * xi * p1 - j * p2) / (j + 1);
            }
            const double dp = n * (xi * p0 - p1) / (xi * xi - 1.0);
            const double step = p0 / dp;
            xi -= step;
            if (std::abs(step) < 1e-15) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2 * j + 1) * xi * p1 - j * p2) / (j + 1);
        }
        const double dp = n * (xi * p0 - p1) / (xi * xi - 1.0);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
}

// --- Duffy-style split for int_T 1/(4 pi |p - y|) dA -----------------------
// For p strictly inside the triangle: split at p; each corner-singular piece
// reduces to a 1D integral, int_0^1 2A_sub / |(a - p) + v (b - a)| dv.

inline long double tri_potential_inside(const Vec3& p, const Vec3& v0,
                                        const Vec3& v1, const Vec3& v2) {
    const Vec3* verts[4] = {&v0, &v1, &v2, &v0};
    long double total = 0.0L;
    for (int e = 0; e < 3; ++e) {
        const Vec3 a = *verts[e] - p;
        const Vec3 d = *verts[e + 1] - *verts[e];
        const double two_area = a.cross(a + d).norm();
        auto f = [&](long double v) {
            const Vec3 q = a + d * static_cast<double>(v);
            return static_cast<long double>(two_area) / q.norm();
        };
        total += integrate(f, 0.0L, 1.0L, 1e-16L, 50);
    }
    const long double pi = 3.14159265358979323846264338328L;
    return total / (4 * pi);
}

// Plain subdivision quadrature (centroid rule, 4^k children) for points
// away from the panel.
inline double tri_potential_far(const Vec3& p, const Vec3& v0, const Vec3& v1,
                                const Vec3& v2, int levels = 6) {
    struct T {
        Vec3 a, b, c;
    };
    std::vector<T> tris{{v0, v1, v2}};
    for (int l = 0; l < levels; ++l) {
        std::vector<T> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const Vec3 ab = (t.a + t.b) * 0.5;
            const Vec3 bc = (t.b + t.c) * 0.5;
            const Vec3 ca = (t.c + t.a) * 0.5;
            next.push_back({t.a, ab, ca});
            next.push_back({ab, t.b, bc});
            next.push_back({ca, bc, t.c});
            next.push_back({ab, bc, ca});
        }
        tris.swap(next);
    }
    double total = 0.0;
    for (const auto& t : tris) {
        const double area = 0.5 * (t.b - t.a).cross(t.c - t.a).norm();
        const Vec3 cen = (t.a + t.b + t.c) / 3.0;
        total += area / (p - cen).norm();
    }
    return total / (4.0 * M_PI);
}

// --- fixed-point (Picard) solution of the coupled Volterra system ----------
// Same trapezoidal quadrature as the march but iterated to a fixed point on
// its own (typically finer) grid.

inline cavheat::DensityHistory picard_alphas(const cavheat::Cluster& cluster,
                                             const std::vector<cavheat::Capacitance>& caps,
                                             const cavheat::SourceSpec& source,
                                             const cavheat::TimeGrid& grid,
                                             double tol = 1e-12, int max_iter = 200) {
    using namespace cavheat;
    const int m = cluster.size();
    const int nn = grid.node_count();
    const double dt = grid.dt();

    DensityHistory f;
    f.grid = grid;
    f.cavity_count = m;
    f.alphas.assign(static_cast<std::size_t>(m) * nn, 0.0);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < nn; ++k)
            f.value(i, k) = source(cluster.centers[i], grid.node(k));

    DensityHistory cur = f;
    for (int iter = 0; iter < max_iter; ++iter) {
        DensityHistory next = f;
        double change = 0.0;
        for (int i = 0; i < m; ++i)
            for (int k = 1; k < nn; ++k) {
                double acc = f.value(i, k);
                for (int j = 0; j < m; ++j) {
                    if (j == i) continue;
                    const double r = distance(cluster.centers[i], cluster.centers[j]);
                    double conv = 0.5 * eval_phi_radial(r, grid.node(k)) *
                                  cur.value(j, 0);
                    for (int mm = 1; mm < k; ++mm)
                        conv += eval_phi_radial(r, grid.node(k) - grid.node(mm)) *
                                cur.value(j, mm);
                    acc -= caps[j].value * dt * conv;
                }
                change = std::max(change, std::abs(acc - cur.value(i, k)));
                next.value(i, k) = acc;
            }
        cur = next;
        if (change < tol) break;
    }
    return cur;
}

// --- misc -------------------------------------------------------------------

inline double trapezoid_l2(const std::vector<double>& vals, double dt) {
    double s = 0.0;
    const int n = static_cast<int>(vals.size());
    for (int k = 0; k < n; ++k) {
        const double w = (k == 0 || k == n - 1) ? 0.5 * dt : dt;
        s += w * vals[k] * vals[k];
    }
    return std::sqrt(s);
}

}  // namespace oracles
