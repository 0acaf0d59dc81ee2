#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heat_kernel.hpp"
#include "tri_mesh.hpp"
#include "vec3.hpp"

namespace cavheat {

/// Potential of a unit constant density on a planar triangle,
///
///   I(p) = int_T 1 / (4 pi |p - y|) dA(y),
///
/// by the classical edge decomposition (Wilton et al. style): per edge a
/// log term along the edge and an arctangent solid-angle term.  Finite for
/// all p including points inside or on the triangle.
inline double tri_potential(const Vec3& p, const Vec3& v0, const Vec3& v1,
                            const Vec3& v2) {
    const Vec3 cr = (v1 - v0).cross(v2 - v0);
    const double two_area = cr.norm();
    if (!(two_area > 0.0)) throw std::runtime_error("degenerate panel");
    const Vec3 nhat = cr / two_area;
    const double d = (p - v0).dot(nhat);  // signed height above the plane
    const double ad = std::abs(d);
    const Vec3 rho = p - nhat * d;        // in-plane projection

    const double scale = std::sqrt(two_area);
    const double tiny = 1e-13 * scale;

    const Vec3* verts[4] = {&v0, &v1, &v2, &v0};
    double sum = 0.0;
    for (int e = 0; e < 3; ++e) {
        const Vec3& a = *verts[e];
        const Vec3& b = *verts[e + 1];
        const Vec3 edge = b - a;
        const double len = edge.norm();
        const Vec3 lhat = edge / len;
        const Vec3 uhat = lhat.cross(nhat);  // in-plane outward edge normal
        const double t0 = (a - rho).dot(uhat);
        const double sm = (a - rho).dot(lhat);
        const double sp = (b - rho).dot(lhat);
        const double r0sq = t0 * t0 + d * d;
        const double rm = std::sqrt(sm * sm + r0sq);
        const double rp = std::sqrt(sp * sp + r0sq);

        if (std::abs(t0) > tiny) {
            // stable form of log((rp + sp) / (rm + sm))
            double logterm;
            if (sp + sm >= 0.0)
                logterm = std::log((rp + sp) / (rm + sm));
            else
                logterm = std::log((rm - sm) / (rp - sp));
            sum += t0 * logterm;
        }
        if (ad > tiny) {
            sum -= ad * (std::atan2(t0 * sp, r0sq + ad * rp) -
                         std::atan2(t0 * sm, r0sq + ad * rm));
        }
    }
    return sum / kFourPi;
}

inline double tri_potential(const Vec3& p, const TriMesh& mesh, int panel) {
    const auto& t = mesh.triangles[panel];
    return tri_potential(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                         mesh.vertices[t[2]]);
}

/// Piecewise-constant surface density (one value per panel, units 1/length).
struct PanelDensity {
    const TriMesh* mesh = nullptr;
    std::vector<double> values;
};

/// Newtonian capacitance C = int_bd S^{-1}[1]; positive, dilation-covariant.
struct Capacitance {
    double value = 0.0;
};

/// Dense collocation matrix of the Laplace single-layer operator:
/// entry (p, q) = int_{panel q} 1 / (4 pi |x_p - y|) dA(y) at centroid x_p.
/// All entries, including the diagonal, use the analytic triangle potential.
inline Eigen::MatrixXd assemble_single_layer(const TriMesh& mesh) {
    const int n = mesh.panel_count();
    Eigen::MatrixXd a(n, n);
    for (int q = 0; q < n; ++q) {
        const auto& t = mesh.triangles[q];
        const Vec3& w0 = mesh.vertices[t[0]];
        const Vec3& w1 = mesh.vertices[t[1]];
        const Vec3& w2 = mesh.vertices[t[2]];
        for (int p = 0; p < n; ++p)
            a(p, q) = tri_potential(mesh.centroids[p], w0, w1, w2);
    }
    return a;
}

/// Solve S[sigma] = 1 on the surface and return C = sum_q sigma_q area_q
/// together with the equilibrium density.
inline std::pair<Capacitance, PanelDensity> capacitance(const TriMesh& mesh) {
    if (!mesh.is_closed()) throw std::runtime_error("open surface");
    const int n = mesh.panel_count();
    const Eigen::MatrixXd a = assemble_single_layer(mesh);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-12))
        throw std::runtime_error("ill-conditioned capacitance system");
    const Eigen::VectorXd sigma = lu.solve(Eigen::VectorXd::Ones(n));

    PanelDensity density{&mesh, std::vector<double>(sigma.data(), sigma.data() + n)};
    double c = 0.0;
    for (int q = 0; q < n; ++q) c += sigma(q) * mesh.areas[q];
    return {Capacitance{c}, std::move(density)};
}

}  // namespace cavheat
