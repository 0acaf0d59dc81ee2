#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tri_mesh.hpp"
#include "vec3.hpp"

namespace cavheat {

/// A cluster of identical small cavities D_j = eps * B + z_j.
///
/// Pairwise cavity gaps are computed as center distance minus the two
/// circumradii: exact for spheres, conservative (an underestimate of the set
/// distance) for other shapes, which keeps the separation condition checkable
/// without surface-to-surface minimization.
struct Cluster {
    double eps = 0.0;
    std::vector<Vec3> centers;
    ReferenceShape shape;

    int size() const { return static_cast<int>(centers.size()); }

    /// Common cavity diameter a = eps * diam(B).
    double cavity_diameter() const { return eps * shape.diameter(); }

    /// Conservative cavity radius eps * max |surface point of B|.
    double cavity_radius() const { return eps * shape.circumradius(); }

    double gap(int i, int j) const {
        return distance(centers[i], centers[j]) - 2.0 * cavity_radius();
    }

    /// Minimum pairwise gap d; +inf for a single cavity.
    double min_gap() const {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < size(); ++i)
            for (int j = i + 1; j < size(); ++j) d = std::min(d, gap(i, j));
        return d;
    }

    bool point_inside_any_cavity(const Vec3& x) const {
        const double r = cavity_radius();
        for (const auto& z : centers)
            if (distance(x, z) < r) return true;
        return false;
    }
};

inline Cluster cluster_from_centers(ReferenceShape shape, double eps,
                                    std::vector<Vec3> centers) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    Cluster c{eps, std::move(centers), std::move(shape)};
    if (c.size() > 1 && !(c.min_gap() > 0.0))
        throw std::invalid_argument("overlapping cavities");
    return c;
}

/// Periodic-style subdivision of a box domain into cell_count cells of
/// volume a, one cavity per cell.
struct OmegaPartition {
    Box omega;
    int cell_count = 0;
    std::array<int, 3> grid_dims{1, 1, 1};
    Vec3 cell_dims;          // per-axis cell side; cubic iff all equal
    double cell_volume = 0;  // = a
    Box tiled;               // sub-box actually covered by whole cells
    std::vector<Vec3> cell_centers;
};

namespace detail {

// Factor m into three integers as close to cubic as the divisors allow,
// returned in descending order.
inline std::array<int, 3> near_cubic_factors(int m) {
    int n3 = 1;
    for (int k = 1; k * k * k <= m; ++k)
        if (m % k == 0) n3 = k;
    const int m2 = m / n3;
    int n2 = 1;
    for (int k = 1; k * k <= m2; ++k)
        if (m2 % k == 0) n2 = k;
    const int n1 = m2 / n2;
    std::array<int, 3> f{n1, n2, n3};
    std::sort(f.begin(), f.end(), std::greater<int>());
    return f;
}

}  // namespace detail

/// Divide omega into [1/a] disjoint cells of volume a (near-cubic boxes,
/// centered in omega), place one cavity of diameter exactly a at each cell
/// center.  d0 > 1 is the separation parameter of the lattice regime.
inline std::pair<Cluster, OmegaPartition> build_cluster(const Box& omega, double a,
                                                        double d0,
                                                        const ReferenceShape& shape) {
    if (!(d0 > 1.0)) throw std::invalid_argument("violates separation condition");
    if (!(a > 0.0) || a > 1.0)
        throw std::invalid_argument("a must lie in (0, 1] so that [1/a] >= 1");

    // floor per the convention n <= x < n+1
    const int m = static_cast<int>(std::floor(1.0 / a));

    const auto factors = detail::near_cubic_factors(m);
    const Vec3 ext = omega.extent();

    // assign larger factor counts to longer axes
    std::array<int, 3> axis_order{0, 1, 2};
    std::sort(axis_order.begin(), axis_order.end(),
              [&](int i, int j) { return ext[i] > ext[j]; });
    std::array<int, 3> n{1, 1, 1};
    for (int k = 0; k < 3; ++k) n[axis_order[k]] = factors[k];

    // scale per-axis cell sides so each cell has volume exactly a
    const double s = std::cbrt(a * m / omega.volume());
    if (s > 1.0 + 1e-12)
        throw std::invalid_argument("domain too small for requested subdivision");
    const Vec3 cell{s * ext.x / n[0], s * ext.y / n[1], s * ext.z / n[2]};

    OmegaPartition part;
    part.omega = omega;
    part.cell_count = m;
    part.grid_dims = n;
    part.cell_dims = cell;
    part.cell_volume = a;
    const Vec3 covered{cell.x * n[0], cell.y * n[1], cell.z * n[2]};
    part.tiled.lo = omega.lo + (ext - covered) * 0.5;
    part.tiled.hi = part.tiled.lo + covered;

    part.cell_centers.reserve(m);
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i)
                part.cell_centers.push_back(part.tiled.lo +
                                            Vec3{(i + 0.5) * cell.x,
                                                 (j + 0.5) * cell.y,
                                                 (k + 0.5) * cell.z});

    const double eps = a / shape.diameter();
    const double cavity_extent = 2.0 * eps * shape.circumradius();
    if (cavity_extent > std::min({cell.x, cell.y, cell.z}) + 1e-15)
        throw std::invalid_argument("cavity too large for cell");

    Cluster cluster = cluster_from_centers(shape, eps, part.cell_centers);
    return {std::move(cluster), std::move(part)};
}

struct ConditionReport {
    bool holds = false;
    double value = 0.0;
};

/// Cluster separation condition: a * max_i sum_{j != i} d_ij^{-2} < 1.
inline ConditionReport check_condition(const Cluster& cluster) {
    const double a = cluster.cavity_diameter();
    double worst = 0.0;
    for (int i = 0; i < cluster.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < cluster.size(); ++j) {
            if (j == i) continue;
            const double d = cluster.gap(i, j);
            s += 1.0 / (d * d);
        }
        worst = std::max(worst, s);
    }
    const double value = a * worst;
    return {value < 1.0, value};
}

/// CSV export with columns j, z_x, z_y, z_z, eps.
inline void write_cluster_csv(std::ostream& os, const Cluster& cluster) {
    os << "j,z_x,z_y,z_z,eps\n";
    char buf[160];
    for (int j = 0; j < cluster.size(); ++j) {
        const Vec3& z = cluster.centers[j];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", j, z.x, z.y,
                      z.z, cluster.eps);
        os << buf;
    }
}

}  // namespace cavheat
