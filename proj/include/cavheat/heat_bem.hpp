#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cluster.hpp"
#include "foldy_lax.hpp"
#include "heat_kernel.hpp"
#include "laplace_bem.hpp"
#include "tri_mesh.hpp"

namespace cavheat {

/// Space-time boundary density: piecewise constant per panel and per time
/// step.  values(p, m) is the density on panel p over the step
/// (t_{m-1}, t_m]; column 0 is identically zero (sigma(., 0) = 0 for sources
/// vanishing at t = 0).
struct SpaceTimeDensity {
    std::vector<TriMesh> meshes;
    TimeGrid grid;
    std::vector<int> panel_offset;  // per cavity, size cavities + 1
    std::vector<double> values;     // row-major, total_panels x node_count

    int total_panels() const { return panel_offset.back(); }
    double value(int p, int m) const { return values[p * grid.node_count() + m]; }
    double& value(int p, int m) { return values[p * grid.node_count() + m]; }

    /// Total charge q_i(t_k) = int_{bd D_i} sigma ds of one cavity.
    double cavity_charge(int cavity, int k) const {
        double q = 0.0;
        const TriMesh& mesh = meshes[cavity];
        for (int p = panel_offset[cavity]; p < panel_offset[cavity + 1]; ++p)
            q += value(p, k) * mesh.areas[p - panel_offset[cavity]];
        return q;
    }
};

namespace detail {

struct PanelGeometry {
    std::vector<Vec3> centroids;
    std::vector<double> areas;
    std::vector<double> self_radius;     // area-equivalent disk radius
    std::vector<double> self_potential;  // analytic Laplace self integral
    std::vector<Vec3> normals;
};

inline PanelGeometry flatten_panels(const std::vector<TriMesh>& meshes) {
    PanelGeometry g;
    for (const auto& mesh : meshes) {
        for (int p = 0; p < mesh.panel_count(); ++p) {
            g.centroids.push_back(mesh.centroids[p]);
            g.areas.push_back(mesh.areas[p]);
            g.self_radius.push_back(std::sqrt(mesh.areas[p] / kPi));
            g.self_potential.push_back(tri_potential(mesh.centroids[p], mesh, p));
            g.normals.push_back(mesh.normals[p]);
        }
    }
    return g;
}

}  // namespace detail

/// Marching-on-in-time collocation solve of the first-kind system
///
///   sum_j S_{(bd D_j)_T}[sigma_j](x, t) = f(x, t)  on every cavity surface,
///
/// with piecewise-constant densities in space and time.  The time convolution
/// uses exact per-step erfc weights at the centroid distance; the self entry
/// couples the analytic planar-triangle 1/r integral with the exact time
/// decay at the area-equivalent disk radius, so the scheme's steady state
/// reproduces the Laplace collocation system exactly.  The current-step
/// matrix is identical at every step: factor once, reuse.
inline SpaceTimeDensity solve_boundary_density(const std::vector<TriMesh>& meshes,
                                               const SourceSpec& source,
                                               const TimeGrid& grid) {
    for (const auto& mesh : meshes)
        if (mesh.panel_count() > 2000)
            throw std::invalid_argument("oracle scale exceeded: panels per cavity");
    if (grid.n_steps > 400)
        throw std::invalid_argument("oracle scale exceeded: time steps");

    SpaceTimeDensity st;
    st.meshes = meshes;
    st.grid = grid;
    st.panel_offset.assign(1, 0);
    for (const auto& mesh : meshes)
        st.panel_offset.push_back(st.panel_offset.back() + mesh.panel_count());

    const int n = st.total_panels();
    const int nn = grid.node_count();
    const double dt = grid.dt();
    const auto geom = detail::flatten_panels(st.meshes);

    // Cumulative window kernel per unordered off-diagonal pair and lag:
    // win(r_pq, lag * dt) = erfc(r / (2 sqrt(lag dt))) / (4 pi r).
    // The step weight is a difference of consecutive lags times the source
    // panel area.  Falls back to on-the-fly evaluation when the table would
    // not fit in memory.
    const std::size_t pair_count = static_cast<std::size_t>(n) * (n - 1) / 2;
    const bool use_table = pair_count * nn * sizeof(double) < 1.1e9;

    std::vector<double> win_table;
    std::vector<double> pair_dist(pair_count);
    {
        std::size_t idx = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q)
                pair_dist[idx++] = distance(geom.centroids[p], geom.centroids[q]);
    }
    if (use_table) {
        win_table.assign(pair_count * nn, 0.0);
        for (std::size_t pr = 0; pr < pair_count; ++pr) {
            const double r = pair_dist[pr];
            double* row = &win_table[pr * nn];
            for (int lag = 1; lag < nn; ++lag)
                row[lag] = time_integral_phi_window(r, lag * dt);
        }
    }

    // self time factors: g_p(lag) = erfc(R_p / (2 sqrt(lag dt))), summing to 1
    std::vector<double> self_g(static_cast<std::size_t>(n) * nn, 0.0);
    for (int p = 0; p < n; ++p)
        for (int lag = 1; lag < nn; ++lag)
            self_g[p * nn + lag] =
                special::erfc(geom.self_radius[p] / (2.0 * std::sqrt(lag * dt)));

    // current-step collocation matrix
    Eigen::MatrixXd a(n, n);
    {
        std::size_t idx = 0;
        for (int p = 0; p < n; ++p) {
            a(p, p) = geom.self_potential[p] * self_g[p * nn + 1];
            for (int q = p + 1; q < n; ++q, ++idx) {
                const double w =
                    use_table ? win_table[idx * nn + 1]
                              : time_integral_phi_window(pair_dist[idx], dt);
                a(p, q) = geom.areas[q] * w;
                a(q, p) = geom.areas[p] * w;
            }
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-13))
        throw std::runtime_error("time step too large for mesh");

    st.values.assign(static_cast<std::size_t>(n) * nn, 0.0);

    Eigen::VectorXd rhs(n);
    for (int k = 1; k < nn; ++k) {
        const double tk = grid.node(k);
        for (int p = 0; p < n; ++p) {
            double acc = source(geom.centroids[p], tk);
            // self memory
            const double* g = &self_g[static_cast<std::size_t>(p) * nn];
            const double* sp = &st.values[static_cast<std::size_t>(p) * nn];
            double conv = 0.0;
            for (int lag = 1; lag < k; ++lag)
                conv += (g[lag + 1] - g[lag]) * sp[k - lag];
            acc -= geom.self_potential[p] * conv;
            rhs(p) = acc;
        }
        // pair memory
        std::size_t idx = 0;
        for (int p = 0; p < n; ++p) {
            const double* sp = &st.values[static_cast<std::size_t>(p) * nn];
            for (int q = p + 1; q < n; ++q, ++idx) {
                const double* sq = &st.values[static_cast<std::size_t>(q) * nn];
                double s_pq = 0.0;  // against sigma_q, lands in row p
                double s_qp = 0.0;  // against sigma_p, lands in row q
                if (use_table) {
                    const double* row = &win_table[idx * nn];
                    for (int lag = 1; lag < k; ++lag) {
                        const double dw = row[lag + 1] - row[lag];
                        s_pq += dw * sq[k - lag];
                        s_qp += dw * sp[k - lag];
                    }
                } else {
                    const double r = pair_dist[idx];
                    double lo = time_integral_phi_window(r, dt);
                    for (int lag = 1; lag < k; ++lag) {
                        const double hi = time_integral_phi_window(r, (lag + 1) * dt);
                        const double dw = hi - lo;
                        s_pq += dw * sq[k - lag];
                        s_qp += dw * sp[k - lag];
                        lo = hi;
                    }
                }
                rhs(p) -= geom.areas[q] * s_pq;
                rhs(q) -= geom.areas[p] * s_qp;
            }
        }
        const Eigen::VectorXd sol = lu.solve(rhs);
        for (int p = 0; p < n; ++p) st.value(p, k) = sol(p);
    }
    return st;
}

/// Convenience: scaled copies of one base mesh at the cluster centers.
inline std::vector<TriMesh> cluster_meshes(const Cluster& cluster,
                                           const TriMesh& base) {
    std::vector<TriMesh> meshes;
    meshes.reserve(cluster.size());
    for (const auto& z : cluster.centers)
        meshes.push_back(scale_translate(base, cluster.eps, z));
    return meshes;
}

/// Single-layer heat potential of a stored density at (x, t):
/// u(x, t) = sum_p area_p sum_m sigma_p^{(m)} int_{step m} Phi dtau with the
/// exact erfc step weights; the final step is clipped at t automatically.
inline double eval_single_layer(const SpaceTimeDensity& st, const Vec3& x, double t) {
    if (t <= 0.0) return 0.0;
    const int nn = st.grid.node_count();
    const double dt = st.grid.dt();
    double u = 0.0;
    int panel = 0;
    for (const auto& mesh : st.meshes) {
        for (int p = 0; p < mesh.panel_count(); ++p, ++panel) {
            const double r = distance(x, mesh.centroids[p]);
            const double* sp = &st.values[static_cast<std::size_t>(panel) * nn];
            double acc = 0.0;
            double hi = time_integral_phi_window(r, t);  // window back to tau=0
            for (int m = 1; m < nn; ++m) {
                const double lo = time_integral_phi_window(r, t - m * dt);
                acc += (hi - lo) * sp[m];
                if (lo == 0.0) break;  // remaining steps start past t
                hi = lo;
            }
            u += mesh.areas[p] * acc;
        }
    }
    return u;
}

/// Reference exterior field; rejects evaluation inside a cavity.
inline double eval_reference_field(const SpaceTimeDensity& st,
                                   const Cluster& cluster, const Vec3& x, double t) {
    if (cluster.point_inside_any_cavity(x))
        throw std::invalid_argument("evaluation point inside cavity");
    if (t > st.grid.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("beyond simulated horizon");
    return eval_single_layer(st, x, t);
}

/// Time-quadrature density of the harmonic reformulation,
///   phi(x, y_p, t) = int_0^t |x-y| / (2 sqrt(pi) (t-tau)^{3/2})
///                    exp(-|x-y|^2 / (4 (t-tau))) sigma_p(tau) dtau,
/// evaluated with exact per-step weights (the kernel is d/ds erfc(r/2 sqrt s)).
/// Converges to sigma_p(t) as x -> panel centroid.
inline double harmonic_density(const SpaceTimeDensity& st, int panel, const Vec3& x,
                               double t) {
    int cavity = 0;
    while (panel >= st.panel_offset[cavity + 1]) ++cavity;
    const Vec3& y = st.meshes[cavity].centroids[panel - st.panel_offset[cavity]];
    const double r = distance(x, y);
    const int nn = st.grid.node_count();
    const double dt = st.grid.dt();
    const double* sp = &st.values[static_cast<std::size_t>(panel) * nn];
    auto g = [&](double s) {
        return (s <= 0.0) ? 0.0 : special::erfc(r / (2.0 * std::sqrt(s)));
    };
    double acc = 0.0;
    double hi = g(t);
    for (int m = 1; m < nn; ++m) {
        const double lo = g(t - m * dt);
        acc += (hi - lo) * sp[m];
        if (lo == 0.0) break;
        hi = lo;
    }
    return acc;
}

}  // namespace cavheat
