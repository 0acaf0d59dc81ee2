#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cluster.hpp"
#include "foldy_lax.hpp"
#include "heat_kernel.hpp"
#include "vec3.hpp"

namespace cavheat {

/// Uniform cell decomposition of the effective domain Omega.  General
/// domains are supplied as an inside-mask over a bounding box.
struct VoxelGrid {
    Box omega;
    std::array<int, 3> dims{1, 1, 1};
    Vec3 spacing;
    double cell_volume = 0.0;
    std::vector<std::uint8_t> mask;  // 1 = cell belongs to Omega
    std::vector<int> inside;         // linear indices of inside cells

    int cell_count() const { return dims[0] * dims[1] * dims[2]; }
    int inside_count() const { return static_cast<int>(inside.size()); }

    int linear(int i, int j, int k) const {
        return i + dims[0] * (j + dims[1] * k);
    }
    std::array<int, 3> unpack(int lin) const {
        const int i = lin % dims[0];
        const int j = (lin / dims[0]) % dims[1];
        const int k = lin / (dims[0] * dims[1]);
        return {i, j, k};
    }
    Vec3 center(int lin) const {
        const auto ijk = unpack(lin);
        return omega.lo + Vec3{(ijk[0] + 0.5) * spacing.x, (ijk[1] + 0.5) * spacing.y,
                               (ijk[2] + 0.5) * spacing.z};
    }

    void rebuild_inside() {
        inside.clear();
        for (int c = 0; c < cell_count(); ++c)
            if (mask.empty() || mask[c]) inside.push_back(c);
    }

    static VoxelGrid from_box(const Box& box, std::array<int, 3> dims) {
        VoxelGrid g;
        g.omega = box;
        g.dims = dims;
        const Vec3 e = box.extent();
        g.spacing = {e.x / dims[0], e.y / dims[1], e.z / dims[2]};
        g.cell_volume = g.spacing.x * g.spacing.y * g.spacing.z;
        g.rebuild_inside();
        return g;
    }

    /// Grid whose cells coincide with the cluster partition cells.
    static VoxelGrid from_partition(const OmegaPartition& part) {
        VoxelGrid g = from_box(part.tiled, part.grid_dims);
        return g;
    }

    /// Ball domain via masking: a cell is inside iff its center is.
    static VoxelGrid ball_mask(const Box& box, std::array<int, 3> dims,
                               const Vec3& center, double radius) {
        VoxelGrid g = from_box(box, dims);
        g.mask.assign(g.cell_count(), 0);
        for (int c = 0; c < g.cell_count(); ++c)
            g.mask[c] = distance(g.center(c), center) <= radius ? 1 : 0;
        g.rebuild_inside();
        return g;
    }

    bool point_in_domain(const Vec3& p) const {
        if (!omega.contains(p)) return false;
        if (mask.empty()) return true;
        auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
        const int i = clampi(static_cast<int>((p.x - omega.lo.x) / spacing.x), dims[0]);
        const int j = clampi(static_cast<int>((p.y - omega.lo.y) / spacing.y), dims[1]);
        const int k = clampi(static_cast<int>((p.z - omega.lo.z) / spacing.z), dims[2]);
        return mask[linear(i, j, k)] != 0;
    }
};

/// Nodal values v(z_c, t_k) on the inside cells of a voxel grid.
struct VolumeDensityHistory {
    VoxelGrid grid;
    TimeGrid tgrid;
    std::vector<double> values;  // row-major, inside_count x node_count

    double value(int c, int k) const { return values[c * tgrid.node_count() + k]; }
    double& value(int c, int k) { return values[c * tgrid.node_count() + k]; }
};

namespace detail {

/// Shared quadrature tables of the volume potential discretization: exact
/// erfc window kernels per geometric cell offset and the volume-equivalent
/// ball weights for the self cell.
struct VolumeWeights {
    std::array<int, 3> dims;
    int nn = 0;
    std::vector<double> win;      // [offset][lag]: erfc window at offset distance
    std::vector<double> self_w;   // [lag]: int over step of in-ball heat mass
    double ball_radius = 0.0;

    int offset_index(const std::array<int, 3>& a, const std::array<int, 3>& b) const {
        const int di = a[0] - b[0] + dims[0] - 1;
        const int dj = a[1] - b[1] + dims[1] - 1;
        const int dk = a[2] - b[2] + dims[2] - 1;
        return di + (2 * dims[0] - 1) * (dj + (2 * dims[1] - 1) * dk);
    }
};

inline VolumeWeights build_volume_weights(const VoxelGrid& grid,
                                          const TimeGrid& tgrid) {
    VolumeWeights w;
    w.dims = grid.dims;
    w.nn = tgrid.node_count();
    const double dt = tgrid.dt();
    const int ox = 2 * grid.dims[0] - 1;
    const int oy = 2 * grid.dims[1] - 1;
    const int oz = 2 * grid.dims[2] - 1;
    w.win.assign(static_cast<std::size_t>(ox) * oy * oz * w.nn, 0.0);
    for (int dk = 0; dk < oz; ++dk)
        for (int dj = 0; dj < oy; ++dj)
            for (int di = 0; di < ox; ++di) {
                const double rx = (di - grid.dims[0] + 1) * grid.spacing.x;
                const double ry = (dj - grid.dims[1] + 1) * grid.spacing.y;
                const double rz = (dk - grid.dims[2] + 1) * grid.spacing.z;
                const double r = std::sqrt(rx * rx + ry * ry + rz * rz);
                if (r == 0.0) continue;  // self handled by ball weights
                double* row =
                    &w.win[(static_cast<std::size_t>(di) +
                            static_cast<std::size_t>(ox) * (dj + static_cast<std::size_t>(oy) * dk)) *
                           w.nn];
                for (int lag = 1; lag < w.nn; ++lag)
                    row[lag] = time_integral_phi_window(r, lag * dt);
            }
    w.ball_radius = std::cbrt(3.0 * grid.cell_volume / (4.0 * kPi));
    w.self_w.resize(w.nn - 1);
    for (int lag = 0; lag + 1 < w.nn; ++lag)
        w.self_w[lag] = ball_self_weight(w.ball_radius, lag * dt, (lag + 1) * dt);
    return w;
}

}  // namespace detail

/// Action of the discretized volume heat potential on nodal values:
///
///   V[f](z_c, t_k) ~= int_0^{t_k} int_Omega Phi(z_c, t_k; z, tau) f(z, tau)
///
/// with per-step/right-node product integration: cell volume times the exact
/// erfc window at the center distance for distinct cells, and the
/// volume-equivalent-ball space-time weight for the self cell.  The
/// instantaneous off-diagonal coupling (lag 0) is dropped; the kernel mass a
/// step deposits outside its own cell within one dt is what makes the
/// marching update explicit.
inline VolumeDensityHistory apply_volume_potential(const VolumeDensityHistory& f) {
    const VoxelGrid& grid = f.grid;
    const TimeGrid& tgrid = f.tgrid;
    const auto w = detail::build_volume_weights(grid, tgrid);
    const int nn = tgrid.node_count();
    const int nc = grid.inside_count();
    std::vector<std::array<int, 3>> ijk(nc);
    for (int c = 0; c < nc; ++c) ijk[c] = grid.unpack(grid.inside[c]);

    VolumeDensityHistory out;
    out.grid = grid;
    out.tgrid = tgrid;
    out.values.assign(f.values.size(), 0.0);
    const double vol = grid.cell_volume;
    for (int k = 1; k < nn; ++k) {
        for (int c = 0; c < nc; ++c) {
            double acc = 0.0;
            for (int c2 = 0; c2 < nc; ++c2) {
                if (c2 == c) continue;
                const double* row = &w.win[static_cast<std::size_t>(
                                               w.offset_index(ijk[c], ijk[c2])) *
                                           nn];
                const double* fv = &f.values[static_cast<std::size_t>(c2) * nn];
                double s = 0.0;
                for (int lag = 1; lag < k; ++lag)
                    s += (row[lag + 1] - row[lag]) * fv[k - lag];
                acc += vol * s;
            }
            const double* fc = &f.values[static_cast<std::size_t>(c) * nn];
            for (int lag = 0; lag < k; ++lag) acc += w.self_w[lag] * fc[k - lag];
            out.value(c, k) = acc;
        }
    }
    return out;
}

/// Solve the volume integral equation
///
///   v(x, t) + c_bar int_0^t int_Omega Phi(x, t; z, tau) v(z, tau) dz dtau
///     = f(x, t)
///
/// on the voxel grid by marching in time.  The only current-step coupling is
/// the self-cell ball weight, which turns each step into a diagonally
/// perturbed explicit update.  Solvable for any c_bar >= 0.
inline VolumeDensityHistory solve_v(const VoxelGrid& grid, double c_bar,
                                    const SourceSpec& source, const TimeGrid& tgrid) {
    if (c_bar < 0.0) throw std::invalid_argument("c_bar must be nonnegative");
    if (source.is_point && grid.point_in_domain(source.z_star))
        throw std::invalid_argument("source inside effective domain");

    const auto w = detail::build_volume_weights(grid, tgrid);
    const int nn = tgrid.node_count();
    const int nc = grid.inside_count();
    std::vector<std::array<int, 3>> ijk(nc);
    std::vector<Vec3> centers(nc);
    for (int c = 0; c < nc; ++c) {
        ijk[c] = grid.unpack(grid.inside[c]);
        centers[c] = grid.center(grid.inside[c]);
    }

    VolumeDensityHistory v;
    v.grid = grid;
    v.tgrid = tgrid;
    v.values.assign(static_cast<std::size_t>(nc) * nn, 0.0);

    const double vol = grid.cell_volume;
    const double diag = 1.0 + c_bar * w.self_w[0];
    for (int k = 0; k < nn; ++k) {
        const double tk = tgrid.node(k);
        for (int c = 0; c < nc; ++c) {
            double acc = source(centers[c], tk);
            if (k >= 1) {
                for (int c2 = 0; c2 < nc; ++c2) {
                    if (c2 == c) continue;
                    const double* row = &w.win[static_cast<std::size_t>(
                                                   w.offset_index(ijk[c], ijk[c2])) *
                                               nn];
                    const double* fv = &v.values[static_cast<std::size_t>(c2) * nn];
                    double s = 0.0;
                    for (int lag = 1; lag < k; ++lag)
                        s += (row[lag + 1] - row[lag]) * fv[k - lag];
                    acc -= c_bar * vol * s;
                }
                const double* fc = &v.values[static_cast<std::size_t>(c) * nn];
                double s = 0.0;
                for (int lag = 1; lag < k; ++lag) s += w.self_w[lag] * fc[k - lag];
                acc -= c_bar * s;
            }
            v.value(c, k) = acc / diag;
        }
    }
    return v;
}

/// Residual of the discrete volume equation under its own quadrature;
/// the march is exact for it up to roundoff.
inline double max_residual_v(const VolumeDensityHistory& v, double c_bar,
                             const SourceSpec& source) {
    const VolumeDensityHistory vv = apply_volume_potential(v);
    double worst = 0.0;
    for (int c = 0; c < v.grid.inside_count(); ++c) {
        const Vec3 zc = v.grid.center(v.grid.inside[c]);
        for (int k = 0; k < v.tgrid.node_count(); ++k) {
            const double f = source(zc, v.tgrid.node(k));
            worst = std::max(worst,
                             std::abs(v.value(c, k) + c_bar * vv.value(c, k) - f));
        }
    }
    return worst;
}

namespace detail {

/// Cumulative ball weight int_0^s of the in-ball heat mass.
inline double ball_cumulative(double radius, double s) {
    if (s <= 0.0) return 0.0;
    return ball_self_weight(radius, 0.0, s);
}

}  // namespace detail

/// Effective-medium correction field
///   W(x, t) = c_bar int_0^t int_Omega Phi(x, t; z, tau) v(z, tau) dz dtau
/// with the same cell/step weights as the volume solve.  x may be any point
/// outside Omega or a cell center inside it.
inline double eval_W(const VoxelGrid& grid, double c_bar,
                     const VolumeDensityHistory& v, const Vec3& x, double t) {
    if (t > v.tgrid.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("beyond simulated horizon");
    if (t <= 0.0 || c_bar == 0.0) return 0.0;
    const int nn = v.tgrid.node_count();
    const double dt = v.tgrid.dt();
    const double vol = grid.cell_volume;
    const double rball = std::cbrt(3.0 * vol / (4.0 * kPi));
    double acc = 0.0;
    for (int c = 0; c < grid.inside_count(); ++c) {
        const Vec3 zc = grid.center(grid.inside[c]);
        const double r = distance(x, zc);
        const double* vc = &v.values[static_cast<std::size_t>(c) * nn];
        double s = 0.0;
        if (r < 0.5 * std::min({grid.spacing.x, grid.spacing.y, grid.spacing.z})) {
            // x is in this cell: volume-equivalent ball weights
            double hi = detail::ball_cumulative(rball, t);
            for (int m = 1; m < nn; ++m) {
                const double lo = detail::ball_cumulative(rball, t - m * dt);
                s += (hi - lo) * vc[m];
                if (lo == 0.0) break;
                hi = lo;
            }
            acc += s;  // ball weight already carries the volume
        } else {
            double hi = time_integral_phi_window(r, t);
            for (int m = 1; m < nn; ++m) {
                const double lo = time_integral_phi_window(r, t - m * dt);
                s += (hi - lo) * vc[m];
                if (lo == 0.0) break;
                hi = lo;
            }
            acc += vol * s;
        }
    }
    return c_bar * acc;
}

/// Scaled capacitance c_bar, the sigma field of -Lap sigma + c_bar sigma = 0
/// (sigma = 1 on the boundary and outside Omega) and the conductivity
/// gamma = sigma^2, all on the full voxel grid.
struct EffectiveCoefficients {
    double c_bar = 0.0;
    std::vector<double> sigma;  // full grid, 1 outside Omega
    std::vector<double> gamma;  // sigma^2, elementwise
};

/// 7-point finite-difference solve of the sigma problem by conjugate
/// gradients (matrix-free, relative residual 1e-10).  Cells outside the mask
/// and the grid boundary carry the Dirichlet value 1.
inline EffectiveCoefficients solve_sigma(const VoxelGrid& grid, double c_bar,
                                         double tol = 1e-10,
                                         int max_iters = 100000) {
    if (c_bar < 0.0) throw std::invalid_argument("c_bar must be nonnegative");
    const int nc = grid.inside_count();
    std::vector<int> cell_to_unknown(grid.cell_count(), -1);
    for (int u = 0; u < nc; ++u) cell_to_unknown[grid.inside[u]] = u;

    const double hx2 = 1.0 / (grid.spacing.x * grid.spacing.x);
    const double hy2 = 1.0 / (grid.spacing.y * grid.spacing.y);
    const double hz2 = 1.0 / (grid.spacing.z * grid.spacing.z);

    // neighbor unknown indices (-1 = Dirichlet cell with value 1)
    std::vector<std::array<int, 6>> nbr(nc);
    for (int u = 0; u < nc; ++u) {
        const auto ijk = grid.unpack(grid.inside[u]);
        const int di[6] = {-1, 1, 0, 0, 0, 0};
        const int dj[6] = {0, 0, -1, 1, 0, 0};
        const int dk[6] = {0, 0, 0, 0, -1, 1};
        for (int s = 0; s < 6; ++s) {
            const int i = ijk[0] + di[s], j = ijk[1] + dj[s], k = ijk[2] + dk[s];
            if (i < 0 || j < 0 || k < 0 || i >= grid.dims[0] || j >= grid.dims[1] ||
                k >= grid.dims[2])
                nbr[u][s] = -1;
            else
                nbr[u][s] = cell_to_unknown[grid.linear(i, j, k)];
        }
    }
    const double hh[6] = {hx2, hx2, hy2, hy2, hz2, hz2};
    const double diag = 2.0 * (hx2 + hy2 + hz2) + c_bar;

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (int u = 0; u < nc; ++u) {
            double acc = diag * x[u];
            for (int s = 0; s < 6; ++s)
                if (nbr[u][s] >= 0) acc -= hh[s] * x[nbr[u][s]];
            y[u] = acc;
        }
    };

    std::vector<double> b(nc, 0.0);
    for (int u = 0; u < nc; ++u)
        for (int s = 0; s < 6; ++s)
            if (nbr[u][s] < 0) b[u] += hh[s];  // Dirichlet value 1

    std::vector<double> x(nc, 1.0), r(nc), p(nc), ap(nc);
    apply(x, ap);
    double bnorm2 = 0.0, rnorm2 = 0.0;
    for (int u = 0; u < nc; ++u) {
        r[u] = b[u] - ap[u];
        bnorm2 += b[u] * b[u];
        rnorm2 += r[u] * r[u];
    }
    const double stop2 = tol * tol * bnorm2;
    if (rnorm2 > stop2) {
        p = r;
        bool converged = false;
        for (int it = 0; it < max_iters; ++it) {
            apply(p, ap);
            double pap = 0.0;
            for (int u = 0; u < nc; ++u) pap += p[u] * ap[u];
            const double alpha = rnorm2 / pap;
            double rn2 = 0.0;
            for (int u = 0; u < nc; ++u) {
                x[u] += alpha * p[u];
                r[u] -= alpha * ap[u];
                rn2 += r[u] * r[u];
            }
            if (rn2 <= stop2) {
                converged = true;
                break;
            }
            const double beta = rn2 / rnorm2;
            rnorm2 = rn2;
            for (int u = 0; u < nc; ++u) p[u] = r[u] + beta * p[u];
        }
        if (!converged) throw std::runtime_error("elliptic solve failed");
    }

    EffectiveCoefficients coef;
    coef.c_bar = c_bar;
    coef.sigma.assign(grid.cell_count(), 1.0);
    for (int u = 0; u < nc; ++u) coef.sigma[grid.inside[u]] = x[u];
    coef.gamma.resize(coef.sigma.size());
    for (std::size_t i = 0; i < coef.sigma.size(); ++i)
        coef.gamma[i] = coef.sigma[i] * coef.sigma[i];
    return coef;
}

/// Discrete-to-continuum comparison sum_j || alpha_j - v(z_j, .) ||^2_{L2(0,T)}
/// by the trapezoidal rule; cluster centers must coincide with cell centers.
inline double compare_alpha_v(const DensityHistory& alphas,
                              const VolumeDensityHistory& v,
                              const OmegaPartition& part) {
    if (alphas.grid.n_steps != v.tgrid.n_steps ||
        std::abs(alphas.grid.horizon - v.tgrid.horizon) >
            1e-12 * v.tgrid.horizon)
        throw std::invalid_argument("incompatible discretizations");
    if (alphas.cavity_count != part.cell_count)
        throw std::invalid_argument("mismatched grids");

    const VoxelGrid& grid = v.grid;
    const double scale = std::min({grid.spacing.x, grid.spacing.y, grid.spacing.z});
    std::vector<int> cell_of(part.cell_count, -1);
    for (int j = 0; j < part.cell_count; ++j) {
        for (int c = 0; c < grid.inside_count(); ++c)
            if (distance(grid.center(grid.inside[c]), part.cell_centers[j]) <
                1e-9 * scale) {
                cell_of[j] = c;
                break;
            }
        if (cell_of[j] < 0) throw std::invalid_argument("mismatched grids");
    }

    const double dt = alphas.grid.dt();
    const int nn = alphas.grid.node_count();
    double total = 0.0;
    for (int j = 0; j < part.cell_count; ++j) {
        double l2 = 0.0;
        for (int k = 0; k < nn; ++k) {
            const double d = alphas.value(j, k) - v.value(cell_of[j], k);
            const double w = (k == 0 || k == nn - 1) ? 0.5 * dt : dt;
            l2 += w * d * d;
        }
        total += l2;
    }
    return total;
}

}  // namespace cavheat
