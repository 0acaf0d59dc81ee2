#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "cluster.hpp"
#include "heat_kernel.hpp"
#include "laplace_bem.hpp"
#include "vec3.hpp"

namespace cavheat {

/// Uniform time grid on (0, T) with nodes t_k = k * T / n_steps.
struct TimeGrid {
    double horizon = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t, int n) : horizon(t), n_steps(n) {
        if (!(t > 0.0) || n < 1) throw std::invalid_argument("invalid time grid");
    }
    double dt() const { return horizon / n_steps; }
    double node(int k) const { return k * dt(); }
    int node_count() const { return n_steps + 1; }
};

/// Boundary data source: the trace of a heat field defined around the whole
/// cluster.  Point sources are Phi(., .; z*, 0); smooth sources are arbitrary
/// callables (e.g. weighted sums of off-cluster kernels).
struct SourceSpec {
    bool is_point = true;
    Vec3 z_star;
    std::function<double(const Vec3&, double)> field;

    static SourceSpec point(const Vec3& z) {
        SourceSpec s;
        s.is_point = true;
        s.z_star = z;
        return s;
    }
    static SourceSpec smooth(std::function<double(const Vec3&, double)> f) {
        SourceSpec s;
        s.is_point = false;
        s.field = std::move(f);
        return s;
    }

    double operator()(const Vec3& x, double t) const {
        const double v = is_point ? eval_phi(x, t, z_star, 0.0) : field(x, t);
        if (!std::isfinite(v)) throw std::runtime_error("source evaluation failed");
        return v;
    }
};

/// Interaction densities alpha_i(t_k) of the point-interaction system,
/// one row per cavity over the shared time grid.
struct DensityHistory {
    TimeGrid grid;
    int cavity_count = 0;
    std::vector<double> alphas;  // row-major, cavity_count x (n_steps + 1)

    double value(int i, int k) const { return alphas[i * grid.node_count() + k]; }
    double& value(int i, int k) { return alphas[i * grid.node_count() + k]; }

    /// Linear interpolation in time (consistent with the march's order).
    double interp(int i, double t) const {
        const double dt = grid.dt();
        if (t <= 0.0) return value(i, 0);
        if (t >= grid.horizon) return value(i, grid.n_steps);
        const int k = static_cast<int>(t / dt);
        const double w = (t - k * dt) / dt;
        return (1.0 - w) * value(i, k) + w * value(i, std::min(k + 1, grid.n_steps));
    }
};

struct SolvabilityReport {
    bool holds = false;
    double value = 0.0;
    double stability_factor = 0.0;  // (1 - value)^{-1} when holds
};

/// Point-system solvability condition: max_j C_j * max_i sum_{j != i}
/// |z_i - z_j|^{-2} < 1, with the stability factor used by the estimates.
inline SolvabilityReport check_solvability(const Cluster& cluster,
                                           const std::vector<Capacitance>& caps) {
    double cmax = 0.0;
    for (const auto& c : caps) cmax = std::max(cmax, c.value);
    double worst = 0.0;
    for (int i = 0; i < cluster.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < cluster.size(); ++j) {
            if (j == i) continue;
            const double r = distance(cluster.centers[i], cluster.centers[j]);
            s += 1.0 / (r * r);
        }
        worst = std::max(worst, s);
    }
    const double value = cmax * worst;
    SolvabilityReport rep{value < 1.0, value, 0.0};
    rep.stability_factor =
        rep.holds ? 1.0 / (1.0 - value) : std::numeric_limits<double>::infinity();
    return rep;
}

/// Solve the coupled Volterra system
///
///   alpha_i(t) + sum_{j != i} C_j int_0^t Phi(z_i, t; z_j, tau) alpha_j(tau)
///   dtau = f(z_i, t)
///
/// by time marching with the composite trapezoidal rule.  The off-diagonal
/// kernel vanishes with all derivatives at tau = t, so the top node drops out
/// of the quadrature and every step is explicit.
///
/// A violated separation condition only warns (the condition is sufficient,
/// not necessary).
inline DensityHistory solve_alphas(const Cluster& cluster,
                                   const std::vector<Capacitance>& caps,
                                   const SourceSpec& source, const TimeGrid& grid,
                                   std::ostream* warnings = &std::cerr) {
    const int m = cluster.size();
    if (static_cast<int>(caps.size()) != m)
        throw std::invalid_argument("one capacitance per cavity required");
    for (const auto& c : caps)
        if (!(c.value > 0.0)) throw std::invalid_argument("capacitances must be positive");
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (!(distance(cluster.centers[i], cluster.centers[j]) > 0.0))
                throw std::runtime_error("singular interaction kernel");
    if (source.is_point && cluster.point_inside_any_cavity(source.z_star))
        throw std::invalid_argument("source point inside a cavity");

    if (warnings) {
        const auto cond = check_condition(cluster);
        if (!cond.holds)
            *warnings << "warning: cluster separation condition violated (value = "
                      << cond.value << " >= 1); proceeding\n";
    }

    const int nn = grid.node_count();
    const double dt = grid.dt();

    // pairwise kernel table Phi(|z_i - z_j|; lag * dt); lag 0 column is 0
    std::vector<double> phi_table;
    if (m > 1) {
        phi_table.assign(static_cast<std::size_t>(m) * m * nn, 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (i == j) continue;
                const double r = distance(cluster.centers[i], cluster.centers[j]);
                double* row = &phi_table[(static_cast<std::size_t>(i) * m + j) * nn];
                for (int lag = 1; lag < nn; ++lag)
                    row[lag] = eval_phi_radial(r, lag * dt);
            }
    }

    DensityHistory hist;
    hist.grid = grid;
    hist.cavity_count = m;
    hist.alphas.assign(static_cast<std::size_t>(m) * nn, 0.0);

    for (int k = 0; k < nn; ++k) {
        const double tk = grid.node(k);
        for (int i = 0; i < m; ++i) {
            double acc = source(cluster.centers[i], tk);
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                const double* row =
                    &phi_table[(static_cast<std::size_t>(i) * m + j) * nn];
                const double* aj = &hist.alphas[static_cast<std::size_t>(j) * nn];
                // trapezoid over nodes 0..k; node k contributes nothing
                double conv = 0.0;
                for (int mm = 1; mm < k; ++mm) conv += row[k - mm] * aj[mm];
                conv *= dt;
                if (k >= 1) conv += 0.5 * dt * row[k] * aj[0];
                acc -= caps[j].value * conv;
            }
            hist.value(i, k) = acc;
        }
    }
    return hist;
}

/// Dominant heat field of the expansion:
/// u(x, t) = sum_i C_i int_0^t Phi(x, t; z_i, tau) alpha_i(tau) dtau,
/// with the memory integral by the same trapezoidal rule as the march.
inline double eval_field(const Cluster& cluster, const std::vector<Capacitance>& caps,
                         const DensityHistory& hist, const Vec3& x, double t) {
    if (cluster.point_inside_any_cavity(x))
        throw std::invalid_argument("evaluation point inside cavity");
    if (t > hist.grid.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("beyond simulated horizon");
    if (t <= 0.0) return 0.0;

    const double dt = hist.grid.dt();
    const int kfull = std::min(static_cast<int>(t / dt), hist.grid.n_steps);
    double u = 0.0;
    for (int i = 0; i < cluster.size(); ++i) {
        const double r = distance(x, cluster.centers[i]);
        double integral = 0.0;
        // trapezoid over grid nodes up to t_kfull
        for (int mm = 0; mm <= kfull; ++mm) {
            const double w =
                (mm == 0 || mm == kfull) ? 0.5 * dt : dt;
            integral += w * eval_phi_radial(r, t - hist.grid.node(mm)) *
                        hist.value(i, mm);
        }
        // partial final cell [t_kfull, t]; the integrand vanishes at tau = t
        const double rest = t - hist.grid.node(kfull);
        if (rest > 0.0)
            integral += 0.5 * rest * eval_phi_radial(r, rest) * hist.value(i, kfull);
        u += caps[i].value * integral;
    }
    return u;
}

}  // namespace cavheat
