#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "csv.hpp"
#include "effective_medium.hpp"
#include "foldy_lax.hpp"
#include "heat_bem.hpp"
#include "laplace_bem.hpp"
#include "quadrature.hpp"
#include "tri_mesh.hpp"

namespace cavheat {

/// Configuration error with a JSON-pointer-style location.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what) {}
};

struct BallMaskSpec {
    Vec3 center;
    double radius = 0.0;
};

/// Parsed and validated experiment description.
struct ExperimentConfig {
    // geometry
    ReferenceShape shape;
    int refinement = 2;
    std::optional<Cluster> cluster;
    std::optional<OmegaPartition> partition;

    // source
    SourceSpec source = SourceSpec::point({2.0, 0.0, 0.0});
    std::vector<Vec3> source_points;  // all kernel anchor points, for checks

    // time
    TimeGrid grid{1.0, 100};

    // solver
    std::string solver = "flsim";
    std::optional<Box> omega;
    std::array<int, 3> grid_dims{8, 8, 8};
    std::optional<double> c_bar;
    std::optional<BallMaskSpec> ball_mask;
    double cg_tol = 1e-10;

    // output
    std::vector<SpaceTimePoint> samples;
    std::string field_csv;
    std::string alphas_csv;
    std::string sigma_csv;
};

namespace detail {

using nlohmann::json;

inline Vec3 parse_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(path, "expected an array of 3 numbers");
    for (const auto& c : j)
        if (!c.is_number()) throw ConfigError(path, "expected an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing");
    return j.at(key);
}

inline double require_number(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
    return v.get<double>();
}

inline Box parse_box(const json& j, const std::string& path) {
    Box b{parse_vec3(require(j, "lo", path), path + "/lo"),
          parse_vec3(require(j, "hi", path), path + "/hi")};
    if (!(b.volume() > 0.0)) throw ConfigError(path, "box must have positive volume");
    return b;
}

inline ReferenceShape parse_shape(const json& j, const std::string& path) {
    const std::string kind = require(j, "kind", path).get<std::string>();
    if (kind == "unit_sphere") return ReferenceShape::unit_sphere();
    if (kind == "ellipsoid")
        return ReferenceShape::ellipsoid(
            parse_vec3(require(j, "semi_axes", path), path + "/semi_axes"));
    if (kind == "imported_mesh") {
        const std::string file = require(j, "path", path).get<std::string>();
        if (!std::filesystem::exists(file))
            throw ConfigError(path + "/path", "file does not exist: " + file);
        return ReferenceShape::imported_mesh(load_off_file(file));
    }
    throw ConfigError(path + "/kind", "unknown shape kind: " + kind);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::parse_box;
    using detail::parse_vec3;
    using detail::require;
    using detail::require_number;

    ExperimentConfig cfg;

    // solver block first; it decides which other blocks are mandatory
    const auto& solver = require(j, "solver", "");
    cfg.solver = require(solver, "kind", "/solver").get<std::string>();
    if (cfg.solver != "flsim" && cfg.solver != "refbem" && cfg.solver != "effmed" &&
        cfg.solver != "sigma")
        throw ConfigError("/solver/kind", "unknown solver: " + cfg.solver);

    const bool wants_cluster = cfg.solver == "flsim" || cfg.solver == "refbem";

    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        cfg.shape = detail::parse_shape(require(g, "shape", "/geometry"),
                                        "/geometry/shape");
        if (g.contains("refinement")) {
            cfg.refinement = g.at("refinement").get<int>();
            if (cfg.refinement < 0 || cfg.refinement > 7)
                throw ConfigError("/geometry/refinement", "must be in [0, 7]");
        }
        if (g.contains("cluster")) {
            const auto& cl = g.at("cluster");
            const std::string kind =
                require(cl, "kind", "/geometry/cluster").get<std::string>();
            try {
                if (kind == "lattice") {
                    const double a = require_number(cl, "a", "/geometry/cluster");
                    const double d0 = require_number(cl, "d0", "/geometry/cluster");
                    const Box omega = parse_box(require(cl, "omega", "/geometry/cluster"),
                                                "/geometry/cluster/omega");
                    auto [cluster, part] = build_cluster(omega, a, d0, cfg.shape);
                    cfg.cluster = std::move(cluster);
                    cfg.partition = std::move(part);
                    cfg.omega = omega;
                } else if (kind == "explicit") {
                    const double eps = require_number(cl, "eps", "/geometry/cluster");
                    const auto& cs = require(cl, "centers", "/geometry/cluster");
                    if (!cs.is_array() || cs.empty())
                        throw ConfigError("/geometry/cluster/centers",
                                          "expected a nonempty array");
                    std::vector<Vec3> centers;
                    for (std::size_t i = 0; i < cs.size(); ++i)
                        centers.push_back(parse_vec3(
                            cs[i], "/geometry/cluster/centers/" + std::to_string(i)));
                    cfg.cluster = cluster_from_centers(cfg.shape, eps, centers);
                } else {
                    throw ConfigError("/geometry/cluster/kind",
                                      "unknown cluster kind: " + kind);
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError("/geometry/cluster", e.what());
            }
        }
    }
    if (wants_cluster && !cfg.cluster)
        throw ConfigError("/geometry/cluster", "required for solver " + cfg.solver);

    // time
    {
        const auto& t = require(j, "time", "");
        const double horizon = require_number(t, "T", "/time");
        if (!(horizon > 0.0)) throw ConfigError("/time/T", "must be positive");
        const int n = require(t, "n_steps", "/time").get<int>();
        if (n < 1) throw ConfigError("/time/n_steps", "must be >= 1");
        cfg.grid = TimeGrid(horizon, n);
    }

    // source (sigma runs do not need one)
    if (cfg.solver != "sigma") {
        const auto& s = require(j, "source", "");
        const std::string kind = require(s, "kind", "/source").get<std::string>();
        if (kind == "point") {
            const Vec3 z = parse_vec3(require(s, "z_star", "/source"), "/source/z_star");
            cfg.source = SourceSpec::point(z);
            cfg.source_points = {z};
        } else if (kind == "points") {
            const auto& terms = require(s, "terms", "/source");
            if (!terms.is_array() || terms.empty())
                throw ConfigError("/source/terms", "expected a nonempty array");
            std::vector<std::pair<Vec3, double>> anchors;
            for (std::size_t i = 0; i < terms.size(); ++i) {
                const std::string p = "/source/terms/" + std::to_string(i);
                const Vec3 z = parse_vec3(require(terms[i], "z", p), p + "/z");
                const double w = require_number(terms[i], "weight", p);
                anchors.emplace_back(z, w);
                cfg.source_points.push_back(z);
            }
            cfg.source = SourceSpec::smooth([anchors](const Vec3& x, double t) {
                double f = 0.0;
                for (const auto& [z, w] : anchors) f += w * eval_phi(x, t, z, 0.0);
                return f;
            });
        } else {
            throw ConfigError("/source/kind", "unknown source kind: " + kind);
        }
    }

    // solver details
    if (cfg.solver == "effmed" || cfg.solver == "sigma") {
        if (solver.contains("omega"))
            cfg.omega = parse_box(solver.at("omega"), "/solver/omega");
        if (!cfg.omega)
            throw ConfigError("/solver/omega",
                              "required (directly or via a lattice cluster)");
        if (solver.contains("grid_dims")) {
            const auto& d = solver.at("grid_dims");
            if (!d.is_array() || d.size() != 3)
                throw ConfigError("/solver/grid_dims", "expected 3 integers");
            for (int i = 0; i < 3; ++i) {
                cfg.grid_dims[i] = d[i].get<int>();
                if (cfg.grid_dims[i] < 1)
                    throw ConfigError("/solver/grid_dims", "entries must be >= 1");
            }
        } else if (cfg.partition) {
            cfg.grid_dims = cfg.partition->grid_dims;
        }
        if (solver.contains("c_bar")) {
            cfg.c_bar = solver.at("c_bar").get<double>();
            if (*cfg.c_bar < 0.0) throw ConfigError("/solver/c_bar", "must be >= 0");
        }
        if (solver.contains("mask")) {
            const auto& mk = solver.at("mask");
            if (require(mk, "kind", "/solver/mask").get<std::string>() != "ball")
                throw ConfigError("/solver/mask/kind", "only 'ball' is supported");
            BallMaskSpec b;
            b.center = parse_vec3(require(mk, "center", "/solver/mask"),
                                  "/solver/mask/center");
            b.radius = require_number(mk, "radius", "/solver/mask");
            if (!(b.radius > 0.0))
                throw ConfigError("/solver/mask/radius", "must be positive");
            cfg.ball_mask = b;
        }
        if (solver.contains("cg_tol")) cfg.cg_tol = solver.at("cg_tol").get<double>();
        if (!cfg.c_bar && !cfg.cluster)
            throw ConfigError("/solver/c_bar",
                              "required unless derivable from a cluster");
    }

    // output
    {
        const auto& o = require(j, "output", "");
        if (cfg.solver == "sigma") {
            cfg.sigma_csv = require(o, "sigma_csv", "/output").get<std::string>();
        } else {
            cfg.field_csv = require(o, "field_csv", "/output").get<std::string>();
            const auto& samples = require(o, "samples", "/output");
            if (!samples.is_array() || samples.empty())
                throw ConfigError("/output/samples", "expected a nonempty array");
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const std::string p = "/output/samples/" + std::to_string(i);
                const auto& s = samples[i];
                if (!s.is_array() || s.size() != 4)
                    throw ConfigError(p, "expected [x, y, z, t]");
                SpaceTimePoint pt{{s[0].get<double>(), s[1].get<double>(),
                                   s[2].get<double>()},
                                  s[3].get<double>()};
                if (pt.t < 0.0 || pt.t > cfg.grid.horizon)
                    throw ConfigError(p, "sample time outside [0, T]");
                cfg.samples.push_back(pt);
            }
            if (o.contains("alphas_csv"))
                cfg.alphas_csv = o.at("alphas_csv").get<std::string>();
        }
    }

    // cross-block checks, all before any solve
    if (cfg.cluster) {
        for (std::size_t i = 0; i < cfg.source_points.size(); ++i)
            if (cfg.cluster->point_inside_any_cavity(cfg.source_points[i]))
                throw ConfigError("/source", "source point inside a cavity");
        if (cfg.solver == "flsim" || cfg.solver == "refbem")
            for (std::size_t i = 0; i < cfg.samples.size(); ++i)
                if (cfg.cluster->point_inside_any_cavity(cfg.samples[i].x))
                    throw ConfigError("/output/samples/" + std::to_string(i),
                                      "sample point inside a cavity");
    }
    if (cfg.solver == "effmed" && cfg.omega) {
        for (const auto& z : cfg.source_points)
            if (cfg.omega->contains(z))
                throw ConfigError("/source", "source inside effective domain");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

struct RunResult {
    std::vector<std::string> files;
    std::vector<double> sample_values;
};

/// Per-shape capacitance: solve once on the reference mesh, scale by eps.
inline std::vector<Capacitance> cluster_capacitances(const Cluster& cluster,
                                                     const TriMesh& base) {
    const auto [cb, density] = capacitance(base);
    return std::vector<Capacitance>(cluster.size(),
                                    Capacitance{cluster.eps * cb.value});
}

/// Execute a validated configuration.  Iteration orders are fixed, so a
/// rerun of the same config produces byte-identical files.
inline RunResult run_config(const ExperimentConfig& cfg) {
    RunResult res;
    if (cfg.solver == "flsim" || cfg.solver == "refbem") {
        const Cluster& cluster = *cfg.cluster;
        const TriMesh base = triangulate(cfg.shape, cfg.refinement);

        csv::Writer field(cfg.field_csv);
        field.header("x,y,z,t,u");
        if (cfg.solver == "flsim") {
            const auto caps = cluster_capacitances(cluster, base);
            const DensityHistory hist =
                solve_alphas(cluster, caps, cfg.source, cfg.grid);
            for (const auto& s : cfg.samples) {
                const double u = eval_field(cluster, caps, hist, s.x, s.t);
                field.row({s.x.x, s.x.y, s.x.z, s.t, u});
                res.sample_values.push_back(u);
            }
            if (!cfg.alphas_csv.empty()) {
                csv::Writer aw(cfg.alphas_csv);
                aw.header("i,t,alpha");
                for (int i = 0; i < hist.cavity_count; ++i)
                    for (int k = 0; k < hist.grid.node_count(); ++k)
                        aw.row({static_cast<double>(i), hist.grid.node(k),
                                hist.value(i, k)});
                res.files.push_back(cfg.alphas_csv);
            }
        } else {
            const auto meshes = cluster_meshes(cluster, base);
            const SpaceTimeDensity st =
                solve_boundary_density(meshes, cfg.source, cfg.grid);
            for (const auto& s : cfg.samples) {
                const double u = eval_reference_field(st, cluster, s.x, s.t);
                field.row({s.x.x, s.x.y, s.x.z, s.t, u});
                res.sample_values.push_back(u);
            }
        }
        res.files.push_back(cfg.field_csv);
    } else if (cfg.solver == "effmed") {
        const VoxelGrid grid = VoxelGrid::from_box(*cfg.omega, cfg.grid_dims);
        double c_bar;
        if (cfg.c_bar) {
            c_bar = *cfg.c_bar;
        } else {
            const TriMesh base = triangulate(cfg.shape, cfg.refinement);
            const auto caps = cluster_capacitances(*cfg.cluster, base);
            c_bar = caps[0].value / cfg.cluster->cavity_diameter();
        }
        const VolumeDensityHistory v = solve_v(grid, c_bar, cfg.source, cfg.grid);
        csv::Writer field(cfg.field_csv);
        field.header("x,y,z,t,u");
        for (const auto& s : cfg.samples) {
            const double u = eval_W(grid, c_bar, v, s.x, s.t);
            field.row({s.x.x, s.x.y, s.x.z, s.t, u});
            res.sample_values.push_back(u);
        }
        res.files.push_back(cfg.field_csv);
    } else {  // sigma
        VoxelGrid grid =
            cfg.ball_mask
                ? VoxelGrid::ball_mask(*cfg.omega, cfg.grid_dims,
                                       cfg.ball_mask->center, cfg.ball_mask->radius)
                : VoxelGrid::from_box(*cfg.omega, cfg.grid_dims);
        double c_bar;
        if (cfg.c_bar) {
            c_bar = *cfg.c_bar;
        } else {
            const TriMesh base = triangulate(cfg.shape, cfg.refinement);
            const auto caps = cluster_capacitances(*cfg.cluster, base);
            c_bar = caps[0].value / cfg.cluster->cavity_diameter();
        }
        const EffectiveCoefficients coef = solve_sigma(grid, c_bar, cfg.cg_tol);
        csv::Writer out(cfg.sigma_csv);
        out.header("i,j,k,x,y,z,sigma,gamma");
        for (int c = 0; c < grid.cell_count(); ++c) {
            const auto ijk = grid.unpack(c);
            const Vec3 p = grid.center(c);
            out.row({static_cast<double>(ijk[0]), static_cast<double>(ijk[1]),
                     static_cast<double>(ijk[2]), p.x, p.y, p.z, coef.sigma[c],
                     coef.gamma[c]});
        }
        res.files.push_back(cfg.sigma_csv);
    }
    return res;
}

// ---------------------------------------------------------------------------
// canned convergence studies
// ---------------------------------------------------------------------------

enum class StudyKind {
    single_cavity_eps2,
    multi_vs_oracle,
    homogenization_a13,
    timestep_order2,
};

inline const char* study_name(StudyKind k) {
    switch (k) {
        case StudyKind::single_cavity_eps2: return "single_cavity_eps2";
        case StudyKind::multi_vs_oracle: return "multi_vs_oracle";
        case StudyKind::homogenization_a13: return "homogenization_a13";
        case StudyKind::timestep_order2: return "timestep_order2";
    }
    return "?";
}

struct RateReport {
    StudyKind kind{};
    std::vector<double> parameters;
    std::vector<double> errors;
    double slope = 0.0;
    double slope_half_width = 0.0;
    bool strictly_decreasing = false;
};

struct StudyOptions {
    int refinement = 2;    // reference-mesh refinement for BEM runs
    int n_steps = 120;     // oracle time steps
    int fl_steps = 800;    // point-system time steps
};

namespace detail {

inline void fit_loglog(RateReport& rep) {
    const int n = static_cast<int>(rep.parameters.size());
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log(rep.parameters[i]);
        ly[i] = std::log(std::max(rep.errors[i], 1e-300));
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    rep.slope = sxy / sxx;
    double ss_res = 0;
    for (int i = 0; i < n; ++i) {
        const double fit = my + rep.slope * (lx[i] - mx);
        ss_res += (ly[i] - fit) * (ly[i] - fit);
    }
    rep.slope_half_width = (n > 2) ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;

    rep.strictly_decreasing = true;
    // errors must shrink in the same direction the parameters do
    for (int i = 0; i + 1 < n; ++i) {
        const bool param_down = rep.parameters[i + 1] < rep.parameters[i];
        const bool err_down = rep.errors[i + 1] < rep.errors[i];
        if (param_down != err_down) rep.strictly_decreasing = false;
    }
}

/// C0 * int_0^t Phi(x, t; z, tau) Phi(z, tau; z*, 0) dtau by adaptive
/// quadrature; the dominant single-cavity term of the expansion.
inline double single_cavity_asymptotic(double c0, const Vec3& x, const Vec3& z,
                                       const Vec3& zstar, double t) {
    const auto f = [&](double tau) {
        return eval_phi(x, t, z, tau) * eval_phi(z, tau, zstar, 0.0);
    };
    return c0 * adaptive_simpson(f, 0.0, t, 1e-14, 44);
}

}  // namespace detail

/// Run the matched solver pair of a study at each level and fit the log-log
/// error slope at a fixed far probe.
inline RateReport rate_study(StudyKind kind, const std::vector<double>& levels,
                             const StudyOptions& opt = {}) {
    if (levels.size() < 3)
        throw std::invalid_argument("rate studies need at least 3 levels");
    RateReport rep;
    rep.kind = kind;
    rep.parameters = levels;

    const Vec3 zstar{1.0, 0.0, 0.0};
    const Vec3 probe{-2.0, 0.0, 0.0};
    const double horizon = 1.0;
    const double sample_times[2] = {0.5 * horizon, horizon};
    const SourceSpec source = SourceSpec::point(zstar);

    const TriMesh base = make_icosphere(opt.refinement);

    switch (kind) {
        case StudyKind::single_cavity_eps2: {
            const Vec3 z{0.0, 0.0, 0.0};
            const double cb = capacitance(base).first.value;
            for (double eps : levels) {
                const Cluster cluster = cluster_from_centers(
                    ReferenceShape::unit_sphere(), eps, {z});
                const auto meshes = cluster_meshes(cluster, base);
                const TimeGrid grid(horizon, opt.n_steps);
                const SpaceTimeDensity st =
                    solve_boundary_density(meshes, source, grid);
                double err = 0.0;
                for (double t : sample_times) {
                    const double uref = eval_reference_field(st, cluster, probe, t);
                    const double uasym = detail::single_cavity_asymptotic(
                        eps * cb, probe, z, zstar, t);
                    err = std::max(err, std::abs(uref - uasym));
                }
                rep.errors.push_back(err);
            }
            break;
        }
        case StudyKind::multi_vs_oracle: {
            const std::vector<Vec3> centers{{0.0, 0.0, -0.25}, {0.0, 0.0, 0.25}};
            const double cb = capacitance(base).first.value;
            for (double eps : levels) {
                const Cluster cluster = cluster_from_centers(
                    ReferenceShape::unit_sphere(), eps, centers);
                const std::vector<Capacitance> caps(2, Capacitance{eps * cb});
                const auto meshes = cluster_meshes(cluster, base);
                const SpaceTimeDensity st = solve_boundary_density(
                    meshes, source, TimeGrid(horizon, opt.n_steps));
                const DensityHistory hist = solve_alphas(
                    cluster, caps, source, TimeGrid(horizon, opt.fl_steps), nullptr);
                double err = 0.0;
                for (double t : sample_times) {
                    const double uref = eval_reference_field(st, cluster, probe, t);
                    const double ufl = eval_field(cluster, caps, hist, probe, t);
                    err = std::max(err, std::abs(uref - ufl));
                }
                rep.errors.push_back(err);
            }
            break;
        }
        case StudyKind::homogenization_a13: {
            const Box omega{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
            const Vec3 zs{2.0, 0.5, 0.5};
            const Vec3 x{-1.5, 0.5, 0.5};
            const SourceSpec src = SourceSpec::point(zs);
            const double cb = capacitance(base).first.value;
            const TimeGrid tgrid(horizon, 100);

            // W is the same function at every level: solve it once
            const double c_bar = cb / 2.0;  // C_j / a for spheres of diameter a
            const VoxelGrid wgrid = VoxelGrid::from_box(omega, {12, 12, 12});
            const VolumeDensityHistory v = solve_v(wgrid, c_bar, src, tgrid);

            for (double a : levels) {
                auto [cluster, part] =
                    build_cluster(omega, a, 2.0, ReferenceShape::unit_sphere());
                const std::vector<Capacitance> caps(
                    cluster.size(), Capacitance{cluster.eps * cb});
                const DensityHistory hist =
                    solve_alphas(cluster, caps, src, tgrid, nullptr);
                double err = 0.0;
                for (double t : sample_times) {
                    const double ufl = eval_field(cluster, caps, hist, x, t);
                    const double w = eval_W(wgrid, c_bar, v, x, t);
                    err = std::max(err, std::abs(ufl - w));
                }
                rep.errors.push_back(err);
            }
            break;
        }
        case StudyKind::timestep_order2: {
            const std::vector<Vec3> centers{{0.0, 0.0, -0.25}, {0.0, 0.0, 0.25}};
            const double cb = capacitance(make_icosphere(1)).first.value;
            const double eps = 0.05;
            const Cluster cluster =
                cluster_from_centers(ReferenceShape::unit_sphere(), eps, centers);
            const std::vector<Capacitance> caps(2, Capacitance{eps * cb});

            auto field_at = [&](int n) {
                const DensityHistory h =
                    solve_alphas(cluster, caps, source, TimeGrid(horizon, n), nullptr);
                return eval_field(cluster, caps, h, probe, horizon);
            };
            // Richardson-extrapolated second-order reference
            const double u1 = field_at(800);
            const double u2 = field_at(1600);
            const double uref = (4.0 * u2 - u1) / 3.0;

            rep.parameters.clear();
            for (double n : levels) {
                rep.parameters.push_back(horizon / n);  // report dt, not n
                rep.errors.push_back(std::abs(field_at(static_cast<int>(n)) - uref));
            }
            break;
        }
    }
    detail::fit_loglog(rep);
    return rep;
}

}  // namespace cavheat
