// Command-line front end: capacitance extraction, the point-interaction and
// reference solvers, the effective-medium pipeline and the convergence
// studies, all driven by JSON run configurations.

#include <CLI11.hpp>
#include <cavheat/experiments.hpp>
#include <cstdio>
#include <iostream>

namespace {

int run_solver(const std::string& config_path, const std::string& solver,
               const std::string& out_override, const std::string& alphas_override) {
    cavheat::ExperimentConfig cfg = cavheat::load_config(config_path);
    if (cfg.solver != solver) {
        std::cerr << "config requests solver '" << cfg.solver << "', running '"
                  << solver << "'\n";
        cfg.solver = solver;
    }
    if (!out_override.empty()) {
        if (solver == "sigma")
            cfg.sigma_csv = out_override;
        else
            cfg.field_csv = out_override;
    }
    if (!alphas_override.empty()) cfg.alphas_csv = alphas_override;
    const cavheat::RunResult res = cavheat::run_config(cfg);
    for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heat conduction by clusters of small Dirichlet cavities"};
    app.require_subcommand(1);

    // capacitance
    std::string mesh_path, density_csv = "density.csv";
    int refine = 0;
    bool sphere = false;
    auto* cap = app.add_subcommand("capacitance",
                                   "capacitance and equilibrium density of a cavity");
    cap->add_option("--mesh", mesh_path, "closed surface in ASCII OFF format");
    cap->add_flag("--sphere", sphere, "use the built-in unit sphere instead");
    cap->add_option("--refine", refine, "subdivision levels applied to the mesh")
        ->check(CLI::Range(0, 7));
    cap->add_option("--density", density_csv, "output CSV (panel_id,value,area)");

    // solver subcommands share --config/--out
    struct SolverCmd {
        CLI::App* cmd;
        std::string name;
    };
    std::string config_path, out_path, alphas_path;
    std::vector<SolverCmd> solvers;
    for (const char* name : {"flsim", "refbem", "effmed", "sigma"}) {
        auto* s = app.add_subcommand(
            name, std::string("run the ") + name + " pipeline from a JSON config");
        s->add_option("--config", config_path, "run configuration (JSON)")
            ->required();
        s->add_option("--out", out_path, "override the output CSV path");
        if (std::string(name) == "flsim")
            s->add_option("--alphas", alphas_path,
                          "also dump the interaction densities (i,t,alpha)");
        solvers.push_back({s, name});
    }

    // converge
    std::string study;
    std::vector<double> levels;
    std::string report_csv;
    auto* conv = app.add_subcommand("converge", "run a canned convergence study");
    conv->add_option("--study", study, "study kind")
        ->required()
        ->check(CLI::IsMember({"single_cavity_eps2", "multi_vs_oracle",
                               "homogenization_a13", "timestep_order2"}));
    conv->add_option("--levels", levels, "parameter levels (3 or more)")
        ->required()
        ->expected(-3);
    conv->add_option("--out", report_csv, "write level,error rows to this CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cap->parsed()) {
            cavheat::TriMesh mesh;
            if (!mesh_path.empty()) {
                mesh = cavheat::triangulate(
                    cavheat::ReferenceShape::imported_mesh(
                        cavheat::load_off_file(mesh_path)),
                    refine);
            } else if (sphere) {
                mesh = cavheat::make_icosphere(refine);
            } else {
                std::cerr << "capacitance: need --mesh or --sphere\n";
                return 2;
            }
            const auto [c, density] = cavheat::capacitance(mesh);
            std::printf("C = %.12g\n", c.value);
            cavheat::csv::Writer w(density_csv);
            w.header("panel_id,value,area");
            for (int p = 0; p < mesh.panel_count(); ++p)
                w.row({static_cast<double>(p), density.values[p], mesh.areas[p]});
            std::cout << "wrote " << density_csv << "\n";
            return 0;
        }
        for (const auto& s : solvers)
            if (s.cmd->parsed())
                return run_solver(config_path, s.name, out_path, alphas_path);
        if (conv->parsed()) {
            cavheat::StudyKind kind{};
            if (study == "single_cavity_eps2")
                kind = cavheat::StudyKind::single_cavity_eps2;
            else if (study == "multi_vs_oracle")
                kind = cavheat::StudyKind::multi_vs_oracle;
            else if (study == "homogenization_a13")
                kind = cavheat::StudyKind::homogenization_a13;
            else
                kind = cavheat::StudyKind::timestep_order2;
            const cavheat::RateReport rep = cavheat::rate_study(kind, levels);
            std::printf("study %s\n", cavheat::study_name(rep.kind));
            for (std::size_t i = 0; i < rep.parameters.size(); ++i)
                std::printf("  level %.6g  error %.6e\n", rep.parameters[i],
                            rep.errors[i]);
            std::printf("slope %.4f +- %.4f, strictly decreasing: %s\n", rep.slope,
                        rep.slope_half_width,
                        rep.strictly_decreasing ? "yes" : "no");
            if (!report_csv.empty()) {
                cavheat::csv::Writer w(report_csv);
                w.header("level,error");
                for (std::size_t i = 0; i < rep.parameters.size(); ++i)
                    w.row({rep.parameters[i], rep.errors[i]});
                std::cout << "wrote " << report_csv << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
