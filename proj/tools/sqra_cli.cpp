// Command-line driver for the SQRA finite-volume experiments.
//
//   sqra run           --preset noneq-2d --out out/noneq
//   sqra convergence   --preset conv-1d --cells 100 200 400
//   sqra steady-state  --preset eq-2d
//   sqra validate-mesh data/unit_square_978.mesh
//
// Exit codes: 0 success, 1 numerical or validation failure, 2 usage or I/O error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sqra/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

void add_common(CLI::App& cmd, sqra::Overrides& o) {
    cmd.add_option_function<std::string>("--config", [&o](const std::string& v) { o.config_file = v; },
                                         "JSON configuration file");
    cmd.add_option_function<std::string>("--preset", [&o](const std::string& v) { o.preset = v; },
                                         "conv-1d, eq-1d, eq-2d or noneq-2d");
    cmd.add_option_function<std::string>("--out", [&o](const std::string& v) { o.output_dir = v; },
                                         "output directory (overrides $SQRA_OUT_DIR)");
    cmd.add_option_function<double>("--epsilon", [&o](double v) { o.epsilon = v; }, "inverse Peclet number")
        ->check(CLI::PositiveNumber);
    cmd.add_option_function<double>("--tau", [&o](double v) { o.tau = v; }, "time step of the first phase")
        ->check(CLI::PositiveNumber);
    cmd.add_option_function<double>("--final-time", [&o](double v) { o.final_time = v; },
                                    "end time of the last phase")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option_function<std::string>("--mesh", [&o](const std::string& v) { o.mesh = v; },
                                         "triangulation file (replaces the configured mesh)");
}

void print_run(const sqra::RunOutput& r) {
    std::cout << "steps: " << r.march.steps << ", Newton iterations: " << r.march.total_newton_iters << '\n';
    if (!r.report.newton_iters.empty()) {
        std::cout << "Newton iterations at step 1: " << r.report.newton_iters.front() << '\n';
        std::cout << "F_tot: " << r.report.initial_energy << " -> " << r.report.total_energy.back() << '\n';
        std::cout << "rho range over steps: [" << r.bounds.min << ", " << r.bounds.max << "]\n";
    }
    for (const auto& f : r.files) std::cout << "wrote " << f.string() << '\n';
}

void print_convergence(const sqra::ConvergenceOutput& out) {
    for (const auto& s : out.series) {
        std::cout << "epsilon = " << s.epsilon << '\n';
        for (const auto& [cells, err] : s.rows) std::printf("  %8zu  %.6e\n", cells, err);
        if (s.order) std::cout << "  observed order: " << *s.order << '\n';
        std::cout << "  wrote " << s.file.string() << '\n';
    }
}

void print_steady(const sqra::SteadyStateOutput& out) {
    if (!out.distances.empty()) {
        std::cout << "errL2: " << out.distances.front().second << " at t=" << out.distances.front().first << ", "
                  << out.distances.back().second << " at t=" << out.distances.back().first << '\n';
    }
    if (out.fit) {
        std::cout << "decay rate: " << out.fit->rate << " (R^2 = " << out.fit->r_squared << ", " << out.fit->samples
                  << " samples)\n";
    } else {
        std::cout << "no decay fit: " << out.fit_failure << '\n';
    }
    std::cout << "wrote " << out.file.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Square-root-approximation finite volumes for drift-diffusion with Butler-Volmer boundaries"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sqra 1.0");

    sqra::Overrides o;
    std::vector<std::size_t> cells;

    auto* run = app.add_subcommand("run", "march one configuration, write energy/Newton CSVs");
    add_common(*run, o);
    run->add_option("--cells", cells, "cell count of the uniform 1D mesh")->expected(1);

    auto* conv = app.add_subcommand("convergence", "spatial convergence study on nested 1D grids");
    add_common(*conv, o);
    conv->add_option("--cells", cells, "coarse cell counts")->expected(1, -1);

    auto* steady = app.add_subcommand("steady-state", "distance to the steady state over time");
    add_common(*steady, o);
    steady->add_option("--cells", cells, "cell count of the uniform 1D mesh")->expected(1);

    std::string mesh_path;
    auto* validate = app.add_subcommand("validate-mesh", "check a triangulation for admissibility");
    validate->add_option("path", mesh_path, "triangulation file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    o.cells = cells;

    try {
        if (validate->parsed()) {
            const sqra::MeshValidation v = sqra::cmd_validate_mesh(mesh_path);
            std::cout << v.text;
            return v.report.admissible() ? kOk : kFailure;
        }
        if (run->parsed()) {
            print_run(sqra::cmd_run(sqra::load_config(o, sqra::Command::Run)));
        } else if (conv->parsed()) {
            print_convergence(sqra::cmd_convergence(sqra::load_config(o, sqra::Command::Convergence)));
        } else if (steady->parsed()) {
            print_steady(sqra::cmd_steady_state(sqra::load_config(o, sqra::Command::SteadyState)));
        }
        return kOk;
    } catch (const sqra::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const sqra::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kUsage;
    } catch (const sqra::MeshError& e) {
        std::cerr << "mesh rejected: " << e.what() << '\n' << e.report().summary();
        return kFailure;
    } catch (const sqra::NonConvergence& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kFailure;
    } catch (const sqra::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
