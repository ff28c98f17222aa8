#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sqra/experiments.hpp"
#include "support.hpp"

using namespace sqra;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

Overrides preset(const std::string& name, const fs::path& out) {
    Overrides o;
    o.preset = name;
    o.output_dir = out;
    return o;
}

/// Unsets an environment variable for the lifetime of the guard.
struct EnvGuard {
    explicit EnvGuard(const char* name) : name_(name) {
        if (const char* v = std::getenv(name)) old_ = v;
        ::unsetenv(name);
    }
    ~EnvGuard() {
        if (old_.empty()) {
            ::unsetenv(name_);
        } else {
            ::setenv(name_, old_.c_str(), 1);
        }
    }
    const char* name_;
    std::string old_;
};

}  // namespace

TEST_CASE("every preset loads") {
    EnvGuard env("SQRA_OUT_DIR");
    for (const std::string& name : preset_names()) {
        CAPTURE(name);
        Overrides o;
        o.preset = name;
        const ExperimentConfig c = load_config(o);
        CHECK(c.preset == name);
        CHECK_FALSE(c.schedule.phases.empty());
        CHECK(c.output_dir == "out");
    }
    CHECK_THROWS_AS(preset_document("nope"), ConfigError);
}

TEST_CASE("preset contents") {
    EnvGuard env("SQRA_OUT_DIR");
    const ExperimentConfig conv = load_config(preset("conv-1d", "x"), Command::Convergence);
    CHECK(conv.epsilon == 1.0);
    CHECK(conv.mesh.cells == 100);
    CHECK(conv.schedule.num_steps() == 200);
    CHECK(conv.convergence.cells == std::vector<std::size_t>{100, 200, 400, 800});
    CHECK(conv.convergence.reference_cells == 6400);
    CHECK(conv.convergence.epsilons == std::vector<double>{1.0, 0.2, 0.1, 0.02, 0.01});

    const ExperimentConfig noneq = load_config(preset("noneq-2d", "x"));
    CHECK(noneq.epsilon == 0.01);
    CHECK(noneq.mesh.kind == MeshSource::Kind::File);
    REQUIRE(noneq.steady_state);
    CHECK(noneq.steady_state->reference == SteadyStateSettings::Reference::Final);
    CHECK(noneq.steady_state->schedule.final_time() == 1e4);

    const ExperimentConfig eq = load_config(preset("eq-1d", "x"));
    CHECK(eq.initial.equilibrium);
    CHECK(eq.alpha.kind == "equilibrium-alpha");
}

TEST_CASE("precedence: preset < file < environment < flags") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path dir = testing::scratch_dir("config_precedence");
    std::ofstream(dir / "c.json") << R"({
        // comments are allowed
        "preset": "conv-1d",
        "epsilon": 0.5,
        "output": {"dir": "from-file"},
        "schedule": [{"tau": 0.02, "until": 1.0}]
    })";
    Overrides o;
    o.config_file = dir / "c.json";
    ExperimentConfig c = load_config(o);
    CHECK(c.preset == "conv-1d");
    CHECK(c.epsilon == 0.5);
    CHECK(c.output_dir == "from-file");
    CHECK(c.schedule.phases.size() == 1);
    CHECK(c.schedule.phases[0].tau == 0.02);
    CHECK(c.alpha.kind == "constant");  // inherited from the preset

    ::setenv("SQRA_OUT_DIR", "from-env", 1);
    c = load_config(o);
    CHECK(c.output_dir == "from-env");

    o.output_dir = "from-flag";
    o.epsilon = 0.25;
    o.tau = 0.05;
    o.final_time = 0.5;
    o.cells = {40};
    c = load_config(o);
    CHECK(c.output_dir == "from-flag");
    CHECK(c.epsilon == 0.25);
    CHECK(c.schedule.phases[0].tau == 0.05);
    CHECK(c.schedule.final_time() == 0.5);
    CHECK(c.mesh.cells == 40);
}

TEST_CASE("schedule flags act on the steady-state schedule for that command") {
    EnvGuard env("SQRA_OUT_DIR");
    Overrides o = preset("noneq-2d", "x");
    o.tau = 0.2;
    o.final_time = 300.0;
    const ExperimentConfig c = load_config(o, Command::SteadyState);
    REQUIRE(c.steady_state);
    CHECK(c.steady_state->schedule.phases.front().tau == 0.2);
    CHECK(c.steady_state->schedule.phases.back().until == 300.0);
    CHECK(c.schedule.phases.front().tau == 0.1);
}

TEST_CASE("configuration errors name the offending key") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path dir = testing::scratch_dir("config_errors");
    auto load = [&](const std::string& body) {
        std::ofstream(dir / "c.json") << body;
        Overrides o;
        o.config_file = dir / "c.json";
        return load_config(o);
    };
    auto message = [&](const std::string& body) -> std::string {
        try {
            load(body);
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message(R"({"preset": "conv-1d", "epsilonn": 1})").find("epsilonn") != std::string::npos);
    CHECK(message(R"({"preset": "conv-1d", "newton": {"tol": 1}})").find("newton") != std::string::npos);
    CHECK(message(R"({"preset": "conv-1d", "epsilon": -1})").find("epsilon") != std::string::npos);
    CHECK(message(R"({"preset": "conv-1d", "schedule": [{"tau": 0.3, "until": 1}]})").find("schedule") !=
          std::string::npos);
    CHECK(message(R"({"preset": "conv-1d", "phi": {"type": "noneq-beta"}})").find("phi") != std::string::npos);
    CHECK(message(R"({"preset": "conv-1d", "convergence": {"cells": [3]}})").find("nest") != std::string::npos);
    CHECK_FALSE(message("{ not json").empty());
    CHECK_THROWS_AS(load(R"({"preset": "eq-2d", "mesh": {"type": "file", "path": "missing.mesh"}})"), IoError);

    Overrides o;
    o.config_file = dir / "does-not-exist.json";
    CHECK_THROWS_AS(load_config(o), IoError);
    Overrides two = preset("conv-1d", "x");
    two.cells = {10, 20};
    CHECK_THROWS_AS(load_config(two, Command::Run), ConfigError);
    Overrides file_mesh = preset("eq-2d", "x");
    file_mesh.cells = {10};
    CHECK_THROWS_AS(load_config(file_mesh, Command::Run), ConfigError);
}

TEST_CASE("relative mesh paths resolve against the config file directory") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path dir = testing::scratch_dir("config_mesh");
    fs::copy_file(testing::data_file("unit_square_208.mesh"), dir / "mine.mesh");
    std::ofstream(dir / "c.json") << R"({"preset": "eq-2d", "mesh": {"type": "file", "path": "mine.mesh"}})";
    Overrides o;
    o.config_file = dir / "c.json";
    const ExperimentConfig c = load_config(o);
    CHECK(fs::equivalent(c.mesh.path, dir / "mine.mesh"));
    CHECK(build_mesh(c.mesh).num_cells() == 208);
}

TEST_CASE("the configuration hash is deterministic and content-sensitive") {
    EnvGuard env("SQRA_OUT_DIR");
    const std::string a = load_config(preset("conv-1d", "x")).hash();
    CHECK(a.size() == 16);
    CHECK(load_config(preset("conv-1d", "x")).hash() == a);
    Overrides o = preset("conv-1d", "x");
    o.epsilon = 0.5;
    CHECK(load_config(o).hash() != a);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("run writes its outputs") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_run");
    Overrides o = preset("conv-1d", out);
    o.cells = {20};
    o.final_time = 0.1;
    const RunOutput r = cmd_run(load_config(o));
    CHECK(r.march.steps == 10);
    CHECK(r.report.n_cells == 20);
    CHECK(r.bounds.violations == 0);
    const std::string energy = slurp(out / "energy.csv");
    CHECK(energy.rfind("# config=", 0) == 0);
    CHECK(count_lines(energy) == 12);
    CHECK(count_lines(slurp(out / "newton.csv")) == 12);
    CHECK(fs::exists(out / "config.json"));
    CHECK_FALSE(fs::exists(out / "snapshots.csv"));
    const auto saved = nlohmann::json::parse(slurp(out / "config.json"));
    CHECK(saved["mesh"]["cells"] == 20);

    o.final_time = 0.0;
    const RunOutput none = cmd_run(load_config(o));
    CHECK(none.march.steps == 0);
    CHECK(none.march.final_state.rho_cell == build_problem(load_config(o)).rho0);
    CHECK(count_lines(slurp(out / "energy.csv")) == 2);
}

TEST_CASE("run records snapshots at the first step reaching each time") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_snapshots");
    Overrides o = preset("eq-2d", out);
    o.mesh = testing::data_file("unit_square_208.mesh");
    o.final_time = 0.5;
    const ExperimentConfig c = load_config(o);
    const RunOutput r = cmd_run(c);
    CHECK(r.march.steps == 5);
    // 0.1 and 0.5 fall inside the run; later requested times do not.
    CHECK(count_lines(slurp(out / "snapshots.csv")) == 2 + 2 * 208);
}

TEST_CASE("convergence study at toy scale") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_conv");
    Overrides o = preset("conv-1d", out);
    o.final_time = 0.1;
    ExperimentConfig c = load_config(o, Command::Convergence);
    c.convergence.cells = {10, 20, 40};
    c.convergence.reference_cells = 320;
    c.convergence.epsilons = {1.0, 0.1};
    c.convergence.threads = 3;
    const ConvergenceOutput r = cmd_convergence(c);
    REQUIRE(r.series.size() == 2);
    for (const auto& s : r.series) {
        REQUIRE(s.rows.size() == 3);
        CHECK(s.rows[0].second > s.rows[1].second);
        CHECK(s.rows[1].second > s.rows[2].second);
        REQUIRE(s.order);
        CHECK(*s.order > 1.0);
        CHECK(s.bounds.violations == 0);
        CHECK(fs::exists(s.file));
    }
    CHECK(fs::exists(out / "errors_eps_1.csv"));
    CHECK(fs::exists(out / "errors_eps_0.1.csv"));

    // The same grid as the reference reproduces it exactly, at any thread count.
    c.convergence.cells = {40};
    c.convergence.reference_cells = 40;
    c.convergence.epsilons = {0.1};
    c.convergence.threads = 1;
    const ConvergenceOutput same = cmd_convergence(c);
    CHECK(same.series[0].rows[0].second == 0.0);
    CHECK_FALSE(same.series[0].order);

    c.convergence.cells = {30};
    CHECK_THROWS_AS(cmd_convergence(c), NonNestedMeshes);
}

TEST_CASE("steady state: equilibrium start stays at distance zero") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_steady_eq");
    Overrides o = preset("eq-2d", out);
    o.mesh = testing::data_file("unit_square_208.mesh");
    o.final_time = 1.0;
    ExperimentConfig c = load_config(o, Command::SteadyState);
    c.initial.equilibrium = true;
    const SteadyStateOutput r = cmd_steady_state(c);
    REQUIRE(r.distances.size() == 11);
    for (const auto& [t, d] : r.distances) CHECK(d <= 1e-12);
    CHECK(fs::exists(r.file));
}

TEST_CASE("steady state: decay towards the equilibrium") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_steady_decay");
    Overrides o = preset("eq-2d", out);
    o.mesh = testing::data_file("unit_square_208.mesh");
    o.final_time = 5.0;
    ExperimentConfig c = load_config(o, Command::SteadyState);
    c.steady_state->fit_end = 5.0;
    const SteadyStateOutput r = cmd_steady_state(c);
    REQUIRE(r.fit);
    CHECK(r.fit->rate < 0.0);
    CHECK(r.fit->samples == 41);
    CHECK(r.distances.back().second < r.distances.front().second);
    CHECK(count_lines(slurp(r.file)) == 2 + r.distances.size());
}

TEST_CASE("steady state: final-state reference keeps the first phase only") {
    EnvGuard env("SQRA_OUT_DIR");
    const fs::path out = testing::scratch_dir("cmd_steady_final");
    Overrides o = preset("noneq-2d", out);
    o.mesh = testing::data_file("unit_square_208.mesh");
    ExperimentConfig c = load_config(o, Command::SteadyState);
    c.steady_state->schedule.phases = {{0.1, 2.0}, {1.0, 20.0}};
    c.steady_state->fit_begin = 0.5;
    c.steady_state->fit_end = 2.0;
    const SteadyStateOutput r = cmd_steady_state(c);
    CHECK(r.distances.size() == 21);
    CHECK(r.distances.back().first == doctest::Approx(2.0));
    CHECK(r.bounds.violations == 0);
    REQUIRE(r.fit);
    CHECK(r.fit->rate < 0.0);

    c.steady_state.reset();
    CHECK_THROWS_AS(cmd_steady_state(c), ConfigError);
}

TEST_CASE("validate-mesh reports admissibility without throwing") {
    const MeshValidation ok = cmd_validate_mesh(testing::data_file("unit_square_978.mesh"));
    CHECK(ok.report.admissible());
    CHECK(ok.cells == 978);
    CHECK(ok.text.find("978 cells") != std::string::npos);

    const fs::path dir = testing::scratch_dir("validate");
    Triangulation t;
    t.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    t.triangles = {{0, 1, 2}, {0, 2, 3}};
    write_triangulation(dir / "diag.mesh", t);
    const MeshValidation bad = cmd_validate_mesh(dir / "diag.mesh");
    CHECK_FALSE(bad.report.admissible());
    CHECK_FALSE(bad.text.empty());
    CHECK_THROWS_AS(cmd_validate_mesh(dir / "missing.mesh"), IoError);
}
