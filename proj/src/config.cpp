#include "sqra/config.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#ifndef SQRA_DEFAULT_DATA_DIR
#define SQRA_DEFAULT_DATA_DIR ""
#endif

namespace sqra {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json uniform_1d(std::size_t cells) { return {{"type", "uniform-1d"}, {"cells", cells}, {"interval", {0.0, 1.0}}}; }

json mesh_file(const char* name) { return {{"type", "file"}, {"path", name}}; }

json constant(double v) { return {{"type", "constant"}, {"value", v}}; }

json affine(double c0, double c1, double c2) { return {{"type", "affine"}, {"coeffs", {c0, c1, c2}}}; }

json box(json lo, json hi) { return {{"type", "box"}, {"lo", lo}, {"hi", hi}, {"inside", 1.0}, {"outside", 0.0}}; }

json phases(std::initializer_list<std::pair<double, double>> list) {
    json out = json::array();
    for (const auto& [tau, until] : list) out.push_back({{"tau", tau}, {"until", until}});
    return out;
}

json newton_defaults() {
    return {{"rel_tol", 1e-12}, {"max_iters", 50}, {"clip", 1e-14}, {"step_halving", false}};
}

json preset_conv_1d() {
    return {
        {"preset", "conv-1d"},
        {"mesh", uniform_1d(100)},
        {"epsilon", 1.0},
        {"phi", affine(1.0, -1.0, 0.0)},
        {"alpha", constant(1.0)},
        {"beta", constant(0.5)},
        {"initial", box({-1.0, -1.0}, {0.5, 1.0})},
        {"schedule", phases({{0.01, 2.0}})},
        {"newton", newton_defaults()},
        {"convergence",
         {{"cells", {100, 200, 400, 800}},
          {"reference_cells", 6400},
          {"epsilons", {1.0, 0.2, 0.1, 0.02, 0.01}},
          {"threads", 0}}},
    };
}

json equilibrium_bc(json doc, double z) {
    doc["alpha"] = {{"type", "equilibrium-alpha"}, {"z", z}};
    doc["beta"] = {{"type", "equilibrium-beta"}, {"z", z}};
    return doc;
}

json preset_eq_1d() {
    json doc = preset_conv_1d();
    doc.erase("convergence");
    doc["preset"] = "eq-1d";
    doc["epsilon"] = 0.1;
    doc["initial"] = {{"type", "equilibrium"}, {"z", 0.5}};
    doc["schedule"] = phases({{0.01, 1.0}});
    return equilibrium_bc(doc, 0.5);
}

json preset_2d_base(const char* name, double epsilon) {
    return {
        {"preset", name},
        {"mesh", mesh_file("unit_square_978.mesh")},
        {"epsilon", epsilon},
        {"phi", affine(1.0, 0.0, -1.0)},
        {"initial", box({0.0, 0.0}, {0.5, 0.5})},
        {"schedule", phases({{0.1, 50.0}})},
        {"newton", newton_defaults()},
        {"output", {{"snapshots", {0.1, 0.5, 1.0, 2.0, 4.0, 50.0}}}},
    };
}

json preset_eq_2d() {
    json doc = equilibrium_bc(preset_2d_base("eq-2d", 0.1), 0.5);
    doc["steady_state"] = {
        {"schedule", phases({{0.1, 50.0}})}, {"reference", "equilibrium"}, {"z", 0.5}, {"fit_window", {1.0, 50.0}}};
    return doc;
}

json preset_noneq_2d() {
    json doc = preset_2d_base("noneq-2d", 0.01);
    doc["alpha"] = constant(1.0);
    doc["beta"] = {{"type", "noneq-beta"}};
    doc["steady_state"] = {{"schedule", phases({{0.1, 200.0}, {100.0, 1e4}})},
                           {"reference", "final"},
                           {"fit_window", {1.0, 50.0}}};
    return doc;
}

// ---------------------------------------------------------------- parsing

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!names.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

double get_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

std::size_t get_count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(where + ": expected a nonnegative integer");
    }
    return v.get<std::size_t>();
}

std::vector<double> get_numbers(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Point get_point(const json& v, const std::string& where) {
    const std::vector<double> xs = get_numbers(v, where);
    if (xs.size() != 2) throw ConfigError(where + ": expected [x1, x2]");
    return {xs[0], xs[1]};
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_string()) throw ConfigError(where + ": missing string '" + key + "'");
    return obj.at(key).get<std::string>();
}

FieldSpec parse_field(const json& j, const std::string& where) {
    FieldSpec f;
    f.kind = get_string(j, "type", where);
    if (f.kind == "constant") {
        check_keys(j, {"type", "value"}, where);
        f.value = get_number(j, "value", where);
    } else if (f.kind == "affine") {
        check_keys(j, {"type", "coeffs"}, where);
        if (!j.contains("coeffs")) throw ConfigError(where + ": missing 'coeffs'");
        f.coeffs = get_numbers(j.at("coeffs"), where + ".coeffs");
        if (f.coeffs.empty() || f.coeffs.size() > 3) throw ConfigError(where + ".coeffs: expected 1 to 3 numbers");
        f.coeffs.resize(3, 0.0);
    } else if (f.kind == "box") {
        check_keys(j, {"type", "lo", "hi", "inside", "outside"}, where);
        if (!j.contains("lo") || !j.contains("hi")) throw ConfigError(where + ": box needs 'lo' and 'hi'");
        f.lo = get_point(j.at("lo"), where + ".lo");
        f.hi = get_point(j.at("hi"), where + ".hi");
        f.inside = get_number(j, "inside", where, 1.0);
        f.outside = get_number(j, "outside", where, 0.0);
    } else if (f.kind == "equilibrium-alpha" || f.kind == "equilibrium-beta") {
        check_keys(j, {"type", "z"}, where);
        f.z = get_number(j, "z", where, 0.5);
    } else if (f.kind == "noneq-beta") {
        check_keys(j, {"type"}, where);
    } else {
        throw ConfigError(where + ": unknown field type '" + f.kind +
                          "' (constant, affine, box, equilibrium-alpha, equilibrium-beta, noneq-beta)");
    }
    return f;
}

TimeSchedule parse_schedule(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of {tau, until}");
    TimeSchedule s;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        check_keys(j[i], {"tau", "until"}, at);
        s.phases.push_back({get_number(j[i], "tau", at), get_number(j[i], "until", at)});
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return s;
}

MeshSource parse_mesh(const json& j, const fs::path& base_dir) {
    MeshSource m;
    const std::string type = get_string(j, "type", "mesh");
    if (type == "uniform-1d") {
        check_keys(j, {"type", "cells", "interval"}, "mesh");
        m.kind = MeshSource::Kind::Uniform1d;
        if (!j.contains("cells")) throw ConfigError("mesh: missing 'cells'");
        m.cells = get_count(j.at("cells"), "mesh.cells");
        if (m.cells == 0) throw ConfigError("mesh.cells must be positive");
        if (j.contains("interval")) {
            const Point ab = get_point(j.at("interval"), "mesh.interval");
            m.a = ab[0];
            m.b = ab[1];
        }
        if (!(m.b > m.a)) throw ConfigError("mesh.interval must satisfy a < b");
    } else if (type == "file") {
        check_keys(j, {"type", "path"}, "mesh");
        m.kind = MeshSource::Kind::File;
        m.path = resolve_data_file(get_string(j, "path", "mesh"), base_dir);
    } else {
        throw ConfigError("mesh: unknown type '" + type + "' (uniform-1d, file)");
    }
    return m;
}

NewtonConfig parse_newton(const json& j) {
    check_keys(j, {"rel_tol", "max_iters", "clip", "step_halving"}, "newton");
    NewtonConfig c;
    c.rel_tol = get_number(j, "rel_tol", "newton", c.rel_tol);
    if (j.contains("max_iters")) c.max_iters = get_count(j.at("max_iters"), "newton.max_iters");
    c.clip = get_number(j, "clip", "newton", c.clip);
    if (j.contains("step_halving")) {
        if (!j.at("step_halving").is_boolean()) throw ConfigError("newton.step_halving: expected true or false");
        c.step_halving = j.at("step_halving").get<bool>();
    }
    c.validate();
    return c;
}

ConvergenceSettings parse_convergence(const json& j) {
    check_keys(j, {"cells", "reference_cells", "epsilons", "threads"}, "convergence");
    ConvergenceSettings c;
    if (j.contains("cells")) {
        if (!j.at("cells").is_array()) throw ConfigError("convergence.cells: expected an array");
        for (const json& n : j.at("cells")) c.cells.push_back(get_count(n, "convergence.cells"));
    }
    if (j.contains("reference_cells")) c.reference_cells = get_count(j.at("reference_cells"), "convergence.reference_cells");
    if (j.contains("epsilons")) c.epsilons = get_numbers(j.at("epsilons"), "convergence.epsilons");
    if (j.contains("threads")) c.threads = static_cast<unsigned>(get_count(j.at("threads"), "convergence.threads"));
    for (double e : c.epsilons) {
        if (!(e > 0.0)) throw ConfigError("convergence.epsilons must be positive");
    }
    for (std::size_t n : c.cells) {
        if (n == 0) throw ConfigError("convergence.cells must be positive");
        if (c.reference_cells != 0 && c.reference_cells % n != 0) {
            throw ConfigError("convergence: " + std::to_string(n) + " cells do not nest in the reference grid of " +
                              std::to_string(c.reference_cells) + " cells");
        }
    }
    return c;
}

SteadyStateSettings parse_steady_state(const json& j) {
    check_keys(j, {"schedule", "reference", "z", "fit_window"}, "steady_state");
    SteadyStateSettings s;
    if (!j.contains("schedule")) throw ConfigError("steady_state: missing 'schedule'");
    s.schedule = parse_schedule(j.at("schedule"), "steady_state.schedule");
    if (s.schedule.phases.empty()) throw ConfigError("steady_state.schedule must have at least one phase");
    const std::string ref = j.contains("reference") ? get_string(j, "reference", "steady_state") : "equilibrium";
    if (ref == "equilibrium") {
        s.reference = SteadyStateSettings::Reference::Equilibrium;
    } else if (ref == "final") {
        s.reference = SteadyStateSettings::Reference::Final;
    } else {
        throw ConfigError("steady_state.reference: expected 'equilibrium' or 'final'");
    }
    s.z = get_number(j, "z", "steady_state", 0.5);
    if (j.contains("fit_window")) {
        const Point w = get_point(j.at("fit_window"), "steady_state.fit_window");
        s.fit_begin = w[0];
        s.fit_end = w[1];
    }
    if (!(s.fit_end > s.fit_begin)) throw ConfigError("steady_state.fit_window must satisfy begin < end");
    return s;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
}

json schedule_with(json schedule, const Overrides& o, const std::string& where) {
    if (!schedule.is_array()) schedule = json::array();
    if (schedule.empty()) {
        if (!o.tau || !o.final_time) {
            throw ConfigError(where + " is empty; give both --tau and --final-time");
        }
        schedule.push_back({{"tau", *o.tau}, {"until", *o.final_time}});
        return schedule;
    }
    if (o.tau) schedule.front()["tau"] = *o.tau;
    if (o.final_time) schedule.back()["until"] = *o.final_time;
    return schedule;
}

}  // namespace

std::vector<std::string> preset_names() { return {"conv-1d", "eq-1d", "eq-2d", "noneq-2d"}; }

json preset_document(const std::string& name) {
    if (name == "conv-1d") return preset_conv_1d();
    if (name == "eq-1d") return preset_eq_1d();
    if (name == "eq-2d") return preset_eq_2d();
    if (name == "noneq-2d") return preset_noneq_2d();
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

fs::path resolve_data_file(const fs::path& path, const fs::path& base_dir) {
    if (path.empty()) throw ConfigError("empty file path");
    std::vector<fs::path> candidates;
    if (path.is_absolute()) {
        candidates.push_back(path);
    } else {
        if (!base_dir.empty()) candidates.push_back(base_dir / path);
        candidates.push_back(fs::current_path() / path);
        if (const char* env = std::getenv("SQRA_DATA_DIR"); env && *env) candidates.push_back(fs::path(env) / path);
        if (*SQRA_DEFAULT_DATA_DIR) candidates.push_back(fs::path(SQRA_DEFAULT_DATA_DIR) / path);
    }
    for (const auto& c : candidates) {
        std::error_code ec;
        if (fs::is_regular_file(c, ec)) return fs::weakly_canonical(c);
    }
    std::string tried;
    for (const auto& c : candidates) tried += "\n  " + c.string();
    throw IoError("file '" + path.string() + "' not found; looked in:" + tried);
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
    check_keys(doc,
               {"preset", "mesh", "epsilon", "phi", "alpha", "beta", "initial", "schedule", "newton", "output",
                "convergence", "steady_state"},
               "config");
    ExperimentConfig c;
    c.document = doc;
    if (doc.contains("preset")) c.preset = get_string(doc, "preset", "config");

    for (const char* key : {"mesh", "phi", "alpha", "beta", "initial", "schedule"}) {
        if (!doc.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
    }
    c.mesh = parse_mesh(doc.at("mesh"), base_dir);
    c.epsilon = get_number(doc, "epsilon", "config");
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    c.phi = parse_field(doc.at("phi"), "phi");
    c.alpha = parse_field(doc.at("alpha"), "alpha");
    c.beta = parse_field(doc.at("beta"), "beta");
    for (const FieldSpec* f : {&c.phi}) {
        if (f->kind.rfind("equilibrium", 0) == 0 || f->kind == "noneq-beta") {
            throw ConfigError("phi cannot be a boundary-data field");
        }
    }

    const json& init = doc.at("initial");
    if (init.is_object() && init.value("type", "") == "equilibrium") {
        check_keys(init, {"type", "z"}, "initial");
        c.initial.equilibrium = true;
        c.initial.z = get_number(init, "z", "initial", 0.5);
    } else {
        c.initial.field = parse_field(init, "initial");
    }

    c.schedule = parse_schedule(doc.at("schedule"), "schedule");
    if (doc.contains("newton")) c.newton = parse_newton(doc.at("newton"));
    if (doc.contains("output")) {
        const json& out = doc.at("output");
        check_keys(out, {"dir", "snapshots"}, "output");
        if (out.contains("dir")) c.output_dir = get_string(out, "dir", "output");
        if (out.contains("snapshots")) c.snapshot_times = get_numbers(out.at("snapshots"), "output.snapshots");
    }
    if (doc.contains("convergence")) c.convergence = parse_convergence(doc.at("convergence"));
    if (doc.contains("steady_state")) c.steady_state = parse_steady_state(doc.at("steady_state"));
    return c;
}

ExperimentConfig load_config(const Overrides& o, Command command) {
    json file_doc = json::object();
    fs::path base_dir;
    if (o.config_file) {
        file_doc = read_json_file(*o.config_file);
        if (!file_doc.is_object()) throw ConfigError("config file must hold a JSON object");
        base_dir = fs::absolute(*o.config_file).parent_path();
    }

    std::string preset;
    if (o.preset) {
        preset = *o.preset;
    } else if (file_doc.contains("preset") && file_doc.at("preset").is_string()) {
        preset = file_doc.at("preset").get<std::string>();
    }
    json doc = preset.empty() ? json::object() : preset_document(preset);
    doc.merge_patch(file_doc);
    if (!preset.empty()) doc["preset"] = preset;

    if (const char* env = std::getenv("SQRA_OUT_DIR"); env && *env) doc["output"]["dir"] = env;
    if (o.output_dir) doc["output"]["dir"] = o.output_dir->string();
    if (o.epsilon) doc["epsilon"] = *o.epsilon;
    if (o.mesh) doc["mesh"] = {{"type", "file"}, {"path", resolve_data_file(*o.mesh).string()}};

    if (!o.cells.empty()) {
        if (command == Command::Convergence) {
            doc["convergence"]["cells"] = o.cells;
        } else {
            if (o.cells.size() != 1) throw ConfigError("--cells takes a single value for this command");
            if (!doc.contains("mesh") || doc["mesh"].value("type", "") != "uniform-1d") {
                throw ConfigError("--cells applies to uniform-1d meshes only");
            }
            doc["mesh"]["cells"] = o.cells.front();
        }
    }

    if (o.tau || o.final_time) {
        if (command == Command::SteadyState) {
            if (!doc.contains("steady_state")) throw ConfigError("the configuration has no steady_state section");
            doc["steady_state"]["schedule"] =
                schedule_with(doc["steady_state"].value("schedule", json::array()), o, "steady_state.schedule");
        } else {
            doc["schedule"] = schedule_with(doc.value("schedule", json::array()), o, "schedule");
        }
    }

    return parse_config(doc, base_dir);
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(document.dump()); }

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sqra
