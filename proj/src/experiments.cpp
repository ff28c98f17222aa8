#include "sqra/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace sqra {

namespace fs = std::filesystem;

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string describe(const TimeSchedule& s) {
    std::string out;
    for (const auto& p : s.phases) {
        if (!out.empty()) out += "; ";
        out += "tau=" + short_number(p.tau) + " until " + short_number(p.until);
    }
    return out.empty() ? "(empty)" : out;
}

/// Keeps the first state at or after each requested time.
class SnapshotRecorder : public StepObserver {
public:
    explicit SnapshotRecorder(std::vector<double> times) : pending_(std::move(times)) {
        std::sort(pending_.begin(), pending_.end());
    }

    void on_start(const State& s) override { take(s); }
    void on_step(const StepEvent& e) override { take(e.state); }

    Trajectory snapshots;

private:
    void take(const State& s) {
        bool hit = false;
        while (!pending_.empty() && (pending_.front() <= s.time || same_time(pending_.front(), s.time))) {
            pending_.erase(pending_.begin());
            hit = true;
        }
        if (hit) snapshots.push(s.time, s.rho_cell);
    }

    std::vector<double> pending_;
};

/// L2 distance to a fixed state at every recorded time up to `until`.
class DistanceRecorder : public StepObserver {
public:
    DistanceRecorder(const Mesh& mesh, std::vector<double> steady, double until)
        : mesh_(mesh), steady_(std::move(steady)), until_(until) {}

    void on_start(const State& s) override { take(s); }
    void on_step(const StepEvent& e) override { take(e.state); }

    std::vector<std::pair<double, double>> series;

private:
    void take(const State& s) {
        if (s.time <= until_ || same_time(s.time, until_)) {
            series.emplace_back(s.time, steady_state_distance(s.rho_cell, steady_, mesh_));
        }
    }

    const Mesh& mesh_;
    std::vector<double> steady_;
    double until_;
};

Trajectory trajectory_until(const Trajectory& full, double until) {
    Trajectory out;
    for (std::size_t n = 0; n < full.times.size(); ++n) {
        if (full.times[n] <= until || same_time(full.times[n], until)) out.push(full.times[n], full.states[n]);
    }
    return out;
}

void fill_metadata(RunReport& r, const ExperimentConfig& config, const Mesh& mesh, const TimeSchedule& schedule) {
    const AdmissibilityReport quality = validate_admissibility(mesh);
    r.n_cells = mesh.num_cells();
    r.mesh_size = quality.quality.size;
    r.regularity = quality.quality.regularity;
    r.epsilon = config.epsilon;
    r.schedule = describe(schedule);
    r.config_hash = config.hash();
}

fs::path write_output(const ExperimentConfig& config, const std::string& name, const std::string& content) {
    const fs::path path = config.output_dir / name;
    write_file_atomic(path, content);
    return path;
}

fs::path write_resolved_config(const ExperimentConfig& config) {
    return write_output(config, "config.json", config.document.dump(2) + "\n");
}

}  // namespace

ScalarField build_field(const FieldSpec& spec, const ScalarField& phi, double epsilon) {
    if (spec.kind == "constant") return constant_field(spec.value);
    if (spec.kind == "affine") {
        const double c2 = spec.coeffs.size() > 2 ? spec.coeffs[2] : 0.0;
        return affine_field(spec.coeffs.at(0), spec.coeffs.size() > 1 ? spec.coeffs[1] : 0.0, c2);
    }
    if (spec.kind == "box") return box_field(spec.lo, spec.hi, spec.inside, spec.outside);

    ScalarField f;
    if (spec.kind == "equilibrium-alpha" || spec.kind == "equilibrium-beta") {
        const double z = spec.z;
        const double shift = spec.kind == "equilibrium-alpha" ? 1.0 : 0.0;
        f.value = [phi, z, epsilon, shift](const Point& x) { return shift + std::exp(-(phi(x) - z) / epsilon); };
        f.description = spec.kind + "(z=" + short_number(z) + ")";
        return f;
    }
    if (spec.kind == "noneq-beta") {
        f.value = [](const Point& x) {
            constexpr double pi = std::numbers::pi;
            const double c = std::cos(1.5 * pi * x[1]);
            return 0.1 + 0.8 * (c * c + (2.0 * x[1] - 1.0) * std::sin(pi * x[0]));
        };
        f.description = "noneq-beta";
        return f;
    }
    throw ConfigError("unknown field type '" + spec.kind + "'");
}

Mesh build_mesh(const MeshSource& source) {
    if (source.kind == MeshSource::Kind::Uniform1d) return build_uniform_1d(source.cells, source.a, source.b);
    return build_from_triangulation(read_triangulation(source.path));
}

ProblemSpec build_problem_spec(const ExperimentConfig& config) {
    ProblemSpec spec;
    spec.epsilon = config.epsilon;
    spec.phi = build_field(config.phi, {}, config.epsilon);
    spec.alpha = build_field(config.alpha, spec.phi, config.epsilon);
    spec.beta = build_field(config.beta, spec.phi, config.epsilon);
    // Equilibrium initial data is set per cell after discretization.
    spec.rho0 = config.initial.equilibrium ? constant_field(0.5)
                                           : build_field(config.initial.field, spec.phi, config.epsilon);
    spec.schedule = config.schedule;
    spec.validate();
    return spec;
}

Problem build_problem(const ExperimentConfig& config) {
    Problem p;
    p.mesh = build_mesh(config.mesh);
    p.data = discretize(build_problem_spec(config), p.mesh);
    if (config.initial.equilibrium) p.data.rho0_cell = equilibrium_density(p.mesh, p.data, config.initial.z);
    p.rho0 = p.data.rho0_cell;
    return p;
}

RunOutput cmd_run(const ExperimentConfig& config) {
    const Problem problem = build_problem(config);
    ReportRecorder report(problem.mesh, problem.data);
    SnapshotRecorder snapshots(config.snapshot_times);
    RunOutput out;
    StepObserver* observers[] = {&report, &snapshots, &out.bounds};
    out.march = time_march(problem.rho0, problem.mesh, problem.data, config.schedule, config.newton, observers);

    out.report = std::move(report.report());
    fill_metadata(out.report, config, problem.mesh, config.schedule);
    out.files.push_back(write_output(config, "energy.csv", energy_csv(out.report)));
    out.files.push_back(write_output(config, "newton.csv", newton_csv(out.report)));
    if (!config.snapshot_times.empty()) {
        out.files.push_back(write_output(config, "snapshots.csv", snapshot_csv(snapshots.snapshots, config.hash())));
    }
    out.files.push_back(write_resolved_config(config));
    return out;
}

ConvergenceOutput cmd_convergence(const ExperimentConfig& config) {
    const ConvergenceSettings& cs = config.convergence;
    if (config.mesh.kind != MeshSource::Kind::Uniform1d) throw ConfigError("convergence needs a uniform-1d mesh");
    if (cs.cells.empty()) throw ConfigError("convergence.cells is empty");
    if (cs.reference_cells == 0) throw ConfigError("convergence.reference_cells is not set");
    for (std::size_t n : cs.cells) {
        if (cs.reference_cells % n != 0) {
            throw NonNestedMeshes(std::to_string(n) + " cells do not nest in the reference grid of " +
                                  std::to_string(cs.reference_cells) + " cells");
        }
    }
    const std::vector<double> epsilons = cs.epsilons.empty() ? std::vector<double>{config.epsilon} : cs.epsilons;

    // One task per (epsilon, grid); grid index cs.cells.size() is the reference.
    struct Task {
        std::size_t eps_index;
        std::size_t grid_index;
        std::size_t cells;
        Trajectory trajectory;
        BoundsObserver bounds;
    };
    std::vector<Task> tasks;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        for (std::size_t g = 0; g <= cs.cells.size(); ++g) {
            tasks.push_back({e, g, g < cs.cells.size() ? cs.cells[g] : cs.reference_cells, {}, {}});
        }
    }
    // Largest grids first so the long reference runs start early.
    std::vector<std::size_t> order(tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return tasks[a].cells > tasks[b].cells; });

    auto run_task = [&](Task& t) {
        ExperimentConfig c = config;
        c.mesh.cells = t.cells;
        c.epsilon = epsilons[t.eps_index];
        const Problem p = build_problem(c);
        TrajectoryRecorder recorder;
        StepObserver* observers[] = {&recorder, &t.bounds};
        time_march(p.rho0, p.mesh, p.data, c.schedule, c.newton, observers);
        t.trajectory = std::move(recorder.trajectory);
    };

    unsigned workers = cs.threads ? cs.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < order.size(); i = next++) {
            try {
                run_task(tasks[order[i]]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = order.size();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    ConvergenceOutput out;
    const Mesh fine = build_uniform_1d(cs.reference_cells, config.mesh.a, config.mesh.b);
    const std::size_t per_eps = cs.cells.size() + 1;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        ConvergenceSeries series;
        series.epsilon = epsilons[e];
        const Task& ref = tasks[e * per_eps + cs.cells.size()];
        std::vector<double> errors, sizes;
        for (std::size_t g = 0; g < per_eps; ++g) {
            const BoundsObserver& b = tasks[e * per_eps + g].bounds;
            series.bounds.min = std::min(series.bounds.min, b.min);
            series.bounds.max = std::max(series.bounds.max, b.max);
            series.bounds.violations += b.violations;
        }
        for (std::size_t g = 0; g < cs.cells.size(); ++g) {
            const Task& t = tasks[e * per_eps + g];
            const Mesh coarse = build_uniform_1d(t.cells, config.mesh.a, config.mesh.b);
            const double err = error_linf_l1(t.trajectory, ref.trajectory, coarse, fine);
            series.rows.emplace_back(t.cells, err);
            errors.push_back(err);
            sizes.push_back((config.mesh.b - config.mesh.a) / static_cast<double>(t.cells));
        }
        if (errors.size() >= 2 && std::all_of(errors.begin(), errors.end(), [](double v) { return v > 0.0; })) {
            series.order = observed_order(errors, sizes);
        }
        series.file = write_output(config, "errors_eps_" + short_number(series.epsilon) + ".csv",
                                   error_csv(series.rows, config.hash()));
        out.series.push_back(std::move(series));
    }
    write_resolved_config(config);
    return out;
}

SteadyStateOutput cmd_steady_state(const ExperimentConfig& config) {
    if (!config.steady_state) throw ConfigError("the configuration has no steady_state section");
    const SteadyStateSettings& ss = *config.steady_state;
    const Problem problem = build_problem(config);
    const double first_phase_end = ss.schedule.phases.front().until;

    SteadyStateOutput out;
    if (ss.reference == SteadyStateSettings::Reference::Equilibrium) {
        out.steady = equilibrium_density(problem.mesh, problem.data, ss.z);
        DistanceRecorder distances(problem.mesh, out.steady, first_phase_end);
        StepObserver* observers[] = {&distances, &out.bounds};
        time_march(problem.rho0, problem.mesh, problem.data, ss.schedule, config.newton, observers);
        out.distances = std::move(distances.series);
    } else {
        TrajectoryRecorder recorder;
        // Only the first phase is kept; the rest of the march defines the limit.
        class FirstPhase : public StepObserver {
        public:
            FirstPhase(TrajectoryRecorder& r, double until) : r_(r), until_(until) {}
            void on_start(const State& s) override { r_.on_start(s); }
            void on_step(const StepEvent& e) override {
                if (e.state.time <= until_ || same_time(e.state.time, until_)) r_.on_step(e);
            }

        private:
            TrajectoryRecorder& r_;
            double until_;
        } first_phase(recorder, first_phase_end);
        StepObserver* observers[] = {&first_phase, &out.bounds};
        MarchResult march =
            time_march(problem.rho0, problem.mesh, problem.data, ss.schedule, config.newton, observers);
        out.steady = std::move(march.final_state.rho_cell);
        const Trajectory kept = trajectory_until(recorder.trajectory, first_phase_end);
        for (std::size_t n = 0; n < kept.times.size(); ++n) {
            out.distances.emplace_back(kept.times[n], steady_state_distance(kept.states[n], out.steady, problem.mesh));
        }
    }

    try {
        out.fit = decay_rate_fit(out.distances, ss.fit_begin, ss.fit_end);
    } catch (const DegenerateInput& e) {
        out.fit_failure = e.what();
    }
    out.file = write_output(config, "longtime.csv", longtime_csv(out.distances, config.hash()));
    write_resolved_config(config);
    return out;
}

MeshValidation cmd_validate_mesh(const fs::path& path) {
    MeshValidation v;
    const Triangulation tri = read_triangulation(path);
    const Mesh mesh = assemble_triangulation(tri);
    v.report = validate_admissibility(mesh);
    v.cells = mesh.num_cells();
    v.faces = mesh.num_faces();
    std::ostringstream os;
    os << path.string() << ": " << v.cells << " cells, " << v.faces << " faces ("
       << mesh.interior_faces.size() << " interior, " << mesh.exterior_faces.size() << " exterior)\n";
    os << v.report.summary();
    v.text = os.str();
    return v;
}

}  // namespace sqra
