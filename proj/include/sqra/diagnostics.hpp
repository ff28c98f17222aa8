#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqra/mesh.hpp"
#include "sqra/scheme.hpp"
#include "sqra/solver.hpp"

namespace sqra {

class NonNestedMeshes : public Error {
public:
    using Error::Error;
};

class TimeGridMismatch : public Error {
public:
    using Error::Error;
};

/// Fit or order estimate on degenerate input (zero error, empty window, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Cell values at a sequence of times.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;

    void push(double t, std::span<const double> rho) {
        times.push_back(t);
        states.emplace_back(rho.begin(), rho.end());
    }
};

/// Records the initial state and every accepted step.
class TrajectoryRecorder : public StepObserver {
public:
    void on_start(const State& initial) override { trajectory.push(initial.time, initial.rho_cell); }
    void on_step(const StepEvent& e) override { trajectory.push(e.state.time, e.state.rho_cell); }

    Trajectory trajectory;
};

/// Tracks the extreme cell values over the accepted steps of a march and
/// counts values outside the open interval (0, 1). The initial state is not
/// inspected since it may legitimately touch 0 or 1.
class BoundsObserver : public StepObserver {
public:
    void on_step(const StepEvent& e) override { observe(e.state.rho_cell); }

    double min = 1.0;
    double max = 0.0;
    std::size_t violations = 0;

private:
    void observe(std::span<const double> rho) {
        for (double r : rho) {
            min = std::min(min, r);
            max = std::max(max, r);
            if (!(r > 0.0 && r < 1.0)) ++violations;
        }
    }
};

/// Measure-weighted average of fine cells onto the coarse cells they
/// refine. Both meshes must be uniform 1D grids of the same interval with
/// an integer refinement factor.
std::vector<double> project_to_coarse(std::span<const double> fine_values, const Mesh& coarse, const Mesh& fine);

/// max_n || P(ref^n) - run^n ||_L1 / max_n || P(ref^n) ||_L1 over the
/// run's time stamps; every run time must appear in the reference.
double error_linf_l1(const Trajectory& run, const Trajectory& reference, const Mesh& coarse, const Mesh& fine);

/// Least-squares slope of log(error) against log(size).
double observed_order(std::span<const double> errors, std::span<const double> sizes);

/// sqrt(sum_K m_K (rho_K - steady_K)^2)
double steady_state_distance(std::span<const double> state, std::span<const double> steady, const Mesh& mesh);

struct DecayFit {
    double rate = 0.0;       ///< slope of log(distance) vs t
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t samples = 0;
};

/// Log-linear least squares over the samples with t in [t_begin, t_end].
DecayFit decay_rate_fit(std::span<const std::pair<double, double>> series, double t_begin, double t_end);

/// Per-step record written to the energy and Newton CSV files. Series hold
/// accepted steps only; the initial energy is kept separately.
struct RunReport {
    std::vector<double> time;
    std::vector<double> bulk_energy;
    std::vector<double> total_energy;
    std::vector<double> primal;
    std::vector<double> dual;
    std::vector<double> inequality_residual;
    std::vector<std::size_t> newton_iters;
    double initial_energy = 0.0;

    std::size_t n_cells = 0;
    double mesh_size = 0.0;
    double regularity = 0.0;
    double epsilon = 0.0;
    std::string schedule;
    std::string config_hash;
};

/// Feeds an EnergyLedger and collects Newton counts.
class ReportRecorder : public StepObserver {
public:
    ReportRecorder(const Mesh& mesh, const DiscreteData& data) : mesh_(mesh), data_(data) {}

    void on_start(const State& initial) override;
    void on_step(const StepEvent& e) override;

    const EnergyLedger& ledger() const noexcept { return ledger_; }
    RunReport& report() noexcept { return report_; }
    const RunReport& report() const noexcept { return report_; }

private:
    const Mesh& mesh_;
    const DiscreteData& data_;
    EnergyLedger ledger_;
    RunReport report_;
};

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Formats a value with 17 significant digits.
std::string csv_number(double v);

std::string energy_csv(const RunReport& report);
std::string newton_csv(const RunReport& report);
std::string error_csv(std::span<const std::pair<std::size_t, double>> rows, const std::string& config_hash);
std::string longtime_csv(std::span<const std::pair<double, double>> series, const std::string& config_hash);
std::string snapshot_csv(const Trajectory& snapshots, const std::string& config_hash);

}  // namespace sqra
