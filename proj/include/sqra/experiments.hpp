#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqra/config.hpp"
#include "sqra/diagnostics.hpp"
#include "sqra/mesh.hpp"
#include "sqra/physics.hpp"
#include "sqra/solver.hpp"

namespace sqra {

/// A configuration turned into something time_march can consume.
struct Problem {
    Mesh mesh;
    DiscreteData data;
    std::vector<double> rho0;
};

ScalarField build_field(const FieldSpec& spec, const ScalarField& phi, double epsilon);
Mesh build_mesh(const MeshSource& source);
ProblemSpec build_problem_spec(const ExperimentConfig& config);
Problem build_problem(const ExperimentConfig& config);

struct RunOutput {
    RunReport report;
    MarchResult march;
    BoundsObserver bounds;
    std::vector<std::filesystem::path> files;
};

/// Marches the configured problem, writing energy.csv, newton.csv,
/// snapshots.csv (when snapshot times are configured) and config.json.
RunOutput cmd_run(const ExperimentConfig& config);

struct ConvergenceSeries {
    double epsilon = 0.0;
    std::vector<std::pair<std::size_t, double>> rows;  ///< (cells, errLinfL1)
    std::optional<double> order;                       ///< unset when an error is exactly 0
    BoundsObserver bounds;                             ///< over every run of this epsilon
    std::filesystem::path file;
};

struct ConvergenceOutput {
    std::vector<ConvergenceSeries> series;
};

/// For each epsilon: one reference run on the finest grid, one run per
/// coarse grid, the relative L^inf(L^1) error of each. Independent runs
/// are spread over worker threads. Writes errors_eps_<eps>.csv per epsilon.
ConvergenceOutput cmd_convergence(const ExperimentConfig& config);

struct SteadyStateOutput {
    std::vector<std::pair<double, double>> distances;  ///< (t, errL2) over the first phase
    std::optional<DecayFit> fit;
    std::string fit_failure;  ///< why `fit` is unset
    std::vector<double> steady;
    BoundsObserver bounds;
    std::filesystem::path file;
};

/// Marches the steady_state schedule. The reference is either the closed-form
/// equilibrium or the final state of the march; distances are reported
/// over the first phase and fitted on the configured window. Writes
/// longtime.csv.
SteadyStateOutput cmd_steady_state(const ExperimentConfig& config);

struct MeshValidation {
    AdmissibilityReport report;
    std::size_t cells = 0;
    std::size_t faces = 0;
    /// Multi-line, human-readable description of the mesh and its defects.
    std::string text;
};

/// Reads a triangulation file and checks admissibility without throwing on
/// a non-admissible mesh (IoError for unreadable files).
MeshValidation cmd_validate_mesh(const std::filesystem::path& path);

}  // namespace sqra
