#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "sqra/mesh.hpp"
#include "sqra/physics.hpp"
#include "sqra/scheme.hpp"

namespace sqra {

struct NewtonConfig {
    double rel_tol = 1e-12;
    std::size_t max_iters = 50;
    /// Iterates are projected onto [clip, 1 - clip].
    double clip = 1e-14;
    /// On non-convergence, retry the step as two half steps, at most 10 levels deep.
    bool step_halving = false;

    void validate() const;
};

struct StepStats {
    std::size_t newton_iters = 0;
    double final_increment = 0.0;  ///< ||d rho||_inf / ||rho||_inf of the last iterate
    double linear_residual = 0.0;  ///< worst relative linear-solve residual
    std::size_t substeps = 1;      ///< > 1 when step halving kicked in
    double wall_time = 0.0;        ///< seconds
};

struct StepResult {
    std::vector<double> rho;
    StepStats stats;
};

/// Sparse direct solve (LU). Throws LinearSolveFailure on a singular or
/// non-finite system. `relative_residual`, when given, receives
/// ||J x - rhs||_inf / ||rhs||_inf.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs,
                             double* relative_residual = nullptr);

/// One implicit Euler step: Newton on H(rho) = 0 starting from rho_old.
StepResult newton_solve(std::span<const double> rho_old, const Mesh& mesh, const DiscreteData& data, double tau,
                        const NewtonConfig& config = {});

/// Everything an observer sees about an accepted step.
struct StepEvent {
    std::size_t index;  ///< 1-based step number
    double tau;
    std::span<const double> rho_old;
    const State& state;
    const FluxField& flux;
    const StepStats& stats;
};

class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void on_start(const State& /*initial*/) {}
    virtual void on_step(const StepEvent& event) = 0;
};

struct MarchResult {
    State final_state;
    std::size_t steps = 0;
    std::size_t total_newton_iters = 0;
};

/// Marches rho0 through every phase of `schedule`. Failures are rethrown
/// with the index of the failing step.
MarchResult time_march(std::vector<double> rho0, const Mesh& mesh, const DiscreteData& data,
                       const TimeSchedule& schedule, const NewtonConfig& config,
                       std::span<StepObserver* const> observers = {});

}  // namespace sqra
