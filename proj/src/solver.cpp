#include "sqra/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>

namespace sqra {

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

StepResult newton_once(std::span<const double> rho_old, const Mesh& mesh, const DiscreteData& data, double tau,
                       const NewtonConfig& config) {
    const std::size_t n = rho_old.size();
    const double lo = config.clip;
    const double hi = 1.0 - config.clip;

    StepResult out;
    out.rho.assign(rho_old.begin(), rho_old.end());
    for (double& r : out.rho) r = std::clamp(r, lo, hi);

    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    double increment = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        const std::vector<double> H = residual(out.rho, rho_old, mesh, data, tau);
        const Jacobian J = jacobian(out.rho, rho_old, mesh, data, tau);
        for (std::size_t k = 0; k < n; ++k) rhs[static_cast<Eigen::Index>(k)] = -H[k];

        double lin_res = 0.0;
        const Eigen::VectorXd delta = linear_solve(J.matrix, rhs, &lin_res);
        out.stats.linear_residual = std::max(out.stats.linear_residual, lin_res);

        double delta_norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double dk = delta[static_cast<Eigen::Index>(k)];
            delta_norm = std::max(delta_norm, std::abs(dk));
            out.rho[k] = std::clamp(out.rho[k] + dk, lo, hi);
        }
        increment = delta_norm / inf_norm(out.rho);
        out.stats.newton_iters = it;
        out.stats.final_increment = increment;
        if (increment <= config.rel_tol) return out;
    }
    std::ostringstream os;
    os << "Newton did not converge in " << config.max_iters << " iterations (last increment " << increment << ")";
    throw NonConvergence(os.str(), config.max_iters, increment);
}

StepResult solve_with_halving(std::span<const double> rho_old, const Mesh& mesh, const DiscreteData& data,
                              double tau, const NewtonConfig& config, int depth) {
    try {
        return newton_once(rho_old, mesh, data, tau, config);
    } catch (const NonConvergence&) {
        if (!config.step_halving || depth >= 10) throw;
    } catch (const LinearSolveFailure&) {
        if (!config.step_halving || depth >= 10) throw;
    }
    StepResult first = solve_with_halving(rho_old, mesh, data, 0.5 * tau, config, depth + 1);
    StepResult second = solve_with_halving(first.rho, mesh, data, 0.5 * tau, config, depth + 1);
    second.stats.newton_iters += first.stats.newton_iters;
    second.stats.substeps += first.stats.substeps;
    second.stats.linear_residual = std::max(first.stats.linear_residual, second.stats.linear_residual);
    return second;
}

}  // namespace

void NewtonConfig::validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ConfigError("newton rel_tol must lie in (0, 1)");
    if (max_iters < 1) throw ConfigError("newton max_iters must be at least 1");
    if (!(clip > 0.0 && clip < 1e-6)) throw ConfigError("newton clip must lie in (0, 1e-6)");
}

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs,
                             double* relative_residual) {
    if (J.rows() != J.cols() || J.rows() != rhs.size()) throw DimensionMismatch("linear_solve: shape mismatch");
    if (!rhs.allFinite()) throw LinearSolveFailure("linear_solve: non-finite right-hand side");
    for (Eigen::Index k = 0; k < J.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it) {
            if (!std::isfinite(it.value())) throw LinearSolveFailure("linear_solve: non-finite matrix entry");
        }
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw LinearSolveFailure("linear_solve: singular matrix (" + lu.lastErrorMessage() + ")");

    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw LinearSolveFailure("linear_solve: solve failed");

    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    double res = rhs_norm > 0.0 ? (rhs - J * x).lpNorm<Eigen::Infinity>() / rhs_norm : 0.0;
    // A couple of refinement sweeps for badly scaled rows.
    for (int sweep = 0; sweep < 2 && res > 1e-12; ++sweep) {
        x += lu.solve(rhs - J * x);
        res = (rhs - J * x).lpNorm<Eigen::Infinity>() / rhs_norm;
    }
    if (relative_residual) *relative_residual = res;
    return x;
}

StepResult newton_solve(std::span<const double> rho_old, const Mesh& mesh, const DiscreteData& data, double tau,
                        const NewtonConfig& config) {
    config.validate();
    if (rho_old.size() != mesh.num_cells()) throw DimensionMismatch("newton_solve: rho_old size");
    if (!(tau > 0.0)) throw Error("newton_solve: tau must be positive");
    const auto start = std::chrono::steady_clock::now();
    StepResult result = solve_with_halving(rho_old, mesh, data, tau, config, 0);
    result.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

MarchResult time_march(std::vector<double> rho0, const Mesh& mesh, const DiscreteData& data,
                       const TimeSchedule& schedule, const NewtonConfig& config,
                       std::span<StepObserver* const> observers) {
    schedule.validate();
    config.validate();
    if (rho0.size() != mesh.num_cells()) throw DimensionMismatch("time_march: rho0 size");
    for (double r : rho0) {
        if (!(r >= 0.0 && r <= 1.0)) throw DomainError("time_march: initial density outside [0, 1]");
    }

    MarchResult result;
    result.final_state = make_state(std::move(rho0), mesh, data, 0.0);
    for (StepObserver* obs : observers) obs->on_start(result.final_state);

    double phase_start = 0.0;
    for (const TimePhase& phase : schedule.phases) {
        const auto n_steps = static_cast<std::size_t>(std::llround((phase.until - phase_start) / phase.tau));
        for (std::size_t k = 1; k <= n_steps; ++k) {
            const std::size_t index = result.steps + 1;
            const double t = k == n_steps ? phase.until : phase_start + static_cast<double>(k) * phase.tau;
            StepResult step;
            try {
                step = newton_solve(result.final_state.rho_cell, mesh, data, phase.tau, config);
            } catch (const NonConvergence& e) {
                throw NonConvergence("step " + std::to_string(index) + " (t=" + std::to_string(t) + "): " + e.what(),
                                     e.iterations(), e.increment(), index);
            } catch (const LinearSolveFailure& e) {
                throw LinearSolveFailure("step " + std::to_string(index) + " (t=" + std::to_string(t) +
                                         "): " + e.what());
            }

            std::vector<double> rho_old = std::move(result.final_state.rho_cell);
            result.final_state = make_state(std::move(step.rho), mesh, data, t);
            const FluxField flux = compute_fluxes(result.final_state.rho_cell, mesh, data);
            ++result.steps;
            result.total_newton_iters += step.stats.newton_iters;

            const StepEvent event{index, phase.tau, rho_old, result.final_state, flux, step.stats};
            for (StepObserver* obs : observers) obs->on_step(event);
        }
        phase_start = phase.until;
    }
    return result;
}

}  // namespace sqra
