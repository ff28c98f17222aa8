#pragma once

/**
 * @file scheme.hpp
 * @brief Square-root-approximation fluxes, implicit Euler residual, Jacobian
 * and the free-energy bookkeeping of the scheme.
 *
 * With inverse Peclet number eps the interior flux across s = K|L reads
 *
 *   F_Ks = (eps/d_s) [ rho_K (1 - rho_L) e^{(phi_K - phi_L)/(2 eps)}
 *                    - rho_L (1 - rho_K) e^{(phi_L - phi_K)/(2 eps)} ]
 *        = (2 eps/d_s) sqrt(eta(rho_K) eta(rho_L)) sinh((xi_K - xi_L)/(2 eps)),
 *
 * with xi = eps h'(rho) + phi. On exterior faces the same formula is used
 * with a boundary density rho_s chosen so that it also equals the Robin flux
 * alpha_s rho_s - beta_s; rho_s is eliminated in closed form and is never an
 * unknown.
 */

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "sqra/mesh.hpp"
#include "sqra/physics.hpp"

namespace sqra {

/// Cell densities with the boundary densities they induce.
struct State {
    std::vector<double> rho_cell;
    std::vector<double> rho_face;  ///< exterior faces only, 0 elsewhere
    double time = 0.0;
};

/// One flux per face, oriented outward from the face owner.
struct FluxField {
    std::vector<double> values;
};

double interior_flux(double rho_K, double rho_L, double phi_K, double phi_L, double d_sigma, double epsilon);

double boundary_density(double rho_K, double phi_K, double phi_sigma, double alpha, double beta, double d_sigma,
                        double epsilon);

/// alpha rho_s - beta; positive for outflow.
inline double boundary_flux(double rho_sigma, double alpha, double beta) noexcept {
    return alpha * rho_sigma - beta;
}

/// Flux value and its partial derivatives w.r.t. the owner and the other
/// cell density (d_other is 0 on exterior faces).
struct FluxDerivatives {
    double value = 0.0;
    double d_own = 0.0;
    double d_other = 0.0;
};

FluxDerivatives interior_flux_derivatives(double rho_K, double rho_L, double phi_K, double phi_L, double d_sigma,
                                          double epsilon);

/// Exterior flux as a function of the owner density, with rho_s eliminated.
/// The value is formed without the alpha rho_s - beta cancellation.
FluxDerivatives exterior_flux_derivatives(double rho_K, double phi_K, double phi_sigma, double alpha, double beta,
                                          double d_sigma, double epsilon);

std::vector<double> boundary_densities(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data);
State make_state(std::vector<double> rho_cell, const Mesh& mesh, const DiscreteData& data, double time = 0.0);
FluxField compute_fluxes(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data);

/// H_K = m_K (rho_K - rho_K^old) / tau + sum_s m_s F_Ks(rho), with the
/// positive-part fluxes so that H is defined for any real input.
std::vector<double> residual(std::span<const double> rho_new, std::span<const double> rho_old, const Mesh& mesh,
                             const DiscreteData& data, double tau);

struct Jacobian {
    Eigen::SparseMatrix<double> matrix;
    /// Set when some density is within 1e-14 of 0 or 1, where the positive
    /// parts have kinks and the derivative is one-sided.
    bool near_kink = false;
};

Jacobian jacobian(std::span<const double> rho_new, std::span<const double> rho_old, const Mesh& mesh,
                  const DiscreteData& data, double tau);

struct ElectroPotential {
    std::vector<double> cell;
    std::vector<double> face;  ///< exterior faces only
};

/// xi = eps h'(rho) + phi; DomainError if a density is not in (0, 1).
ElectroPotential electro_potential(std::span<const double> rho_cell, std::span<const double> rho_face,
                                   const Mesh& mesh, const DiscreteData& data);

/// G = xi_K - xi_other, computed from the densities without forming xi.
double potential_gap(double rho_K, double rho_other, double phi_K, double phi_other, double epsilon);

/// Psi(x) = 2x log((x + sqrt(x^2+4))/2) - 2 sqrt(x^2+4) + 4.
double psi(double x);
/// Psi*(s) = 4 (cosh(s/2) - 1), the Legendre transform of psi.
double psi_star(double s);
/// eps^2 Psi(x / eps); reduces to psi at eps = 1.
double psi_eps(double x, double epsilon);
/// 4 eps^2 (cosh(s / (2 eps)) - 1), the Legendre transform of psi_eps.
double psi_star_eps(double s, double epsilon);

struct Dissipation {
    double primal = 0.0;
    double dual = 0.0;
};

/// Primal and dual dissipation summed over all faces, exterior included.
Dissipation dissipation_potentials(const State& state, const FluxField& flux, const Mesh& mesh,
                                   const DiscreteData& data);

/// sum_K m_K (eps h(rho_K) + phi_K rho_K)
double bulk_energy(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data);

/// Time series of the free-energy balance. Entry 0 is the initial state.
class EnergyLedger {
public:
    void record_initial(std::span<const double> rho0, const Mesh& mesh, const DiscreteData& data,
                        double time = 0.0);

    /// Appends step n from its converged state and fluxes.
    void record_step(const State& state, const FluxField& flux, const Mesh& mesh, const DiscreteData& data,
                     double tau);

    std::size_t size() const noexcept { return time_.size(); }
    const std::vector<double>& time() const noexcept { return time_; }
    const std::vector<double>& bulk() const noexcept { return bulk_; }
    const std::vector<double>& boundary_exchange() const noexcept { return exchange_; }
    const std::vector<double>& total() const noexcept { return total_; }
    const std::vector<double>& primal() const noexcept { return primal_; }
    const std::vector<double>& dual() const noexcept { return dual_; }
    /// (F_tot[n] - F_tot[n-1]) / tau + D + D*; nonpositive up to round-off.
    const std::vector<double>& inequality_residual() const noexcept { return residual_; }
    /// Cumulative sum_p tau sum_s a_s (rho_K - rho_Ks)^2.
    const std::vector<double>& gradient_sum() const noexcept { return gradient_sum_; }

private:
    std::vector<double> time_;
    std::vector<double> bulk_;
    std::vector<double> exchange_;
    std::vector<double> total_;
    std::vector<double> primal_;
    std::vector<double> dual_;
    std::vector<double> residual_;
    std::vector<double> gradient_sum_;
};

}  // namespace sqra
