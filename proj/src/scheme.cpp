#include "sqra/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sqra {

namespace {

template <class T>
T pos(T x) noexcept {
    return x > 0 ? x : T(0);
}
double step(double x) noexcept { return x > 0.0 ? 1.0 : 0.0; }

/// coeff * exp(s), returning 0 for a zero coefficient even when exp overflows.
template <class T>
T scaled_exp(T coeff, T s) noexcept {
    return coeff == 0 ? T(0) : coeff * std::exp(s);
}

void check_sizes(std::span<const double> rho, const Mesh& mesh, const char* what) {
    if (rho.size() != mesh.num_cells()) {
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(mesh.num_cells()) +
                                " cell values, got " + std::to_string(rho.size()));
    }
}

/// Numerator, denominator and their derivatives of the boundary density
/// rho_s = N / D after scaling both by exp(-|s|).
struct BoundaryFraction {
    double num, den, d_num, d_den;
    double w;         ///< exp(-|s|)
    bool outward;     ///< s >= 0
};

BoundaryFraction boundary_fraction(double rho_K, double phi_K, double phi_sigma, double alpha, double beta,
                                   double d_sigma, double epsilon) {
    const double s = (phi_K - phi_sigma) / (2.0 * epsilon);
    const double p = pos(rho_K);
    const double q = pos(1.0 - rho_K);
    const double dp = step(rho_K);
    const double dq = -step(1.0 - rho_K);
    BoundaryFraction f{};
    f.w = std::exp(-std::abs(s));
    f.outward = s >= 0.0;
    const double w2 = f.w * f.w;
    if (f.outward) {
        f.num = d_sigma * beta * f.w + epsilon * p;
        f.den = d_sigma * alpha * f.w + epsilon * p + epsilon * q * w2;
        f.d_num = epsilon * dp;
        f.d_den = epsilon * dp + epsilon * dq * w2;
    } else {
        f.num = d_sigma * beta * f.w + epsilon * p * w2;
        f.den = d_sigma * alpha * f.w + epsilon * p * w2 + epsilon * q;
        f.d_num = epsilon * dp * w2;
        f.d_den = epsilon * dp * w2 + epsilon * dq;
    }
    return f;
}

}  // namespace

double interior_flux(double rho_K, double rho_L, double phi_K, double phi_L, double d_sigma, double epsilon) {
    // The two exchange terms nearly cancel close to equilibrium; forming the
    // difference in extended precision keeps the flux accurate to a few ulp.
    using ld = long double;
    const ld s = (static_cast<ld>(phi_K) - phi_L) / (2.0L * epsilon);
    const ld rk = rho_K;
    const ld rl = rho_L;
    const ld forward = scaled_exp(pos(rk) * pos(1.0L - rl), s);
    const ld backward = scaled_exp(pos(rl) * pos(1.0L - rk), -s);
    return static_cast<double>(epsilon * (forward - backward) / d_sigma);
}

FluxDerivatives interior_flux_derivatives(double rho_K, double rho_L, double phi_K, double phi_L, double d_sigma,
                                          double epsilon) {
    const double s = (phi_K - phi_L) / (2.0 * epsilon);
    const double ep = std::exp(s);
    const double em = std::exp(-s);
    const double c = epsilon / d_sigma;
    FluxDerivatives out;
    out.value = interior_flux(rho_K, rho_L, phi_K, phi_L, d_sigma, epsilon);
    out.d_own = c * (step(rho_K) * pos(1.0 - rho_L) * ep + pos(rho_L) * step(1.0 - rho_K) * em);
    out.d_other = -c * (pos(rho_K) * step(1.0 - rho_L) * ep + step(rho_L) * pos(1.0 - rho_K) * em);
    return out;
}

double boundary_density(double rho_K, double phi_K, double phi_sigma, double alpha, double beta, double d_sigma,
                        double epsilon) {
    const BoundaryFraction f = boundary_fraction(rho_K, phi_K, phi_sigma, alpha, beta, d_sigma, epsilon);
    return f.num / f.den;
}

FluxDerivatives exterior_flux_derivatives(double rho_K, double phi_K, double phi_sigma, double alpha, double beta,
                                          double d_sigma, double epsilon) {
    const BoundaryFraction f = boundary_fraction(rho_K, phi_K, phi_sigma, alpha, beta, d_sigma, epsilon);
    // alpha N - beta D: the d_sigma terms cancel exactly. What remains can
    // still cancel, so it is formed in extended precision.
    using ld = long double;
    const ld rk = rho_K;
    const ld p = pos(rk);
    const ld q = pos(1.0L - rk);
    const ld w2 = std::exp(-std::abs((static_cast<ld>(phi_K) - phi_sigma) / epsilon));
    const ld gap = static_cast<ld>(alpha) - beta;
    const ld excess = f.outward ? gap * p - static_cast<ld>(beta) * q * w2 : gap * p * w2 - static_cast<ld>(beta) * q;
    FluxDerivatives out;
    out.value = static_cast<double>(epsilon * excess / f.den);
    out.d_own = alpha * (f.d_num * f.den - f.num * f.d_den) / (f.den * f.den);
    return out;
}

std::vector<double> boundary_densities(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data) {
    check_sizes(rho_cell, mesh, "boundary_densities");
    std::vector<double> rho_face(mesh.num_faces(), 0.0);
    for (std::size_t id : mesh.exterior_faces) {
        const Face& f = mesh.faces[id];
        rho_face[id] = boundary_density(rho_cell[f.owner], data.phi_cell[f.owner], data.phi_face[id],
                                        data.alpha_face[id], data.beta_face[id], f.distance, data.epsilon);
    }
    return rho_face;
}

State make_state(std::vector<double> rho_cell, const Mesh& mesh, const DiscreteData& data, double time) {
    State state;
    state.rho_face = boundary_densities(rho_cell, mesh, data);
    state.rho_cell = std::move(rho_cell);
    state.time = time;
    return state;
}

FluxField compute_fluxes(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data) {
    check_sizes(rho_cell, mesh, "compute_fluxes");
    FluxField flux;
    flux.values.assign(mesh.num_faces(), 0.0);
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        const std::size_t K = f.owner;
        if (f.is_interior()) {
            const std::size_t L = f.neighbor;
            flux.values[id] = interior_flux(rho_cell[K], rho_cell[L], data.phi_cell[K], data.phi_cell[L], f.distance,
                                            data.epsilon);
        } else {
            flux.values[id] = exterior_flux_derivatives(rho_cell[K], data.phi_cell[K], data.phi_face[id],
                                                        data.alpha_face[id], data.beta_face[id], f.distance,
                                                        data.epsilon)
                                  .value;
        }
    }
    return flux;
}

std::vector<double> residual(std::span<const double> rho_new, std::span<const double> rho_old, const Mesh& mesh,
                             const DiscreteData& data, double tau) {
    check_sizes(rho_new, mesh, "residual");
    check_sizes(rho_old, mesh, "residual");
    std::vector<double> H(mesh.num_cells());
    for (std::size_t k = 0; k < H.size(); ++k) H[k] = mesh.measures[k] * (rho_new[k] - rho_old[k]) / tau;
    const FluxField flux = compute_fluxes(rho_new, mesh, data);
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        const double q = f.measure * flux.values[id];
        H[f.owner] += q;
        if (f.is_interior()) H[f.neighbor] -= q;
    }
    return H;
}

Jacobian jacobian(std::span<const double> rho_new, std::span<const double> rho_old, const Mesh& mesh,
                  const DiscreteData& data, double tau) {
    check_sizes(rho_new, mesh, "jacobian");
    check_sizes(rho_old, mesh, "jacobian");
    const std::size_t n = mesh.num_cells();
    Jacobian J;
    for (double r : rho_new) {
        if (r < 1e-14 || r > 1.0 - 1e-14) J.near_kink = true;
    }

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(n + 4 * mesh.interior_faces.size() + mesh.exterior_faces.size());
    for (std::size_t k = 0; k < n; ++k) {
        entries.emplace_back(static_cast<int>(k), static_cast<int>(k), mesh.measures[k] / tau);
    }
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        const int K = static_cast<int>(f.owner);
        if (f.is_interior()) {
            const int L = static_cast<int>(f.neighbor);
            const FluxDerivatives d = interior_flux_derivatives(rho_new[f.owner], rho_new[f.neighbor],
                                                                data.phi_cell[f.owner], data.phi_cell[f.neighbor],
                                                                f.distance, data.epsilon);
            entries.emplace_back(K, K, f.measure * d.d_own);
            entries.emplace_back(K, L, f.measure * d.d_other);
            entries.emplace_back(L, L, -f.measure * d.d_other);
            entries.emplace_back(L, K, -f.measure * d.d_own);
        } else {
            const FluxDerivatives d =
                exterior_flux_derivatives(rho_new[f.owner], data.phi_cell[f.owner], data.phi_face[id],
                                          data.alpha_face[id], data.beta_face[id], f.distance, data.epsilon);
            entries.emplace_back(K, K, f.measure * d.d_own);
        }
    }
    J.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    J.matrix.setFromTriplets(entries.begin(), entries.end());
    J.matrix.makeCompressed();
    return J;
}

ElectroPotential electro_potential(std::span<const double> rho_cell, std::span<const double> rho_face,
                                   const Mesh& mesh, const DiscreteData& data) {
    check_sizes(rho_cell, mesh, "electro_potential");
    if (rho_face.size() != mesh.num_faces()) throw DimensionMismatch("electro_potential: face array size");
    ElectroPotential xi;
    xi.cell.resize(rho_cell.size());
    for (std::size_t k = 0; k < rho_cell.size(); ++k) {
        xi.cell[k] = data.epsilon * entropy_prime(rho_cell[k]) + data.phi_cell[k];
    }
    xi.face.assign(mesh.num_faces(), 0.0);
    for (std::size_t id : mesh.exterior_faces) {
        xi.face[id] = data.epsilon * entropy_prime(rho_face[id]) + data.phi_face[id];
    }
    return xi;
}

double potential_gap(double rho_K, double rho_other, double phi_K, double phi_other, double epsilon) {
    return epsilon * entropy_prime_difference(rho_K, rho_other) + (phi_K - phi_other);
}

double psi(double x) {
    const double r = std::sqrt(x * x + 4.0);
    return 2.0 * x * std::asinh(0.5 * x) - 2.0 * x * x / (r + 2.0);
}

double psi_star(double s) {
    const double sh = std::sinh(0.25 * s);
    return 8.0 * sh * sh;
}

double psi_eps(double x, double epsilon) { return epsilon * epsilon * psi(x / epsilon); }

double psi_star_eps(double s, double epsilon) { return epsilon * epsilon * psi_star(s / epsilon); }

Dissipation dissipation_potentials(const State& state, const FluxField& flux, const Mesh& mesh,
                                   const DiscreteData& data) {
    Dissipation D;
    const double eps = data.epsilon;
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        const std::size_t K = f.owner;
        const double rho_K = state.rho_cell[K];
        const double rho_o = f.is_interior() ? state.rho_cell[f.neighbor] : state.rho_face[id];
        const double phi_o = f.is_interior() ? data.phi_cell[f.neighbor] : data.phi_face[id];
        const double eta = std::sqrt(mobility(rho_K) * mobility(rho_o));
        if (!(eta > 0.0)) {
            throw DomainError("dissipation_potentials: vanishing face mobility on face " + std::to_string(id));
        }
        const double a = f.transmissibility();
        const double G = potential_gap(rho_K, rho_o, data.phi_cell[K], phi_o, eps);
        D.primal += a * eta * psi_eps(f.distance * flux.values[id] / eta, eps);
        D.dual += a * eta * psi_star_eps(G, eps);
    }
    return D;
}

double bulk_energy(std::span<const double> rho_cell, const Mesh& mesh, const DiscreteData& data) {
    check_sizes(rho_cell, mesh, "bulk_energy");
    double F = 0.0;
    for (std::size_t k = 0; k < rho_cell.size(); ++k) {
        F += mesh.measures[k] * (data.epsilon * entropy(rho_cell[k]) + data.phi_cell[k] * rho_cell[k]);
    }
    return F;
}

void EnergyLedger::record_initial(std::span<const double> rho0, const Mesh& mesh, const DiscreteData& data,
                                  double time) {
    *this = EnergyLedger{};
    const double F = bulk_energy(rho0, mesh, data);
    time_.push_back(time);
    bulk_.push_back(F);
    exchange_.push_back(0.0);
    total_.push_back(F);
    primal_.push_back(0.0);
    dual_.push_back(0.0);
    residual_.push_back(0.0);
    gradient_sum_.push_back(0.0);
}

void EnergyLedger::record_step(const State& state, const FluxField& flux, const Mesh& mesh, const DiscreteData& data,
                               double tau) {
    if (time_.empty()) throw Error("EnergyLedger: record_initial must be called first");
    const double F = bulk_energy(state.rho_cell, mesh, data);
    double exchange = 0.0;
    for (std::size_t id : mesh.exterior_faces) {
        exchange += mesh.faces[id].measure * data.xi_gamma_face[id] * flux.values[id];
    }
    double gradient = 0.0;
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        const double other = f.is_interior() ? state.rho_cell[f.neighbor] : state.rho_face[id];
        const double jump = state.rho_cell[f.owner] - other;
        gradient += f.transmissibility() * jump * jump;
    }
    const Dissipation D = dissipation_potentials(state, flux, mesh, data);

    time_.push_back(state.time);
    bulk_.push_back(F);
    exchange_.push_back(exchange_.back() + tau * exchange);
    total_.push_back(F + exchange_.back());
    primal_.push_back(D.primal);
    dual_.push_back(D.dual);
    // Differences of the two parts separately keep the round-off at the
    // size of the increments rather than of F_tot.
    const double dF = (F - bulk_[bulk_.size() - 2]) / tau + exchange;
    residual_.push_back(dF + D.primal + D.dual);
    gradient_sum_.push_back(gradient_sum_.back() + tau * gradient);
}

}  // namespace sqra
