#pragma once

// Hand-written reference implementations for tiny 1D problems on [0, 1].
// Geometry, fluxes and residuals are spelled out here from the defining
// formulas, without going through the library.

#include <array>
#include <cmath>
#include <functional>

namespace oracle {

struct LineProblem {
    double epsilon = 1.0;
    double alpha = 1.0;
    double beta = 0.5;
    std::function<double(double)> phi;
};

inline double interior_flux(double rk, double rl, double pk, double pl, double d, double eps) {
    const double s = (pk - pl) / (2.0 * eps);
    return eps / d * (rk * (1.0 - rl) * std::exp(s) - rl * (1.0 - rk) * std::exp(-s));
}

/// alpha rho_s - beta, where rho_s makes the SQRA flux between the cell and
/// the boundary point equal to the Robin flux.
inline double exterior_flux(double rk, double pk, double ps, double alpha, double beta, double d, double eps) {
    const double E = std::exp((pk - ps) / (2.0 * eps));
    const double rs = (d * beta + eps * rk * E) / (d * alpha + eps * rk * E + eps * (1.0 - rk) / E);
    return alpha * rs - beta;
}

/// Root of an increasing function on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// One cell [0, 1]: center 1/2, two boundary faces at distance 1/2.
inline double one_cell_residual(double rho, double rho_old, double tau, const LineProblem& p) {
    const double pk = p.phi(0.5);
    double h = (rho - rho_old) / tau;
    for (double x : {0.0, 1.0}) h += exterior_flux(rho, pk, p.phi(x), p.alpha, p.beta, 0.5, p.epsilon);
    return h;
}

inline double one_cell_step(double rho_old, double tau, const LineProblem& p) {
    return bisect([&](double r) { return one_cell_residual(r, rho_old, tau, p); }, 0.0, 1.0);
}

/// Two cells of width 1/2: centers 1/4 and 3/4, boundary distance 1/4,
/// interior distance 1/2.
inline std::array<double, 2> two_cell_residual(double r0, double r1, std::array<double, 2> old, double tau,
                                               const LineProblem& p) {
    const double p0 = p.phi(0.25), p1 = p.phi(0.75);
    const double f01 = interior_flux(r0, r1, p0, p1, 0.5, p.epsilon);
    const double left = exterior_flux(r0, p0, p.phi(0.0), p.alpha, p.beta, 0.25, p.epsilon);
    const double right = exterior_flux(r1, p1, p.phi(1.0), p.alpha, p.beta, 0.25, p.epsilon);
    return {0.5 * (r0 - old[0]) / tau + left + f01, 0.5 * (r1 - old[1]) / tau + right - f01};
}

/// Nested bisection: the inner solve gives rho_1 as a function of rho_0,
/// the outer one zeroes the first equation along that curve.
inline std::array<double, 2> two_cell_step(std::array<double, 2> old, double tau, const LineProblem& p) {
    auto second = [&](double r0) {
        return bisect([&](double r1) { return two_cell_residual(r0, r1, old, tau, p)[1]; }, 0.0, 1.0);
    };
    const double r0 = bisect([&](double r) { return two_cell_residual(r, second(r), old, tau, p)[0]; }, 0.0, 1.0);
    return {r0, second(r0)};
}

}  // namespace oracle
