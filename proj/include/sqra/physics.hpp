#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sqra/mesh.hpp"

namespace sqra {

/// A scalar field on the closure of the domain.
struct ScalarField {
    std::function<double(const Point&)> value;
    /// Exact integral over [a, b] (1D only). Used for cell averages of
    /// discontinuous initial data when available.
    std::function<double(double, double)> integral_1d;
    std::string description;

    double operator()(const Point& x) const { return value(x); }
};

ScalarField constant_field(double c);
/// c0 + c1 * x1 + c2 * x2
ScalarField affine_field(double c0, double c1, double c2 = 0.0);
/// `inside` on the axis-aligned box [lo, hi) (open at the upper corner),
/// `outside` elsewhere. In 1D only the first coordinate matters.
ScalarField box_field(Point lo, Point hi, double inside, double outside);

/// One phase of a time schedule: constant step `tau` until time `until`.
struct TimePhase {
    double tau = 0.0;
    double until = 0.0;
};

struct TimeSchedule {
    std::vector<TimePhase> phases;

    double final_time() const noexcept { return phases.empty() ? 0.0 : phases.back().until; }
    /// Total number of steps; throws ConfigError when a phase length is not
    /// an integer multiple of its step.
    std::size_t num_steps() const;
    void validate() const;
};

struct ProblemSpec {
    ScalarField phi;
    ScalarField alpha;
    ScalarField beta;
    ScalarField rho0;
    double epsilon = 1.0;
    TimeSchedule schedule;

    /// epsilon > 0 and a consistent schedule.
    void validate() const;
};

/// Problem data sampled on a mesh. Face arrays are indexed by face id; the
/// boundary quantities are meaningful on exterior faces only.
struct DiscreteData {
    double epsilon = 1.0;
    std::vector<double> phi_cell;
    std::vector<double> phi_face;
    std::vector<double> alpha_face;
    std::vector<double> beta_face;
    std::vector<double> xi_gamma_face;
    std::vector<double> rho0_cell;
};

/// eta(rho) = rho (1 - rho)
inline double mobility(double rho) noexcept { return rho * (1.0 - rho); }

/// Mixing entropy h(rho) = rho log rho + (1 - rho) log(1 - rho) + log 2 on [0, 1].
double entropy(double rho);
/// h'(rho) = log(rho / (1 - rho)); DomainError outside (0, 1).
double entropy_prime(double rho);
/// h'(a) - h'(b) evaluated without cancellation when a and b are close.
double entropy_prime_difference(double a, double b);

/// 1 / (1 + exp(-x)) without overflow.
double logistic(double x) noexcept;

/// Cell averages of `field`: exact in 1D when integral_1d is set, 2-point
/// Gauss otherwise; centroid rule on the four midpoint sub-triangles in 2D.
std::vector<double> cell_averages(const ScalarField& field, const Mesh& mesh);

/// Samples phi, alpha, beta and rho0. Throws BoundaryDataError when
/// alpha > beta > 0 fails on an exterior face.
DiscreteData discretize(const ProblemSpec& spec, const Mesh& mesh);

/// rho_K = logistic((z - phi_K) / epsilon): the discrete thermal equilibrium
/// with constant electrochemical potential z.
std::vector<double> equilibrium_density(const Mesh& mesh, const DiscreteData& data, double z);

}  // namespace sqra
