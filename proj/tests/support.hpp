#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sqra/mesh.hpp"
#include "sqra/physics.hpp"

namespace testing {

inline std::filesystem::path data_file(const std::string& name) {
    return std::filesystem::path(SQRA_TEST_DATA_DIR) / name;
}

inline sqra::Mesh unit_square(const std::string& name = "unit_square_208.mesh") {
    return sqra::build_from_triangulation(sqra::read_triangulation(data_file(name)));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("sqra_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<double> random_interior(std::size_t n, std::mt19937_64& gen, double lo = 0.05, double hi = 0.95) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(gen);
    return v;
}

/// Problem data by hand: phi sampled pointwise, constant alpha/beta.
inline sqra::DiscreteData simple_data(const sqra::Mesh& mesh, double epsilon, const sqra::ScalarField& phi,
                                      double alpha, double beta) {
    sqra::ProblemSpec spec;
    spec.phi = phi;
    spec.alpha = sqra::constant_field(alpha);
    spec.beta = sqra::constant_field(beta);
    spec.rho0 = sqra::constant_field(0.5);
    spec.epsilon = epsilon;
    spec.schedule.phases = {{0.1, 1.0}};
    return sqra::discretize(spec, mesh);
}

/// Equilibrium boundary data alpha = 1 + e^{-(phi - z)/eps}, beta = e^{-(phi - z)/eps}.
inline sqra::DiscreteData equilibrium_data(const sqra::Mesh& mesh, double epsilon, const sqra::ScalarField& phi,
                                           double z) {
    sqra::ProblemSpec spec;
    spec.phi = phi;
    spec.alpha.value = [=](const sqra::Point& x) { return 1.0 + std::exp(-(phi(x) - z) / epsilon); };
    spec.beta.value = [=](const sqra::Point& x) { return std::exp(-(phi(x) - z) / epsilon); };
    spec.rho0 = sqra::constant_field(0.5);
    spec.epsilon = epsilon;
    spec.schedule.phases = {{0.1, 1.0}};
    return sqra::discretize(spec, mesh);
}

}  // namespace testing
