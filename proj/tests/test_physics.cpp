#include <doctest.h>

#include <cmath>
#include <random>

#include "sqra/physics.hpp"
#include "support.hpp"

using namespace sqra;

TEST_CASE("mobility") {
    CHECK(mobility(0.0) == 0.0);
    CHECK(mobility(1.0) == 0.0);
    CHECK(mobility(0.5) == 0.25);
}

TEST_CASE("entropy and its derivative") {
    CHECK(std::abs(entropy(0.5)) < 1e-16);
    CHECK(entropy(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(entropy(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(entropy_prime(0.5) == 0.0);
    CHECK_THROWS_AS(entropy_prime(0.0), DomainError);
    CHECK_THROWS_AS(entropy_prime(1.0), DomainError);
    CHECK_THROWS_AS(entropy(-0.1), DomainError);
    CHECK_THROWS_AS(entropy(1.1), DomainError);
    CHECK_THROWS_AS(entropy_prime_difference(0.0, 0.3), DomainError);
}

TEST_CASE("entropy is symmetric, nonnegative, with increasing derivative") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double r = u(gen);
        CHECK(entropy(r) >= 0.0);
        CHECK(entropy(r) == doctest::Approx(entropy(1.0 - r)).epsilon(1e-12));
        if (r <= 0.0) continue;
        const double s = std::nextafter(r, 1.0) + 1e-6;
        if (s < 1.0) CHECK(entropy_prime(s) > entropy_prime(r));
        // h' is the derivative of h.
        if (r > 1e-3 && r < 1 - 1e-3) {
            const double h = 1e-6;
            const double fd = (entropy(r + h) - entropy(r - h)) / (2 * h);
            CHECK(fd == doctest::Approx(entropy_prime(r)).epsilon(1e-7));
        }
    }
}

TEST_CASE("mobility-weighted sinh and cosh identities") {
    // sqrt(eta eta') 2 sinh((h' - h'')/2) = rho - rho'
    // sqrt(eta eta') 2 cosh((h' - h'')/2) = eta + eta' + (rho - rho')^2
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_sinh = 0.0, worst_cosh = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double a = u(gen), b = u(gen);
        if (a <= 0.0 || b <= 0.0 || a == b) continue;
        const double eta = std::sqrt(mobility(a) * mobility(b));
        const double g = entropy_prime_difference(a, b);
        worst_sinh = std::max(worst_sinh, std::abs(eta * 2 * std::sinh(g / 2) - (a - b)) / std::abs(a - b));
        const double rhs = mobility(a) + mobility(b) + (a - b) * (a - b);
        worst_cosh = std::max(worst_cosh, std::abs(eta * 2 * std::cosh(g / 2) - rhs) / rhs);
    }
    CHECK(worst_sinh <= 1e-12);
    CHECK(worst_cosh <= 1e-12);
}

TEST_CASE("entropy_prime_difference near the ends of the interval") {
    // Close arguments near 1 and far arguments with one near 1.
    const double a = 1.0 - 1e-9, b = 0.5;
    const long double exact = std::log(static_cast<long double>(a) / b) -
                              std::log((1.0L - a) / (1.0L - static_cast<long double>(b)));
    CHECK(entropy_prime_difference(a, b) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-14));
    const double c = 1e-12, d = 2e-12;
    CHECK(entropy_prime_difference(c, d) == doctest::Approx(entropy_prime(c) - entropy_prime(d)).epsilon(1e-12));
}

TEST_CASE("logistic is stable in both tails") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(800.0) == 1.0);
    CHECK(logistic(-800.0) == 0.0);
    CHECK(logistic(-30.0) == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));
}

TEST_CASE("fields") {
    const Point p{0.3, 0.7};
    CHECK(constant_field(2.5)(p) == 2.5);
    CHECK(affine_field(1.0, -1.0, 2.0)(p) == doctest::Approx(1.0 - 0.3 + 1.4));
    const ScalarField box = box_field({0.0, 0.0}, {0.5, 0.5}, 1.0, 0.0);
    CHECK(box({0.25, 0.25}) == 1.0);
    CHECK(box({0.5, 0.25}) == 0.0);  // open at the upper corner
    CHECK(box({0.25, 0.75}) == 0.0);
    CHECK(affine_field(0.0, 1.0).integral_1d(0.0, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("discretize samples phi at centers and boundary points") {
    const Mesh mesh = build_uniform_1d(2);
    ProblemSpec spec;
    spec.phi = affine_field(1.0, -1.0);
    spec.alpha = constant_field(1.0);
    spec.beta = constant_field(0.5);
    spec.rho0 = constant_field(0.2);
    spec.epsilon = 1.0;
    spec.schedule.phases = {{0.1, 1.0}};
    const DiscreteData d = discretize(spec, mesh);
    REQUIRE(d.phi_cell.size() == 2);
    CHECK(d.phi_cell[0] == doctest::Approx(0.75));
    CHECK(d.phi_cell[1] == doctest::Approx(0.25));
    std::vector<double> boundary_phi;
    for (std::size_t id : mesh.exterior_faces) boundary_phi.push_back(d.phi_face[id]);
    std::sort(boundary_phi.begin(), boundary_phi.end());
    CHECK(boundary_phi[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(boundary_phi[1] == doctest::Approx(1.0));
    for (std::size_t id : mesh.exterior_faces) {
        // phi_s - eps log(alpha/beta - 1) with alpha/beta = 2
        CHECK(d.xi_gamma_face[id] == doctest::Approx(d.phi_face[id]));
    }
}

TEST_CASE("initial step is averaged exactly") {
    ProblemSpec spec;
    spec.phi = affine_field(1.0, -1.0);
    spec.alpha = constant_field(1.0);
    spec.beta = constant_field(0.5);
    spec.rho0 = box_field({-1.0, -1.0}, {0.5, 1.0}, 1.0, 0.0);
    spec.epsilon = 1.0;
    spec.schedule.phases = {{0.1, 1.0}};

    const DiscreteData four = discretize(spec, build_uniform_1d(4));
    CHECK(four.rho0_cell == std::vector<double>{1.0, 1.0, 0.0, 0.0});

    const DiscreteData three = discretize(spec, build_uniform_1d(3));
    REQUIRE(three.rho0_cell.size() == 3);
    CHECK(three.rho0_cell[0] == doctest::Approx(1.0));
    CHECK(three.rho0_cell[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(three.rho0_cell[2] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("2D cell averages of an affine field are exact") {
    const Mesh mesh = testing::unit_square();
    const ScalarField f = affine_field(0.3, 2.0, -1.0);
    const std::vector<double> avg = cell_averages(f, mesh);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        // Average of an affine function over a triangle is its value at the centroid.
        const auto& v = mesh.cell_vertices[k];
        const Point c{(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0};
        CHECK(avg[k] == doctest::Approx(f(c)).epsilon(1e-13));
    }
}

TEST_CASE("discretize rejects boundary data violating alpha > beta > 0") {
    const Mesh mesh = build_uniform_1d(4);
    ProblemSpec spec;
    spec.phi = constant_field(0.0);
    spec.rho0 = constant_field(0.5);
    spec.schedule.phases = {{0.1, 1.0}};
    spec.alpha = constant_field(1.0);

    spec.beta = constant_field(1.0);
    CHECK_THROWS_AS(discretize(spec, mesh), BoundaryDataError);
    spec.beta = constant_field(0.0);
    CHECK_THROWS_AS(discretize(spec, mesh), BoundaryDataError);
    // Only the right end is bad; the error names that face.
    spec.beta = affine_field(0.5, 0.6);
    try {
        discretize(spec, mesh);
        FAIL("expected BoundaryDataError");
    } catch (const BoundaryDataError& e) {
        REQUIRE(e.faces().size() == 1);
        CHECK(mesh.faces[e.faces()[0]].point[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("problem and schedule validation") {
    TimeSchedule s;
    s.phases = {{0.1, 200.0}, {100.0, 1e4}};
    CHECK(s.num_steps() == 2000 + 98);
    CHECK(s.final_time() == 1e4);
    s.phases = {{0.3, 1.0}};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.phases = {{-0.1, 1.0}};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.phases = {{0.1, 0.0}};
    CHECK_NOTHROW(s.validate());
    CHECK(s.num_steps() == 0);

    ProblemSpec spec;
    spec.epsilon = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("equilibrium density") {
    const Mesh mesh = build_uniform_1d(3);
    DiscreteData d;
    d.epsilon = 0.2;
    const double z = 0.4;
    d.phi_cell = {z, z - d.epsilon * std::log(3.0), 1e6};
    const std::vector<double> rho = equilibrium_density(mesh, d, z);
    CHECK(rho[0] == 0.5);
    CHECK(rho[1] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(rho[2] >= 0.0);
    CHECK(rho[2] < 1e-300);
}
