#include "sqra/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sqra {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// log(x / y) given x - y = diff.
double log_ratio(double x, double y, double diff) {
    const double r = diff / y;
    return std::abs(r) < 0.5 ? std::log1p(r) : std::log(x) - std::log(y);
}

}  // namespace

ScalarField constant_field(double c) {
    ScalarField f;
    f.value = [c](const Point&) { return c; };
    f.integral_1d = [c](double a, double b) { return c * (b - a); };
    f.description = "constant(" + fmt(c) + ")";
    return f;
}

ScalarField affine_field(double c0, double c1, double c2) {
    ScalarField f;
    f.value = [=](const Point& x) { return c0 + c1 * x[0] + c2 * x[1]; };
    if (c2 == 0.0) {
        f.integral_1d = [=](double a, double b) { return (b - a) * (c0 + 0.5 * c1 * (a + b)); };
    }
    f.description = "affine(" + fmt(c0) + "," + fmt(c1) + "," + fmt(c2) + ")";
    return f;
}

ScalarField box_field(Point lo, Point hi, double inside, double outside) {
    ScalarField f;
    f.value = [=](const Point& x) {
        return (x[0] >= lo[0] && x[0] < hi[0] && x[1] >= lo[1] && x[1] < hi[1]) ? inside : outside;
    };
    // 1D points live on x2 = 0.
    const bool line_hits_box = lo[1] <= 0.0 && 0.0 < hi[1];
    f.integral_1d = [=](double a, double b) {
        const double overlap = line_hits_box ? std::max(0.0, std::min(b, hi[0]) - std::max(a, lo[0])) : 0.0;
        return inside * overlap + outside * ((b - a) - overlap);
    };
    f.description = "box([" + fmt(lo[0]) + "," + fmt(lo[1]) + "],[" + fmt(hi[0]) + "," + fmt(hi[1]) + "]," +
                    fmt(inside) + "," + fmt(outside) + ")";
    return f;
}

std::size_t TimeSchedule::num_steps() const {
    std::size_t total = 0;
    double start = 0.0;
    for (const auto& p : phases) {
        const double count = (p.until - start) / p.tau;
        const double rounded = std::round(count);
        if (std::abs(count - rounded) > 1e-9 * std::max(1.0, rounded)) {
            throw ConfigError("time phase [" + fmt(start) + ", " + fmt(p.until) +
                              "] is not a multiple of tau = " + fmt(p.tau));
        }
        total += static_cast<std::size_t>(rounded);
        start = p.until;
    }
    return total;
}

void TimeSchedule::validate() const {
    double start = 0.0;
    for (const auto& p : phases) {
        if (!(p.tau > 0.0)) throw ConfigError("time step must be positive");
        if (!(p.until >= start)) throw ConfigError("time phases must be nondecreasing in time");
        start = p.until;
    }
    (void)num_steps();
}

void ProblemSpec::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!phi.value || !alpha.value || !beta.value || !rho0.value) {
        throw ConfigError("problem fields phi, alpha, beta and rho0 must all be set");
    }
    schedule.validate();
}

double entropy(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("entropy: rho outside [0, 1]");
    return xlogx(rho) + xlogx(1.0 - rho) + std::log(2.0);
}

double entropy_prime(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("entropy_prime: rho outside (0, 1)");
    return std::log(rho) - std::log1p(-rho);
}

double entropy_prime_difference(double a, double b) {
    if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
        throw DomainError("entropy_prime_difference: argument outside (0, 1)");
    }
    // log(a/b) - log((1-a)/(1-b)). Each ratio goes through log1p when it is
    // close to 1 and through a difference of logs otherwise; 1 - x is exact
    // for x >= 1/2, so either branch keeps full relative accuracy.
    const double diff = a - b;
    return log_ratio(a, b, diff) - log_ratio(1.0 - a, 1.0 - b, -diff);
}

double logistic(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> cell_averages(const ScalarField& field, const Mesh& mesh) {
    std::vector<double> avg(mesh.num_cells());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const auto& v = mesh.cell_vertices[k];
        if (mesh.dimension == 1) {
            const double a = v[0][0];
            const double b = v[1][0];
            if (field.integral_1d) {
                avg[k] = field.integral_1d(a, b) / (b - a);
            } else {
                const double mid = 0.5 * (a + b);
                const double half = 0.5 * (b - a) / std::sqrt(3.0);
                avg[k] = 0.5 * (field({mid - half, 0.0}) + field({mid + half, 0.0}));
            }
        } else {
            const Point& a = v[0];
            const Point& b = v[1];
            const Point& c = v[2];
            const Point ab{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
            const Point bc{0.5 * (b[0] + c[0]), 0.5 * (b[1] + c[1])};
            const Point ca{0.5 * (c[0] + a[0]), 0.5 * (c[1] + a[1])};
            auto centroid = [](const Point& p, const Point& q, const Point& r) {
                return Point{(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0};
            };
            avg[k] = 0.25 * (field(centroid(a, ab, ca)) + field(centroid(ab, b, bc)) +
                             field(centroid(ca, bc, c)) + field(centroid(ab, bc, ca)));
        }
    }
    return avg;
}

DiscreteData discretize(const ProblemSpec& spec, const Mesh& mesh) {
    spec.validate();
    DiscreteData data;
    data.epsilon = spec.epsilon;
    const std::size_t nf = mesh.num_faces();

    data.phi_cell.resize(mesh.num_cells());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) data.phi_cell[k] = spec.phi(mesh.centers[k]);

    data.phi_face.assign(nf, 0.0);
    data.alpha_face.assign(nf, 0.0);
    data.beta_face.assign(nf, 0.0);
    data.xi_gamma_face.assign(nf, 0.0);
    std::vector<std::size_t> bad;
    for (std::size_t id = 0; id < nf; ++id) {
        const Point& x = mesh.faces[id].point;
        data.phi_face[id] = spec.phi(x);
        if (mesh.faces[id].is_interior()) continue;
        const double alpha = spec.alpha(x);
        const double beta = spec.beta(x);
        data.alpha_face[id] = alpha;
        data.beta_face[id] = beta;
        if (!(beta > 0.0 && alpha > beta) || !std::isfinite(alpha)) {
            bad.push_back(id);
            continue;
        }
        data.xi_gamma_face[id] = data.phi_face[id] - spec.epsilon * std::log((alpha - beta) / beta);
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << "boundary data violates alpha > beta > 0 on " << bad.size() << " face(s), first face " << bad[0]
           << " (alpha=" << data.alpha_face[bad[0]] << ", beta=" << data.beta_face[bad[0]] << ")";
        throw BoundaryDataError(os.str(), std::move(bad));
    }

    data.rho0_cell = cell_averages(spec.rho0, mesh);
    for (double& r : data.rho0_cell) {
        if (!(r >= -1e-14 && r <= 1.0 + 1e-14)) throw DomainError("initial density outside [0, 1]");
        r = std::clamp(r, 0.0, 1.0);
    }
    return data;
}

std::vector<double> equilibrium_density(const Mesh& mesh, const DiscreteData& data, double z) {
    std::vector<double> rho(mesh.num_cells());
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = logistic((z - data.phi_cell[k]) / data.epsilon);
    return rho;
}

}  // namespace sqra
