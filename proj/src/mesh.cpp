#include "sqra/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace sqra {

namespace {

Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
double cross(const Point& a, const Point& b) { return a[0] * b[1] - a[1] * b[0]; }
double norm(const Point& a) { return std::hypot(a[0], a[1]); }

Point circumcenter(const Point& a, const Point& b, const Point& c) {
    // Relative to a for accuracy.
    const Point ab = b - a;
    const Point ac = c - a;
    const double den = 2.0 * cross(ab, ac);
    const double ab2 = dot(ab, ab);
    const double ac2 = dot(ac, ac);
    return {a[0] + (ac[1] * ab2 - ab[1] * ac2) / den, a[1] + (ab[0] * ac2 - ac[0] * ab2) / den};
}

std::uint64_t edge_key(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

bool is_non_admissible(ViolationKind k) {
    return k == ViolationKind::CoincidentCenters || k == ViolationKind::DegenerateDistance ||
           k == ViolationKind::CenterOnBoundary;
}

std::string join(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

const char* to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::CoincidentCenters: return "coincident-centers";
        case ViolationKind::DegenerateDistance: return "degenerate-distance";
        case ViolationKind::CenterOnBoundary: return "center-on-boundary";
        case ViolationKind::Orthogonality: return "orthogonality";
        case ViolationKind::HalfDistanceSum: return "half-distance-sum";
        case ViolationKind::GeometricIdentity: return "geometric-identity";
        case ViolationKind::DomainMeasure: return "domain-measure";
    }
    return "unknown";
}

std::string AdmissibilityReport::summary() const {
    std::ostringstream os;
    os.precision(6);
    os << "size=" << quality.size << " regularity=" << quality.regularity
       << " min_face_distance=" << quality.min_face_distance
       << " orthogonality_defect=" << quality.orthogonality_defect << '\n';
    if (violations.empty()) {
        os << "admissible\n";
        return os.str();
    }
    os << violations.size() << " violation(s)\n";
    for (const auto& v : violations) {
        os << "  [" << to_string(v.kind) << "]";
        if (!v.cells.empty()) os << " cells=" << join(v.cells);
        if (!v.faces.empty()) os << " faces=" << join(v.faces);
        os << ": " << v.message << '\n';
    }
    return os.str();
}

bool MeshError::non_admissible() const noexcept {
    return std::any_of(report_.violations.begin(), report_.violations.end(),
                       [](const Violation& v) { return is_non_admissible(v.kind); });
}

bool MeshError::orthogonality_violation() const noexcept {
    return std::any_of(report_.violations.begin(), report_.violations.end(), [](const Violation& v) {
        return v.kind == ViolationKind::Orthogonality || v.kind == ViolationKind::HalfDistanceSum;
    });
}

Mesh build_uniform_1d(std::size_t n_cells, double a, double b) {
    if (n_cells == 0) throw Error("build_uniform_1d: n_cells must be positive");
    if (!(a < b)) throw Error("build_uniform_1d: empty interval");

    auto node = [&](std::size_t i) {
        return i == n_cells ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n_cells);
    };

    Mesh mesh;
    mesh.dimension = 1;
    mesh.domain_measure = b - a;
    mesh.centers.resize(n_cells);
    mesh.measures.resize(n_cells);
    mesh.diameters.resize(n_cells);
    mesh.cell_vertices.resize(n_cells);
    mesh.cell_faces.resize(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) {
        const double left = node(k);
        const double right = node(k + 1);
        mesh.centers[k] = {0.5 * (left + right), 0.0};
        mesh.measures[k] = right - left;
        mesh.diameters[k] = right - left;
        mesh.cell_vertices[k] = {{left, 0.0}, {right, 0.0}};
    }

    mesh.faces.reserve(n_cells + 1);
    for (std::size_t i = 0; i <= n_cells; ++i) {
        Face f;
        f.measure = 1.0;
        f.point = {node(i), 0.0};
        if (i == 0) {
            f.owner = 0;
            f.normal = {-1.0, 0.0};
        } else {
            f.owner = i - 1;
            f.normal = {1.0, 0.0};
            if (i < n_cells) f.neighbor = i;
        }
        f.owner_distance = (f.point[0] - mesh.centers[f.owner][0]) * f.normal[0];
        if (f.is_interior()) {
            f.neighbor_distance = mesh.centers[f.neighbor][0] - f.point[0];
            f.distance = mesh.centers[f.neighbor][0] - mesh.centers[f.owner][0];
        } else {
            f.distance = std::abs(f.owner_distance);
        }
        const std::size_t id = mesh.faces.size();
        mesh.faces.push_back(f);
        mesh.cell_faces[f.owner].push_back(id);
        if (f.is_interior()) {
            mesh.cell_faces[f.neighbor].push_back(id);
            mesh.interior_faces.push_back(id);
        } else {
            mesh.exterior_faces.push_back(id);
        }
    }
    return mesh;
}

Mesh assemble_triangulation(const Triangulation& tri) {
    const std::size_t n_nodes = tri.nodes.size();
    const std::size_t n_cells = tri.triangles.size();
    if (n_cells == 0) throw Error("triangulation has no triangles");

    Mesh mesh;
    mesh.dimension = 2;
    mesh.centers.resize(n_cells);
    mesh.measures.resize(n_cells);
    mesh.diameters.resize(n_cells);
    mesh.cell_vertices.resize(n_cells);
    mesh.cell_faces.resize(n_cells);

    for (std::size_t k = 0; k < n_cells; ++k) {
        const auto& t = tri.triangles[k];
        for (std::size_t v : t) {
            if (v >= n_nodes) {
                throw Error("triangle " + std::to_string(k) + " references node " + std::to_string(v) +
                            " out of range");
            }
        }
        const Point& a = tri.nodes[t[0]];
        const Point& b = tri.nodes[t[1]];
        const Point& c = tri.nodes[t[2]];
        const double area = 0.5 * std::abs(cross(b - a, c - a));
        const double diam = std::max({norm(b - a), norm(c - b), norm(a - c)});
        if (!(area > 1e-14 * diam * diam)) throw Error("triangle " + std::to_string(k) + " is degenerate");
        mesh.measures[k] = area;
        mesh.diameters[k] = diam;
        mesh.centers[k] = circumcenter(a, b, c);
        mesh.cell_vertices[k] = {a, b, c};
    }

    std::unordered_map<std::uint64_t, int> markers;
    for (const auto& s : tri.boundary) markers[edge_key(s.a, s.b)] = s.marker;

    // face id per edge, created in order of first appearance
    std::unordered_map<std::uint64_t, std::size_t> face_of_edge;
    std::vector<std::size_t> use_count;
    for (std::size_t k = 0; k < n_cells; ++k) {
        const auto& t = tri.triangles[k];
        for (std::size_t e = 0; e < 3; ++e) {
            const std::size_t i = t[e];
            const std::size_t j = t[(e + 1) % 3];
            const std::size_t opposite = t[(e + 2) % 3];
            const std::uint64_t key = edge_key(i, j);
            auto it = face_of_edge.find(key);
            if (it == face_of_edge.end()) {
                const Point& p = tri.nodes[i];
                const Point& q = tri.nodes[j];
                const Point edge = q - p;
                const double len = norm(edge);
                Face f;
                f.owner = k;
                f.measure = len;
                f.point = {0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
                f.normal = {edge[1] / len, -edge[0] / len};
                if (dot(f.point - tri.nodes[opposite], f.normal) < 0.0) {
                    f.normal = {-f.normal[0], -f.normal[1]};
                }
                f.owner_distance = dot(f.point - mesh.centers[k], f.normal);
                f.distance = norm(f.point - mesh.centers[k]);
                if (auto m = markers.find(key); m != markers.end()) f.marker = m->second;
                face_of_edge.emplace(key, mesh.faces.size());
                mesh.cell_faces[k].push_back(mesh.faces.size());
                mesh.faces.push_back(f);
                use_count.push_back(1);
            } else {
                const std::size_t id = it->second;
                if (++use_count[id] > 2) {
                    throw Error("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is shared by more than two triangles");
                }
                Face& f = mesh.faces[id];
                f.neighbor = k;
                f.neighbor_distance = -dot(f.point - mesh.centers[k], f.normal);
                f.distance = norm(mesh.centers[k] - mesh.centers[f.owner]);
                mesh.cell_faces[k].push_back(id);
            }
        }
    }

    double boundary_integral = 0.0;
    for (std::size_t id = 0; id < mesh.faces.size(); ++id) {
        const Face& f = mesh.faces[id];
        if (f.is_interior()) {
            mesh.interior_faces.push_back(id);
        } else {
            mesh.exterior_faces.push_back(id);
            boundary_integral += dot(f.point, f.normal) * f.measure;
        }
    }
    mesh.domain_measure = 0.5 * boundary_integral;
    return mesh;
}

AdmissibilityReport validate_admissibility(const Mesh& mesh, const MeshTolerances& tol) {
    AdmissibilityReport report;
    MeshQuality& q = report.quality;
    const std::size_t n_cells = mesh.num_cells();
    const double d = static_cast<double>(mesh.dimension);

    q.size = n_cells ? *std::max_element(mesh.diameters.begin(), mesh.diameters.end()) : 0.0;
    q.min_face_distance = std::numeric_limits<double>::infinity();
    const double min_distance = tol.min_distance * q.size;

    std::set<std::pair<std::size_t, std::size_t>> coincident;
    for (std::size_t id = 0; id < mesh.num_faces(); ++id) {
        const Face& f = mesh.faces[id];
        q.min_face_distance = std::min(q.min_face_distance, f.distance);
        if (!(f.distance > min_distance)) {
            if (f.is_interior()) {
                coincident.insert(std::minmax(f.owner, f.neighbor));
                report.violations.push_back({ViolationKind::CoincidentCenters, {f.owner, f.neighbor}, {id},
                                             "cell centers coincide across an interior face"});
            } else {
                report.violations.push_back({ViolationKind::CenterOnBoundary, {f.owner}, {id},
                                             "cell center lies on its boundary face"});
            }
            continue;
        }
        for (std::size_t cell : {f.owner, f.neighbor}) {
            if (cell == kNoCell) continue;
            const double diam = mesh.diameters[cell];
            q.regularity = std::max(q.regularity, diam / f.distance + f.distance / diam);
        }
        if (mesh.dimension == 1) continue;

        if (f.is_interior()) {
            const Point dx = mesh.centers[f.neighbor] - mesh.centers[f.owner];
            const double angle = std::atan2(std::abs(cross(dx, f.normal)), dot(dx, f.normal));
            q.orthogonality_defect = std::max(q.orthogonality_defect, angle);
            if (angle > tol.orthogonality) {
                report.violations.push_back({ViolationKind::Orthogonality, {f.owner, f.neighbor}, {id},
                                             "x_L - x_K is not aligned with the face normal (angle " +
                                                 std::to_string(angle) + " rad)"});
            }
            const double sum = f.owner_distance + f.neighbor_distance;
            if (std::abs(sum - f.distance) > tol.geometric_identity * f.distance) {
                report.violations.push_back({ViolationKind::HalfDistanceSum, {f.owner, f.neighbor}, {id},
                                             "d_Ks + d_Ls != d_s"});
            }
        } else {
            const Point dx = f.point - mesh.centers[f.owner];
            const double angle = std::atan2(std::abs(cross(dx, f.normal)), std::abs(dot(dx, f.normal)));
            q.orthogonality_defect = std::max(q.orthogonality_defect, angle);
            if (angle > tol.orthogonality) {
                report.violations.push_back({ViolationKind::Orthogonality, {f.owner}, {id},
                                             "x_s - x_K is not orthogonal to the boundary face"});
            }
        }
    }
    if (mesh.num_faces() == 0) q.min_face_distance = 0.0;

    // Coincident centers that do not share a face (e.g. four cocircular triangles).
    std::vector<std::size_t> order(n_cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return mesh.centers[i][0] < mesh.centers[j][0];
    });
    const double eps = std::max(min_distance, std::numeric_limits<double>::min());
    for (std::size_t a = 0; a < n_cells; ++a) {
        for (std::size_t b = a + 1; b < n_cells; ++b) {
            const Point& p = mesh.centers[order[a]];
            const Point& r = mesh.centers[order[b]];
            if (r[0] - p[0] > eps) break;
            if (std::abs(r[1] - p[1]) > eps) continue;
            const auto pair = std::minmax(order[a], order[b]);
            if (coincident.insert(pair).second) {
                report.violations.push_back({ViolationKind::CoincidentCenters, {pair.first, pair.second}, {},
                                             "cell centers coincide"});
            }
        }
    }

    for (std::size_t k = 0; k < n_cells; ++k) {
        double sum = 0.0;
        for (std::size_t id : mesh.cell_faces[k]) {
            const Face& f = mesh.faces[id];
            sum += f.measure * (f.owner == k ? f.owner_distance : f.neighbor_distance);
        }
        const double residual = std::abs(mesh.measures[k] - sum / d) / mesh.measures[k];
        q.max_identity_residual = std::max(q.max_identity_residual, residual);
        if (residual > tol.geometric_identity) {
            report.violations.push_back({ViolationKind::GeometricIdentity, {k}, {},
                                         "m_K != (1/d) sum m_s d_Ks (relative residual " +
                                             std::to_string(residual) + ")"});
        }
    }

    const double total = std::accumulate(mesh.measures.begin(), mesh.measures.end(), 0.0);
    if (std::abs(total - mesh.domain_measure) > tol.domain_measure * std::abs(mesh.domain_measure)) {
        report.violations.push_back({ViolationKind::DomainMeasure, {}, {},
                                     "sum of cell measures differs from the domain measure"});
    }
    return report;
}

Mesh build_from_triangulation(const Triangulation& tri, const MeshTolerances& tol) {
    Mesh mesh = assemble_triangulation(tri);
    AdmissibilityReport report = validate_admissibility(mesh, tol);
    if (!report.admissible()) {
        const std::string what = "triangulation is not an admissible TPFA mesh:\n" + report.summary();
        throw MeshError(what, std::move(report));
    }
    return mesh;
}

Triangulation read_triangulation(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file '" + path.string() + "'");

    Triangulation tri;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    };
    auto header = [&](const char* name) -> std::optional<std::size_t> {
        if (!next_line()) return std::nullopt;
        std::istringstream is(line);
        std::string word;
        long long count = -1;
        if (!(is >> word >> count) || word != name || count < 0) {
            fail(std::string("expected '") + name + " <count>'");
        }
        return static_cast<std::size_t>(count);
    };

    const auto n_nodes = header("nodes");
    if (!n_nodes) fail("empty mesh file");
    tri.nodes.resize(*n_nodes);
    for (auto& p : tri.nodes) {
        if (!next_line()) fail("unexpected end of file in node list");
        std::istringstream is(line);
        if (!(is >> p[0] >> p[1])) fail("malformed node line");
    }

    const auto n_tri = header("triangles");
    if (!n_tri) fail("missing 'triangles' section");
    tri.triangles.resize(*n_tri);
    for (auto& t : tri.triangles) {
        if (!next_line()) fail("unexpected end of file in triangle list");
        std::istringstream is(line);
        long long i, j, k;
        if (!(is >> i >> j >> k) || i < 0 || j < 0 || k < 0) fail("malformed triangle line");
        t = {static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)};
    }

    if (const auto n_bnd = header("boundary")) {
        tri.boundary.resize(*n_bnd);
        for (auto& s : tri.boundary) {
            if (!next_line()) fail("unexpected end of file in boundary list");
            std::istringstream is(line);
            long long i, j;
            if (!(is >> i >> j >> s.marker) || i < 0 || j < 0) fail("malformed boundary line");
            s.a = static_cast<std::size_t>(i);
            s.b = static_cast<std::size_t>(j);
        }
    }
    return tri;
}

void write_triangulation(const std::filesystem::path& path, const Triangulation& tri) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file '" + path.string() + "'");
    out.precision(17);
    out << "nodes " << tri.nodes.size() << '\n';
    for (const auto& p : tri.nodes) out << p[0] << ' ' << p[1] << '\n';
    out << "triangles " << tri.triangles.size() << '\n';
    for (const auto& t : tri.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (!tri.boundary.empty()) {
        out << "boundary " << tri.boundary.size() << '\n';
        for (const auto& s : tri.boundary) out << s.a << ' ' << s.b << ' ' << s.marker << '\n';
    }
}

}  // namespace sqra
