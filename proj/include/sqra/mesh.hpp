#pragma once

/**
 * @file mesh.hpp
 * @brief Admissible two-point-flux meshes in 1D and 2D.
 *
 * A mesh is a set of cells with centers x_K and a set of faces. Every face
 * carries the geometric data consumed by the flux scheme: its measure m_s,
 * the center distance d_s and the signed half distances d_Ks. Interior faces
 * have two cells (owner, neighbor), exterior faces only an owner. Normals are
 * oriented outward from the owner.
 */

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sqra/error.hpp"

namespace sqra {

using Point = std::array<double, 2>;

inline constexpr std::size_t kNoCell = std::numeric_limits<std::size_t>::max();

struct Face {
    std::size_t owner = kNoCell;
    std::size_t neighbor = kNoCell;  ///< kNoCell on exterior faces
    double measure = 0.0;            ///< m_s; 1 in 1D
    double distance = 0.0;           ///< d_s
    double owner_distance = 0.0;     ///< signed d_Ks
    double neighbor_distance = 0.0;  ///< signed d_Ls, 0 on exterior faces
    Point point{};                   ///< x_s
    Point normal{};                  ///< unit normal outward from owner
    int marker = 0;

    bool is_interior() const noexcept { return neighbor != kNoCell; }
    double transmissibility() const noexcept { return measure / distance; }
};

struct Mesh {
    int dimension = 1;
    std::vector<Point> centers;
    std::vector<double> measures;
    std::vector<double> diameters;
    /// Polygon (or interval endpoints in 1D) of each cell, used for quadrature.
    std::vector<std::vector<Point>> cell_vertices;
    std::vector<Face> faces;
    std::vector<std::vector<std::size_t>> cell_faces;
    std::vector<std::size_t> interior_faces;
    std::vector<std::size_t> exterior_faces;
    /// Measure of the domain computed independently of the cells (interval
    /// length in 1D, boundary integral of x.n / 2 in 2D).
    double domain_measure = 0.0;

    std::size_t num_cells() const noexcept { return centers.size(); }
    std::size_t num_faces() const noexcept { return faces.size(); }

    /// Cell on the other side of `face` seen from `cell`, kNoCell if exterior.
    std::size_t other(std::size_t face, std::size_t cell) const noexcept {
        const Face& f = faces[face];
        return f.owner == cell ? f.neighbor : f.owner;
    }
};

struct MeshTolerances {
    double orthogonality = 1e-8;        ///< radians
    double geometric_identity = 1e-10;  ///< relative
    double min_distance = 1e-12;        ///< relative to the mesh size
    double domain_measure = 1e-10;      ///< relative
};

struct MeshQuality {
    double size = 0.0;        ///< delta_T = max cell diameter
    double regularity = 0.0;  ///< zeta_T
    double min_face_distance = 0.0;
    double orthogonality_defect = 0.0;  ///< max angle (radians)
    double max_identity_residual = 0.0; ///< relative residual of m_K = (1/d) sum m_s d_Ks
};

enum class ViolationKind {
    CoincidentCenters,
    DegenerateDistance,
    CenterOnBoundary,
    Orthogonality,
    HalfDistanceSum,
    GeometricIdentity,
    DomainMeasure,
};

const char* to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::vector<std::size_t> cells;
    std::vector<std::size_t> faces;
    std::string message;
};

struct AdmissibilityReport {
    MeshQuality quality;
    std::vector<Violation> violations;

    bool admissible() const noexcept { return violations.empty(); }
    std::string summary() const;
};

/// Raised by the triangulation builder when the input is not admissible.
class MeshError : public Error {
public:
    MeshError(const std::string& what, AdmissibilityReport report)
        : Error(what), report_(std::move(report)) {}
    const AdmissibilityReport& report() const noexcept { return report_; }
    /// True if any violation is a coincident-center or degenerate-distance one.
    bool non_admissible() const noexcept;
    bool orthogonality_violation() const noexcept;

private:
    AdmissibilityReport report_;
};

struct BoundarySegment {
    std::size_t a = 0;
    std::size_t b = 0;
    int marker = 0;
};

struct Triangulation {
    std::vector<Point> nodes;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<BoundarySegment> boundary;
};

/// Uniform grid of `n_cells` cells on [a, b].
Mesh build_uniform_1d(std::size_t n_cells, double a = 0.0, double b = 1.0);

/// Geometry of a triangulation with circumcenters as cell centers, without
/// any admissibility check. Structural errors (bad indices, zero-area
/// triangles, edges shared by more than two triangles) still throw.
Mesh assemble_triangulation(const Triangulation& tri);

/// assemble_triangulation followed by validate_admissibility; throws
/// MeshError listing every violation. Cells are never merged.
Mesh build_from_triangulation(const Triangulation& tri, const MeshTolerances& tol = {});

AdmissibilityReport validate_admissibility(const Mesh& mesh, const MeshTolerances& tol = {});

/// Reads the plain-text node/triangle/boundary format. Throws IoError.
Triangulation read_triangulation(const std::filesystem::path& path);
void write_triangulation(const std::filesystem::path& path, const Triangulation& tri);

}  // namespace sqra
