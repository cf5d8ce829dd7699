#pragma once

// Polygonal domain, triangulation, and mixed Dirichlet/Neumann boundary
// tagging. Meshes are immutable after finalize(); all derived quantities
// (areas, P1 gradients, lumped masses, Dirichlet node set) are precomputed.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace poromem {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

enum class BoundaryTag { Dirichlet, Neumann };

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    BoundaryTag tag = BoundaryTag::Neumann;
};

/// Per-side tags for the structured rectangle generator.
struct BoundarySpec {
    BoundaryTag left = BoundaryTag::Dirichlet;
    BoundaryTag right = BoundaryTag::Neumann;
    BoundaryTag bottom = BoundaryTag::Neumann;
    BoundaryTag top = BoundaryTag::Neumann;
};

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    // Derived by finalize().
    std::vector<char> is_dirichlet;           // per node (closure of Dirichlet edges)
    std::vector<int> dirichlet_nodes;         // sorted indices
    std::vector<double> tri_area;             // signed areas
    std::vector<std::array<Vec2, 3>> tri_grad; // P1 basis gradients per triangle
    std::vector<Vec2> tri_centroid;
    std::vector<double> lumped_mass;          // row-sum mass, sum |T|/3 per node

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_interior_dofs() const { return num_nodes() - static_cast<int>(dirichlet_nodes.size()); }

    /// Compute all derived fields. Must be called after any structural edit.
    void finalize();
};

/// Right-triangle mesh of [0,lx] x [0,ly] with 2*nx*ny triangles. All
/// triangle angles are <= 90 degrees (needed for the discrete maximum
/// principle). Throws std::invalid_argument if no side is Dirichlet or the
/// dimensions are invalid.
Mesh build_structured_mesh(int nx, int ny, double lx, double ly, const BoundarySpec& spec);

/// Returns an empty list iff all Mesh invariants hold; each violation names
/// the offending entity.
std::vector<std::string> validate_mesh(const Mesh& m);

/// Euclidean distance from a point to the nearest Dirichlet node (used by
/// ramp-type initial data). Requires a nonempty Dirichlet set.
double distance_to_dirichlet(const Mesh& m, Vec2 x);

/// Plain text mesh exchange format (see docs/formats.md).
void write_mesh(std::ostream& out, const Mesh& m);
Mesh read_mesh(std::istream& in);

}  // namespace poromem
