#include <cmath>
#include <sstream>

#include "doctest.h"
#include "poromem/mesh.hpp"

using namespace poromem;

namespace {

double shoelace_area(const Mesh& m, int t) {
    const Vec2& a = m.nodes[m.triangles[t][0]];
    const Vec2& b = m.nodes[m.triangles[t][1]];
    const Vec2& c = m.nodes[m.triangles[t][2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

TEST_CASE("smallest structured mesh: counts forced by construction") {
    BoundarySpec spec;  // left Dirichlet, rest Neumann (defaults)
    Mesh m = build_structured_mesh(1, 1, 1.0, 1.0, spec);
    CHECK(m.num_nodes() == 4);
    CHECK(m.num_triangles() == 2);
    CHECK(static_cast<int>(m.dirichlet_nodes.size()) == 2);
    CHECK(validate_mesh(m).empty());
}

TEST_CASE("2x2 all-Dirichlet square: 9 nodes, 8 triangles, 8 boundary nodes") {
    BoundarySpec spec;
    spec.left = spec.right = spec.bottom = spec.top = BoundaryTag::Dirichlet;
    Mesh m = build_structured_mesh(2, 2, 1.0, 1.0, spec);
    CHECK(m.num_nodes() == 9);
    CHECK(m.num_triangles() == 8);
    CHECK(static_cast<int>(m.dirichlet_nodes.size()) == 8);
    CHECK(m.num_interior_dofs() == 1);
}

TEST_CASE("total triangle area equals the rectangle area (independent shoelace)") {
    BoundarySpec spec;
    spec.left = spec.right = spec.top = BoundaryTag::Neumann;
    spec.bottom = BoundaryTag::Dirichlet;
    Mesh m = build_structured_mesh(4, 3, 2.0, 1.5, spec);
    double total = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
        const double a = shoelace_area(m, t);
        CHECK(a > 0.0);  // consistent orientation
        CHECK(a == doctest::Approx(m.tri_area[t]).epsilon(1e-14));
        total += a;
    }
    CHECK(std::abs(total - 3.0) < 1e-12);
}

TEST_CASE("area identity holds for a range of generator inputs") {
    BoundarySpec spec;
    for (int nx : {1, 3, 7}) {
        for (int ny : {1, 2, 5}) {
            Mesh m = build_structured_mesh(nx, ny, 1.25, 0.75, spec);
            double total = 0.0;
            for (double a : m.tri_area) total += a;
            CHECK(std::abs(total - 1.25 * 0.75) < 1e-12 * 1.25 * 0.75);
            CHECK(validate_mesh(m).empty());
        }
    }
}

TEST_CASE("reversed triangle orientation is reported as a negative-area violation") {
    BoundarySpec spec;
    Mesh m = build_structured_mesh(2, 2, 1.0, 1.0, spec);
    std::swap(m.triangles[3][0], m.triangles[3][1]);
    m.finalize();
    const auto violations = validate_mesh(m);
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations)
        if (v.find("non-positive signed area") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("all-Neumann boundary is rejected by the generator") {
    BoundarySpec spec;
    spec.left = spec.right = spec.bottom = spec.top = BoundaryTag::Neumann;
    CHECK_THROWS_AS(build_structured_mesh(2, 2, 1.0, 1.0, spec), std::invalid_argument);
}

TEST_CASE("all-Neumann retagging is reported as an empty Dirichlet set") {
    BoundarySpec spec;
    Mesh m = build_structured_mesh(2, 2, 1.0, 1.0, spec);
    for (auto& e : m.boundary_edges) e.tag = BoundaryTag::Neumann;
    m.finalize();
    const auto violations = validate_mesh(m);
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations)
        if (v.find("empty Dirichlet set") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("Dirichlet closure: a node on any Dirichlet edge is Dirichlet") {
    BoundarySpec spec;  // left Dirichlet only
    Mesh m = build_structured_mesh(3, 3, 1.0, 1.0, spec);
    for (int i = 0; i < m.num_nodes(); ++i) {
        const bool on_left = std::abs(m.nodes[i].x) < 1e-14;
        CHECK(static_cast<bool>(m.is_dirichlet[i]) == on_left);
    }
}

TEST_CASE("distance_to_dirichlet measures distance to the tagged side") {
    BoundarySpec spec;  // left Dirichlet
    Mesh m = build_structured_mesh(4, 4, 1.0, 1.0, spec);
    CHECK(distance_to_dirichlet(m, {0.0, 0.5}) == doctest::Approx(0.0));
    // Nearest Dirichlet *node* from (0.75, 0.5) is (0, 0.5).
    CHECK(distance_to_dirichlet(m, {0.75, 0.5}) == doctest::Approx(0.75));
}

TEST_CASE("lumped mass row sums equal |T|/3 contributions and add to the area") {
    BoundarySpec spec;
    Mesh m = build_structured_mesh(5, 4, 2.0, 1.0, spec);
    double total = 0.0;
    for (double v : m.lumped_mass) {
        CHECK(v > 0.0);
        total += v;
    }
    CHECK(std::abs(total - 2.0) < 1e-12);
}

TEST_CASE("text format roundtrip preserves the mesh exactly") {
    BoundarySpec spec;
    spec.top = BoundaryTag::Dirichlet;
    Mesh m = build_structured_mesh(3, 2, 1.5, 0.5, spec);
    std::stringstream ss;
    write_mesh(ss, m);
    Mesh back = read_mesh(ss);
    REQUIRE(back.num_nodes() == m.num_nodes());
    REQUIRE(back.num_triangles() == m.num_triangles());
    REQUIRE(back.boundary_edges.size() == m.boundary_edges.size());
    for (int i = 0; i < m.num_nodes(); ++i) {
        CHECK(back.nodes[i].x == m.nodes[i].x);
        CHECK(back.nodes[i].y == m.nodes[i].y);
    }
    for (int t = 0; t < m.num_triangles(); ++t) CHECK(back.triangles[t] == m.triangles[t]);
    for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
        CHECK(back.boundary_edges[e].a == m.boundary_edges[e].a);
        CHECK(back.boundary_edges[e].b == m.boundary_edges[e].b);
        CHECK(back.boundary_edges[e].tag == m.boundary_edges[e].tag);
    }
    CHECK(back.dirichlet_nodes == m.dirichlet_nodes);
    CHECK(validate_mesh(back).empty());
}
