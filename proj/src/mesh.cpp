#include "poromem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace poromem {

void Mesh::finalize() {
    const int nn = num_nodes();
    const int nt = num_triangles();

    is_dirichlet.assign(nn, 0);
    for (const BoundaryEdge& e : boundary_edges) {
        if (e.tag == BoundaryTag::Dirichlet) {
            is_dirichlet.at(e.a) = 1;
            is_dirichlet.at(e.b) = 1;
        }
    }
    dirichlet_nodes.clear();
    for (int i = 0; i < nn; ++i)
        if (is_dirichlet[i]) dirichlet_nodes.push_back(i);

    tri_area.assign(nt, 0.0);
    tri_grad.assign(nt, {});
    tri_centroid.assign(nt, {});
    lumped_mass.assign(nn, 0.0);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        const Vec2 a = nodes.at(tri[0]);
        const Vec2 b = nodes.at(tri[1]);
        const Vec2 c = nodes.at(tri[2]);
        const double area2 = cross(b - a, c - a);  // twice signed area
        tri_area[t] = 0.5 * area2;
        tri_centroid[t] = (1.0 / 3.0) * (a + b + c);
        if (area2 != 0.0) {
            tri_grad[t][0] = {(b.y - c.y) / area2, (c.x - b.x) / area2};
            tri_grad[t][1] = {(c.y - a.y) / area2, (a.x - c.x) / area2};
            tri_grad[t][2] = {(a.y - b.y) / area2, (b.x - a.x) / area2};
        }
        const double third = std::abs(tri_area[t]) / 3.0;
        for (int v = 0; v < 3; ++v) lumped_mass[tri[v]] += third;
    }
}

Mesh build_structured_mesh(int nx, int ny, double lx, double ly, const BoundarySpec& spec) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_structured_mesh: nx, ny must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0))
        throw std::invalid_argument("build_structured_mesh: lx, ly must be positive");
    if (spec.left != BoundaryTag::Dirichlet && spec.right != BoundaryTag::Dirichlet &&
        spec.bottom != BoundaryTag::Dirichlet && spec.top != BoundaryTag::Dirichlet)
        throw std::invalid_argument(
            "build_structured_mesh: at least one side must be Dirichlet (Gamma_D nonempty)");

    Mesh m;
    const int npx = nx + 1, npy = ny + 1;
    m.nodes.reserve(static_cast<size_t>(npx) * npy);
    for (int j = 0; j < npy; ++j)
        for (int i = 0; i < npx; ++i)
            m.nodes.push_back({lx * i / nx, ly * j / ny});

    auto vid = [&](int i, int j) { return j * npx + i; };

    m.triangles.reserve(2 * static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }

    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.push_back({vid(0, j), vid(0, j + 1), spec.left});
        m.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), spec.right});
    }
    for (int i = 0; i < nx; ++i) {
        m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), spec.bottom});
        m.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), spec.top});
    }

    m.finalize();
    return m;
}

std::vector<std::string> validate_mesh(const Mesh& m) {
    std::vector<std::string> v;
    const int nn = m.num_nodes();

    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        for (int k = 0; k < 3; ++k)
            if (tri[k] < 0 || tri[k] >= nn) {
                v.push_back("triangle " + std::to_string(t) + ": node index out of range");
                continue;
            }
        if (t < static_cast<int>(m.tri_area.size()) && !(m.tri_area[t] > 0.0))
            v.push_back("triangle " + std::to_string(t) + ": non-positive signed area");
    }

    // Count undirected edge incidence over triangles.
    std::map<std::pair<int, int>, int> edge_count;
    auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    for (const auto& tri : m.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a >= 0 && a < nn && b >= 0 && b < nn) edge_count[key(a, b)]++;
        }

    std::map<std::pair<int, int>, int> tags_seen;  // boundary edge -> tag multiplicity
    for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
        const BoundaryEdge& be = m.boundary_edges[e];
        if (be.a < 0 || be.a >= nn || be.b < 0 || be.b >= nn) {
            v.push_back("boundary edge " + std::to_string(e) + ": node index out of range");
            continue;
        }
        auto it = edge_count.find(key(be.a, be.b));
        if (it == edge_count.end())
            v.push_back("boundary edge " + std::to_string(e) + ": not an edge of any triangle");
        else if (it->second != 1)
            v.push_back("boundary edge " + std::to_string(e) + ": belongs to " +
                        std::to_string(it->second) + " triangles, expected exactly 1");
        tags_seen[key(be.a, be.b)]++;
    }
    for (const auto& [k, count] : tags_seen)
        if (count > 1)
            v.push_back("boundary edge (" + std::to_string(k.first) + "," +
                        std::to_string(k.second) + "): tagged " + std::to_string(count) +
                        " times, expected exactly one tag");

    // Every triangle edge with incidence 1 must be a tagged boundary edge.
    for (const auto& [k, count] : edge_count)
        if (count == 1 && tags_seen.find(k) == tags_seen.end())
            v.push_back("edge (" + std::to_string(k.first) + "," + std::to_string(k.second) +
                        "): on the boundary but untagged");

    if (m.dirichlet_nodes.empty())
        v.push_back("mesh: empty Dirichlet set (Gamma_D must be nonempty)");

    return v;
}

double distance_to_dirichlet(const Mesh& m, Vec2 x) {
    if (m.dirichlet_nodes.empty())
        throw std::logic_error("distance_to_dirichlet: empty Dirichlet set");
    double best = std::numeric_limits<double>::infinity();
    for (int i : m.dirichlet_nodes) {
        const Vec2 d = m.nodes[i] - x;
        best = std::min(best, std::sqrt(dot(d, d)));
    }
    return best;
}

void write_mesh(std::ostream& out, const Mesh& m) {
    out.precision(17);
    out << m.num_nodes() << "\n";
    for (const Vec2& p : m.nodes) out << p.x << " " << p.y << "\n";
    out << m.num_triangles() << "\n";
    for (const auto& t : m.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << m.boundary_edges.size() << "\n";
    for (const BoundaryEdge& e : m.boundary_edges)
        out << e.a << " " << e.b << " "
            << (e.tag == BoundaryTag::Dirichlet ? "dirichlet" : "neumann") << "\n";
}

Mesh read_mesh(std::istream& in) {
    Mesh m;
    int nn = 0;
    if (!(in >> nn) || nn < 3) throw std::runtime_error("read_mesh: bad node count");
    m.nodes.resize(nn);
    for (auto& p : m.nodes)
        if (!(in >> p.x >> p.y)) throw std::runtime_error("read_mesh: bad node line");
    int nt = 0;
    if (!(in >> nt) || nt < 1) throw std::runtime_error("read_mesh: bad triangle count");
    m.triangles.resize(nt);
    for (auto& t : m.triangles)
        if (!(in >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: bad triangle line");
    int ne = 0;
    if (!(in >> ne) || ne < 0) throw std::runtime_error("read_mesh: bad boundary edge count");
    m.boundary_edges.resize(ne);
    for (auto& e : m.boundary_edges) {
        std::string tag;
        if (!(in >> e.a >> e.b >> tag)) throw std::runtime_error("read_mesh: bad boundary edge line");
        if (tag == "dirichlet")
            e.tag = BoundaryTag::Dirichlet;
        else if (tag == "neumann")
            e.tag = BoundaryTag::Neumann;
        else
            throw std::runtime_error("read_mesh: unknown boundary tag '" + tag + "'");
    }
    m.finalize();
    return m;
}

}  // namespace poromem
