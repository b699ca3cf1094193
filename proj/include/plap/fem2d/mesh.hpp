#pragma once

#include "plap/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace plap::fem {

using Point = std::array<double, 2>;

/// Γ₀ carries the Dirichlet condition, Γ₁ the Neumann/Robin one.
enum class BoundaryLabel { gamma0, gamma1 };

inline const char* to_string(BoundaryLabel l) { return l == BoundaryLabel::gamma0 ? "G0" : "G1"; }

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    BoundaryLabel label = BoundaryLabel::gamma1;
};

struct Mesh {
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    [[nodiscard]] double signed_area(std::size_t t) const
    {
        const auto& [i, j, k] = triangles[t];
        const Point& a = vertices[i];
        const Point& b = vertices[j];
        const Point& c = vertices[k];
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
    }

    [[nodiscard]] double edge_length(int a, int b) const
    {
        return std::hypot(vertices[b][0] - vertices[a][0], vertices[b][1] - vertices[a][1]);
    }

    [[nodiscard]] double area() const
    {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
        return s;
    }

    [[nodiscard]] double boundary_length(BoundaryLabel l) const
    {
        double s = 0.0;
        for (const auto& e : boundary_edges)
            if (e.label == l) s += edge_length(e.a, e.b);
        return s;
    }

    [[nodiscard]] double max_edge_length() const
    {
        double m = 0.0;
        for (const auto& t : triangles)
            for (int k = 0; k < 3; ++k) m = std::max(m, edge_length(t[k], t[(k + 1) % 3]));
        return m;
    }

    /// Nodes touched by a Γ₀ edge; these carry u = 0.
    [[nodiscard]] std::vector<char> dirichlet_mask() const
    {
        std::vector<char> mask(vertices.size(), 0);
        for (const auto& e : boundary_edges)
            if (e.label == BoundaryLabel::gamma0) mask[e.a] = mask[e.b] = 1;
        return mask;
    }

    /// Throws InvalidGeometry on the first broken invariant.
    void validate(double area_eps = 1e-14) const
    {
        const int nv = static_cast<int>(vertices.size());
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            for (int v : triangles[t])
                if (v < 0 || v >= nv) throw InvalidGeometry("triangle references a missing vertex");
            if (!(signed_area(t) > area_eps))
                throw InvalidGeometry("triangle " + std::to_string(t) + " is degenerate or negatively oriented");
        }
        std::map<std::pair<int, int>, int> count;
        for (const auto& t : triangles)
            for (int k = 0; k < 3; ++k) {
                const int a = t[k], b = t[(k + 1) % 3];
                ++count[{std::min(a, b), std::max(a, b)}];
            }
        std::set<std::pair<int, int>> boundary;
        for (const auto& [e, c] : count) {
            if (c > 2) throw InvalidGeometry("non-manifold edge");
            if (c == 1) boundary.insert(e);
        }
        std::set<std::pair<int, int>> labelled;
        for (const auto& e : boundary_edges) {
            const std::pair<int, int> key{std::min(e.a, e.b), std::max(e.a, e.b)};
            if (!boundary.count(key)) throw InvalidGeometry("labelled edge is not on the boundary");
            if (!labelled.insert(key).second) throw InvalidGeometry("boundary edge labelled twice");
        }
        if (labelled.size() != boundary.size()) throw InvalidGeometry("unlabelled boundary edge");
        if (!(boundary_length(BoundaryLabel::gamma1) > 0.0)) throw InvalidGeometry("Gamma_1 has zero length");
    }
};

// ----------------------------------------------------------------------------
// Plain-text format
//   v x y
//   t i j k
//   e i j G0|G1
// ----------------------------------------------------------------------------

inline void write_mesh(std::ostream& os, const Mesh& m)
{
    char buf[96];
    for (const auto& v : m.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v[0], v[1]);
        os << buf;
    }
    for (const auto& t : m.triangles) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : m.boundary_edges) os << "e " << e.a << ' ' << e.b << ' ' << to_string(e.label) << '\n';
}

inline Mesh read_mesh(std::istream& is)
{
    Mesh m;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        throw InvalidGeometry("mesh line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Point p{};
            if (!(ss >> p[0] >> p[1])) fail("expected two coordinates");
            m.vertices.push_back(p);
        } else if (tag == "t") {
            std::array<int, 3> t{};
            if (!(ss >> t[0] >> t[1] >> t[2])) fail("expected three vertex indices");
            m.triangles.push_back(t);
        } else if (tag == "e") {
            BoundaryEdge e;
            std::string lab;
            if (!(ss >> e.a >> e.b >> lab)) fail("expected two indices and a label");
            if (lab == "G0")
                e.label = BoundaryLabel::gamma0;
            else if (lab == "G1")
                e.label = BoundaryLabel::gamma1;
            else
                fail("unknown label '" + lab + "'");
            m.boundary_edges.push_back(e);
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    m.validate();
    return m;
}

// ----------------------------------------------------------------------------
// Uniform refinement
// ----------------------------------------------------------------------------

/// A refined mesh plus, for every vertex, the pair of coarse vertices it
/// interpolates (equal indices for inherited vertices).
struct RefinedMesh {
    Mesh mesh;
    std::vector<std::pair<int, int>> parents;

    /// P1 prolongation of a coarse nodal field.
    [[nodiscard]] std::vector<double> prolong(const std::vector<double>& coarse) const
    {
        std::vector<double> fine(parents.size());
        for (std::size_t i = 0; i < parents.size(); ++i)
            fine[i] = 0.5 * (coarse[parents[i].first] + coarse[parents[i].second]);
        return fine;
    }
};

/// Splits every triangle into four through its edge midpoints. The P1 space of
/// the result contains the P1 space of the input.
inline RefinedMesh refine(const Mesh& m)
{
    RefinedMesh r;
    r.mesh.vertices = m.vertices;
    for (int i = 0; i < static_cast<int>(m.vertices.size()); ++i) r.parents.emplace_back(i, i);
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        const Point& pa = m.vertices[a];
        const Point& pb = m.vertices[b];
        const int id = static_cast<int>(r.mesh.vertices.size());
        r.mesh.vertices.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
        r.parents.push_back(key);
        mid.emplace(key, id);
        return id;
    };
    for (const auto& t : m.triangles) {
        const int ab = midpoint(t[0], t[1]);
        const int bc = midpoint(t[1], t[2]);
        const int ca = midpoint(t[2], t[0]);
        r.mesh.triangles.push_back({t[0], ab, ca});
        r.mesh.triangles.push_back({ab, t[1], bc});
        r.mesh.triangles.push_back({ca, bc, t[2]});
        r.mesh.triangles.push_back({ab, bc, ca});
    }
    for (const auto& e : m.boundary_edges) {
        const int c = midpoint(e.a, e.b);
        r.mesh.boundary_edges.push_back({e.a, c, e.label});
        r.mesh.boundary_edges.push_back({c, e.b, e.label});
    }
    return r;
}

} // namespace plap::fem
