#pragma once

#include "plap/fem2d/mesh.hpp"

#include <numbers>

namespace plap::fem {

/// Closed polygon; segment i joins points[i] to points[(i+1) % size] and carries labels[i].
struct LabeledPolygon {
    std::vector<Point> points;
    std::vector<BoundaryLabel> labels;
};

/// Upper unit half-disk: the arc is approximated by `arc_segments` chords.
inline LabeledPolygon half_disk_outline(int arc_segments = 64, BoundaryLabel arc = BoundaryLabel::gamma0,
                                        BoundaryLabel flat = BoundaryLabel::gamma1, double radius = 1.0)
{
    LabeledPolygon poly;
    for (int i = 0; i <= arc_segments; ++i) {
        const double t = std::numbers::pi * i / arc_segments;
        poly.points.push_back({radius * std::cos(t), radius * std::sin(t)});
        poly.labels.push_back(arc);
    }
    poly.labels.back() = flat;
    return poly;
}

/// Axis-aligned rectangle; labels are given for bottom, right, top, left.
inline LabeledPolygon rectangle_outline(double x0, double y0, double x1, double y1,
                                        const std::array<BoundaryLabel, 4>& labels)
{
    return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {labels.begin(), labels.end()}};
}

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b)
{
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

inline bool on_segment(const Point& p, const Point& a, const Point& b)
{
    return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
           p[1] <= std::max(a[1], b[1]);
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
           (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

inline double polygon_area(const std::vector<Point>& pts)
{
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& a = pts[i];
        const auto& b = pts[(i + 1) % pts.size()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    return 0.5 * s;
}

inline bool inside_polygon(const Point& p, const std::vector<Point>& pts)
{
    bool in = false;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
        const auto& a = pts[i];
        const auto& b = pts[j];
        if ((a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
    }
    return in;
}

inline double segment_distance(const Point& p, const Point& a, const Point& b)
{
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

inline void check_simple(const LabeledPolygon& poly)
{
    const std::size_t S = poly.points.size();
    if (S < 3) throw InvalidGeometry("outline needs at least three vertices");
    if (poly.labels.size() != S) throw InvalidGeometry("outline needs one label per segment");
    for (std::size_t i = 0; i < S; ++i) {
        const auto& a = poly.points[i];
        const auto& b = poly.points[(i + 1) % S];
        if (a == b) throw InvalidGeometry("outline has a zero-length segment");
        for (std::size_t j = i + 1; j < S; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == S - 1);
            const auto& c = poly.points[j];
            const auto& d = poly.points[(j + 1) % S];
            if (adjacent) {
                const Point& shared = j == i + 1 ? b : a;
                const Point& other = j == i + 1 ? d : c;
                const Point& mine = j == i + 1 ? a : b;
                if (cross(shared, mine, other) == 0.0 &&
                    (other[0] - shared[0]) * (mine[0] - shared[0]) + (other[1] - shared[1]) * (mine[1] - shared[1]) > 0)
                    throw InvalidGeometry("outline folds back on itself");
                continue;
            }
            if (segments_intersect(a, b, c, d))
                throw InvalidGeometry("outline segments " + std::to_string(i) + " and " + std::to_string(j) +
                                      " intersect");
        }
    }
    if (polygon_area(poly.points) == 0.0) throw InvalidGeometry("outline encloses no area");
}

/// Incremental Bowyer–Watson triangulation inside a large super-triangle.
class Delaunay {
public:
    Delaunay(const Point& lo, const Point& hi)
    {
        const double span = std::max(hi[0] - lo[0], hi[1] - lo[1]);
        const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
        pts_.push_back({cx - 50 * span, cy - 40 * span});
        pts_.push_back({cx + 50 * span, cy - 40 * span});
        pts_.push_back({cx, cy + 60 * span});
        add_triangle(0, 1, 2);
    }

    int insert(const Point& p)
    {
        const int id = static_cast<int>(pts_.size());
        pts_.push_back(p);
        std::map<std::pair<int, int>, int> cavity_edges;
        for (auto& t : tris_) {
            if (!t.alive || !in_circle(t, p)) continue;
            t.alive = false;
            for (int k = 0; k < 3; ++k) {
                const int a = t.v[k], b = t.v[(k + 1) % 3];
                auto key = std::make_pair(std::min(a, b), std::max(a, b));
                auto [it, fresh] = cavity_edges.emplace(key, 0);
                if (fresh)
                    it->second = a < b ? 1 : -1;
                else
                    it->second = 0;
            }
        }
        for (const auto& [e, orient] : cavity_edges) {
            if (orient == 0) continue;
            const int a = orient > 0 ? e.first : e.second;
            const int b = orient > 0 ? e.second : e.first;
            add_triangle(a, b, id);
        }
        compact();
        return id;
    }

    [[nodiscard]] const std::vector<Point>& points() const { return pts_; }

    /// Triangles not touching the super-triangle, as vertex triples in
    /// point-index space (super vertices occupy indices 0..2).
    [[nodiscard]] std::vector<std::array<int, 3>> triangles() const
    {
        std::vector<std::array<int, 3>> out;
        for (const auto& t : tris_)
            if (t.alive && t.v[0] > 2 && t.v[1] > 2 && t.v[2] > 2) out.push_back(t.v);
        return out;
    }

private:
    struct Tri {
        std::array<int, 3> v;
        double cx, cy, r2;
        bool alive = true;
    };

    void add_triangle(int a, int b, int c)
    {
        const Point& A = pts_[a];
        const Point& B = pts_[b];
        const Point& C = pts_[c];
        const long double bx = B[0] - A[0], by = B[1] - A[1], cx = C[0] - A[0], cy = C[1] - A[1];
        const long double d = 2 * (bx * cy - by * cx);
        const long double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
        const long double ux = (cy * b2 - by * c2) / d, uy = (bx * c2 - cx * b2) / d;
        Tri t{{a, b, c}, double(A[0] + ux), double(A[1] + uy), double(ux * ux + uy * uy), true};
        if (d < 0) std::swap(t.v[1], t.v[2]);
        tris_.push_back(t);
    }

    static bool in_circle(const Tri& t, const Point& p)
    {
        const double dx = p[0] - t.cx, dy = p[1] - t.cy;
        return dx * dx + dy * dy < t.r2 * (1.0 - 1e-12);
    }

    void compact()
    {
        if (tris_.size() < 64) return;
        std::size_t dead = 0;
        for (const auto& t : tris_) dead += !t.alive;
        if (dead * 2 < tris_.size()) return;
        std::erase_if(tris_, [](const Tri& t) { return !t.alive; });
    }

    std::vector<Point> pts_;
    std::vector<Tri> tris_;
};

} // namespace detail

/// Conforming triangulation of a simple labelled polygon with target edge
/// length h. Boundary segments are subdivided to length <= h, the interior is
/// seeded with a triangular lattice, missing boundary edges are recovered by
/// midpoint insertion, and edges longer than 1.5h are split.
inline Mesh triangulate(LabeledPolygon poly, double h)
{
    if (!(h > 0.0)) throw std::invalid_argument("triangulate: h must be positive");
    detail::check_simple(poly);
    if (detail::polygon_area(poly.points) < 0) {
        std::reverse(poly.points.begin(), poly.points.end());
        std::reverse(poly.labels.begin(), poly.labels.end() - 1);
    }
    const std::size_t S = poly.points.size();

    Point lo = poly.points[0], hi = poly.points[0];
    for (const auto& p : poly.points)
        for (int d = 0; d < 2; ++d) lo[d] = std::min(lo[d], p[d]), hi[d] = std::max(hi[d], p[d]);
    detail::Delaunay dt(lo, hi);

    struct SubSeg {
        int a, b;
        std::size_t seg;
    };
    std::vector<SubSeg> subsegs;
    std::vector<int> corner(S);
    for (std::size_t s = 0; s < S; ++s) corner[s] = dt.insert(poly.points[s]);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& a = poly.points[s];
        const auto& b = poly.points[(s + 1) % S];
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::hypot(b[0] - a[0], b[1] - a[1]) / h - 1e-9)));
        int prev = corner[s];
        for (int k = 1; k < pieces; ++k) {
            const double t = double(k) / pieces;
            const int id = dt.insert({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
            subsegs.push_back({prev, id, s});
            prev = id;
        }
        subsegs.push_back({prev, corner[(s + 1) % S], s});
    }

    auto boundary_gap = [&](const Point& p) {
        double d = 1e300;
        for (std::size_t s = 0; s < S; ++s)
            d = std::min(d, detail::segment_distance(p, poly.points[s], poly.points[(s + 1) % S]));
        return d;
    };
    const double dy = h * std::sqrt(3.0) / 2.0;
    const int rows = static_cast<int>(std::ceil((hi[1] - lo[1]) / dy));
    const int cols = static_cast<int>(std::ceil((hi[0] - lo[0]) / h));
    for (int r = 0; r <= rows; ++r)
        for (int c = -1; c <= cols; ++c) {
            const Point p{lo[0] + (c + 0.5 * (r % 2)) * h, lo[1] + r * dy};
            if (detail::inside_polygon(p, poly.points) && boundary_gap(p) >= 0.5 * h) dt.insert(p);
        }

    auto edge_set = [&]() {
        std::set<std::pair<int, int>> edges;
        for (const auto& t : dt.triangles())
            for (int k = 0; k < 3; ++k) edges.emplace(std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3]));
        return edges;
    };
    auto inside_triangles = [&]() {
        std::vector<std::array<int, 3>> out;
        const auto& P = dt.points();
        for (const auto& t : dt.triangles()) {
            const Point c{(P[t[0]][0] + P[t[1]][0] + P[t[2]][0]) / 3.0, (P[t[0]][1] + P[t[1]][1] + P[t[2]][1]) / 3.0};
            if (detail::inside_polygon(c, poly.points)) out.push_back(t);
        }
        return out;
    };

    const int max_passes = 200;
    std::vector<std::array<int, 3>> tris;
    for (int pass = 0;; ++pass) {
        if (pass == max_passes) throw InvalidGeometry("triangulate: boundary recovery did not converge");
        const auto edges = edge_set();
        std::vector<SubSeg> next;
        bool changed = false;
        for (const auto& s : subsegs) {
            if (edges.count({std::min(s.a, s.b), std::max(s.a, s.b)})) {
                next.push_back(s);
                continue;
            }
            const auto& P = dt.points();
            const Point m{0.5 * (P[s.a][0] + P[s.b][0]), 0.5 * (P[s.a][1] + P[s.b][1])};
            const int id = dt.insert(m);
            next.push_back({s.a, id, s.seg});
            next.push_back({id, s.b, s.seg});
            changed = true;
        }
        subsegs = std::move(next);
        if (changed) continue;

        tris = inside_triangles();
        const auto& P = dt.points();
        std::vector<Point> splits;
        std::set<std::pair<int, int>> seen;
        for (const auto& t : tris)
            for (int k = 0; k < 3; ++k) {
                const int a = std::min(t[k], t[(k + 1) % 3]), b = std::max(t[k], t[(k + 1) % 3]);
                if (std::hypot(P[b][0] - P[a][0], P[b][1] - P[a][1]) > 1.5 * h && seen.emplace(a, b).second)
                    splits.push_back({0.5 * (P[a][0] + P[b][0]), 0.5 * (P[a][1] + P[b][1])});
            }
        if (splits.empty()) break;
        // a split edge may lie on the boundary; keep the sub-segment list in sync
        std::vector<SubSeg> updated;
        for (const auto& s : subsegs) {
            const auto& Q = dt.points();
            const Point m{0.5 * (Q[s.a][0] + Q[s.b][0]), 0.5 * (Q[s.a][1] + Q[s.b][1])};
            if (std::find(splits.begin(), splits.end(), m) != splits.end()) {
                const int id = dt.insert(m);
                std::erase(splits, m);
                updated.push_back({s.a, id, s.seg});
                updated.push_back({id, s.b, s.seg});
            } else {
                updated.push_back(s);
            }
        }
        subsegs = std::move(updated);
        for (const auto& p : splits) dt.insert(p);
    }

    Mesh mesh;
    std::vector<int> remap(dt.points().size(), -1);
    auto id_of = [&](int v) {
        if (remap[v] < 0) {
            remap[v] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(dt.points()[v]);
        }
        return remap[v];
    };
    for (const auto& t : tris) mesh.triangles.push_back({id_of(t[0]), id_of(t[1]), id_of(t[2])});
    for (const auto& s : subsegs) mesh.boundary_edges.push_back({id_of(s.a), id_of(s.b), poly.labels[s.seg]});
    mesh.validate();
    return mesh;
}

} // namespace plap::fem
