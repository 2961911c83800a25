#include "fraclod/mesh.hpp"

#include "fraclod/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>

namespace fraclod {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double signed_area(const TriangleVertices& t) { return 0.5 * cross(t[1] - t[0], t[2] - t[0]); }

double diameter(const TriangleVertices& t) {
    return std::max({distance(t[0], t[1]), distance(t[1], t[2]), distance(t[2], t[0])});
}

double inscribed_diameter(const TriangleVertices& t) {
    const double perimeter = distance(t[0], t[1]) + distance(t[1], t[2]) + distance(t[2], t[0]);
    return 4.0 * std::abs(signed_area(t)) / perimeter;
}

std::array<double, 3> barycentric(const TriangleVertices& t, Point2 p) {
    const double det = cross(t[1] - t[0], t[2] - t[0]);
    const double l1 = cross(p - t[0], t[2] - t[0]) / det;
    const double l2 = cross(t[1] - t[0], p - t[0]) / det;
    return {1.0 - l1 - l2, l1, l2};
}

TriMesh::TriMesh(std::vector<Point2> vertices, std::vector<std::array<Index, 3>> triangles,
                 std::vector<bool> boundary_vertex)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary_vertex)) {
    if (boundary_.size() != vertices_.size())
        throw InputError("mesh: boundary flag array must match the vertex count");
    for (const auto& p : vertices_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError("mesh: non-finite vertex coordinate");
    }
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (Index v : triangles_[t]) {
            if (v < 0 || v >= num_vertices())
                throw InputError("mesh: triangle " + std::to_string(t) + " references vertex " +
                                 std::to_string(v) + " out of range");
        }
        const auto tv = triangle_vertices(static_cast<Index>(t));
        const double area = signed_area(tv);
        const double scale = diameter(tv);
        if (!(std::abs(area) > 1e-14 * scale * scale))
            throw InputError("mesh: triangle " + std::to_string(t) + " has zero area");
        if (area < 0.0)
            throw InputError("mesh: triangle " + std::to_string(t) + " is not counter-clockwise");
    }
    build_topology();
}

TriangleVertices TriMesh::triangle_vertices(Index t) const {
    const auto& tri = triangles_[t];
    return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
}

std::span<const Index> TriMesh::vertex_triangles(Index v) const {
    return std::span<const Index>(vt_triangles_).subspan(vt_offsets_[v], vt_offsets_[v + 1] - vt_offsets_[v]);
}

void TriMesh::build_topology() {
    const Index nv = num_vertices();
    const Index nt = num_triangles();
    vt_offsets_.assign(static_cast<std::size_t>(nv) + 1, 0);
    for (const auto& tri : triangles_)
        for (Index v : tri) ++vt_offsets_[v + 1];
    for (Index v = 0; v < nv; ++v) vt_offsets_[v + 1] += vt_offsets_[v];
    vt_triangles_.assign(static_cast<std::size_t>(vt_offsets_.back()), 0);
    {
        std::vector<Index> next(vt_offsets_.begin(), vt_offsets_.end() - 1);
        for (Index t = 0; t < nt; ++t)
            for (Index v : triangles_[t]) vt_triangles_[next[v]++] = t;
    }

    struct EdgeRec {
        Index a, b, t;
        int e;
    };
    std::vector<EdgeRec> recs;
    recs.reserve(static_cast<std::size_t>(nt) * 3);
    for (Index t = 0; t < nt; ++t) {
        for (int e = 0; e < 3; ++e) {
            Index a = triangles_[t][e];
            Index b = triangles_[t][(e + 1) % 3];
            if (a > b) std::swap(a, b);
            recs.push_back({a, b, t, e});
        }
    }
    std::sort(recs.begin(), recs.end(), [](const EdgeRec& x, const EdgeRec& y) {
        return x.a != y.a ? x.a < y.a : (x.b != y.b ? x.b < y.b : x.t < y.t);
    });
    neighbors_.assign(static_cast<std::size_t>(nt), {-1, -1, -1});
    num_edges_ = 0;
    for (std::size_t i = 0; i < recs.size();) {
        std::size_t j = i;
        while (j < recs.size() && recs[j].a == recs[i].a && recs[j].b == recs[i].b) ++j;
        const std::size_t count = j - i;
        if (count > 2)
            throw InputError("mesh: non-conforming, edge (" + std::to_string(recs[i].a) + "," +
                             std::to_string(recs[i].b) + ") shared by more than two triangles");
        if (count == 2) {
            if (recs[i].t == recs[i + 1].t) throw InputError("mesh: degenerate triangle with repeated edge");
            neighbors_[recs[i].t][recs[i].e] = recs[i + 1].t;
            neighbors_[recs[i + 1].t][recs[i + 1].e] = recs[i].t;
        } else if (!boundary_[recs[i].a] || !boundary_[recs[i].b]) {
            throw InputError("mesh: non-conforming, edge (" + std::to_string(recs[i].a) + "," +
                             std::to_string(recs[i].b) +
                             ") has a single incident triangle but is not on the boundary");
        }
        ++num_edges_;
        i = j;
    }
}

double TriMesh::mesh_size() const {
    double h = 0.0;
    for (Index t = 0; t < num_triangles(); ++t) h = std::max(h, diameter(triangle_vertices(t)));
    return h;
}

double TriMesh::shape_regularity() const {
    const double h = mesh_size();
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = 0.0;
    for (Index t = 0; t < num_triangles(); ++t) {
        const double d = inscribed_diameter(triangle_vertices(t));
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    return std::max(h / dmin, dmax / dmin);
}

double TriMesh::min_angle() const {
    double amin = std::numbers::pi;
    for (Index t = 0; t < num_triangles(); ++t) {
        const auto tv = triangle_vertices(t);
        for (int i = 0; i < 3; ++i) {
            const Point2 u = tv[(i + 1) % 3] - tv[i];
            const Point2 w = tv[(i + 2) % 3] - tv[i];
            amin = std::min(amin, std::atan2(std::abs(cross(u, w)), dot(u, w)));
        }
    }
    return amin;
}

Index TriMesh::locate(Point2 p) const {
    for (Index t = 0; t < num_triangles(); ++t) {
        const auto tv = triangle_vertices(t);
        const auto bc = barycentric(tv, p);
        if (bc[0] >= -1e-12 && bc[1] >= -1e-12 && bc[2] >= -1e-12) return t;
    }
    return -1;
}

TriMesh unit_square_structured(Index n) {
    if (n < 1) throw InputError("unit_square_structured: need at least one cell per side");
    std::vector<Point2> verts;
    std::vector<bool> boundary;
    verts.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (Index j = 0; j <= n; ++j) {
        for (Index i = 0; i <= n; ++i) {
            verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            boundary.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }
    std::vector<std::array<Index, 3>> tris;
    tris.reserve(static_cast<std::size_t>(2 * n * n));
    const auto id = [n](Index i, Index j) { return j * (n + 1) + i; };
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
}

TriMesh refine_quadrisect(const TriMesh& mesh) {
    const Index nt = mesh.num_triangles();
    // Number the edges: an edge gets the id of its first visit in triangle order.
    std::vector<std::array<Index, 3>> edge_id(static_cast<std::size_t>(nt), {-1, -1, -1});
    std::vector<Point2> verts = mesh.vertices();
    std::vector<bool> boundary = mesh.boundary_vertex();
    for (Index t = 0; t < nt; ++t) {
        for (int e = 0; e < 3; ++e) {
            if (edge_id[t][e] >= 0) continue;
            const Index a = mesh.triangle(t)[e];
            const Index b = mesh.triangle(t)[(e + 1) % 3];
            const Index id = static_cast<Index>(verts.size());
            verts.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
            edge_id[t][e] = id;
            const Index nb = mesh.neighbor(t, e);
            boundary.push_back(nb < 0);
            if (nb >= 0) {
                for (int f = 0; f < 3; ++f) {
                    const Index c = mesh.triangle(nb)[f];
                    const Index d = mesh.triangle(nb)[(f + 1) % 3];
                    if ((c == a && d == b) || (c == b && d == a)) edge_id[nb][f] = id;
                }
            }
        }
    }
    std::vector<std::array<Index, 3>> tris;
    tris.reserve(static_cast<std::size_t>(4 * nt));
    std::vector<Index> parent;
    parent.reserve(static_cast<std::size_t>(4 * nt));
    for (Index t = 0; t < nt; ++t) {
        const auto& v = mesh.triangle(t);
        const Index mab = edge_id[t][0];
        const Index mbc = edge_id[t][1];
        const Index mca = edge_id[t][2];
        tris.push_back({v[0], mab, mca});
        tris.push_back({mab, v[1], mbc});
        tris.push_back({mca, mbc, v[2]});
        tris.push_back({mab, mbc, mca});
        for (int i = 0; i < 4; ++i) parent.push_back(t);
    }
    TriMesh child(std::move(verts), std::move(tris), std::move(boundary));
    child.level_ = mesh.level() + 1;
    child.parent_ = std::make_shared<const TriMesh>(mesh);
    child.parent_element_ = std::move(parent);
    return child;
}

std::vector<Index> ancestor_elements(const TriMesh& fine, const TriMesh& coarse) {
    const auto same = [](const TriMesh& a, const TriMesh& b) {
        return a.num_triangles() == b.num_triangles() && a.num_vertices() == b.num_vertices() &&
               a.triangles() == b.triangles() && a.vertices() == b.vertices();
    };
    std::vector<Index> map(static_cast<std::size_t>(fine.num_triangles()));
    for (Index t = 0; t < fine.num_triangles(); ++t) map[t] = t;
    const TriMesh* cur = &fine;
    while (cur->level() > coarse.level() && cur->parent()) {
        for (auto& m : map) m = cur->parent_element()[m];
        cur = cur->parent().get();
    }
    if (!same(*cur, coarse)) throw InputError("mesh hierarchy: fine mesh is not a refinement of the coarse mesh");
    return map;
}

bool Patch::contains(Index t) const { return std::binary_search(elements.begin(), elements.end(), t); }

std::vector<Index> patch_layers(const TriMesh& mesh, std::span<const Index> center) {
    std::vector<Index> layer(static_cast<std::size_t>(mesh.num_triangles()), -1);
    std::vector<Index> frontier;
    for (Index t : center) {
        if (layer[t] < 0) {
            layer[t] = 0;
            frontier.push_back(t);
        }
    }
    std::vector<char> vertex_done(static_cast<std::size_t>(mesh.num_vertices()), 0);
    Index m = 0;
    while (!frontier.empty()) {
        ++m;
        std::vector<Index> next;
        for (Index t : frontier) {
            for (Index v : mesh.triangle(t)) {
                if (vertex_done[v]) continue;
                vertex_done[v] = 1;
                for (Index s : mesh.vertex_triangles(v)) {
                    if (layer[s] < 0) {
                        layer[s] = m;
                        next.push_back(s);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return layer;
}

Patch patch(const TriMesh& mesh, std::span<const Index> center, Index k) {
    if (k < 0) throw InputError("patch: k must be non-negative");
    for (Index t : center) {
        if (t < 0 || t >= mesh.num_triangles()) throw InputError("patch: triangle index out of range");
    }
    Patch p;
    p.center.assign(center.begin(), center.end());
    std::sort(p.center.begin(), p.center.end());
    p.k = k;
    // Bounded breadth-first growth; cost proportional to the patch size.
    p.elements = p.center;
    p.elements.erase(std::unique(p.elements.begin(), p.elements.end()), p.elements.end());
    std::vector<Index> frontier = p.elements;
    for (Index m = 0; m < k && !frontier.empty(); ++m) {
        std::vector<Index> next;
        for (Index t : frontier)
            for (Index v : mesh.triangle(t))
                for (Index s : mesh.vertex_triangles(v))
                    if (!std::binary_search(p.elements.begin(), p.elements.end(), s)) next.push_back(s);
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        std::vector<Index> merged;
        merged.reserve(p.elements.size() + next.size());
        std::merge(p.elements.begin(), p.elements.end(), next.begin(), next.end(), std::back_inserter(merged));
        p.elements = std::move(merged);
        frontier = std::move(next);
    }
    return p;
}

Patch patch(const TriMesh& mesh, Index t, Index k) {
    const std::array<Index, 1> c{t};
    return patch(mesh, c, k);
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("mesh file " + path.string() + ": cannot open");
    const auto fail = [&](const std::string& what) {
        throw InputError("mesh file " + path.string() + ": " + what);
    };
    long long nv = 0, nt = 0, nb = 0;
    if (!(in >> nv >> nt >> nb)) fail("malformed header, expected 'NV NT NB'");
    if (nv < 3 || nt < 1 || nb < 0) fail("invalid counts in header");
    std::vector<Point2> verts(static_cast<std::size_t>(nv));
    for (auto& p : verts) {
        if (!(in >> p.x >> p.y)) fail("expected " + std::to_string(nv) + " vertex lines");
    }
    std::vector<std::array<Index, 3>> tris(static_cast<std::size_t>(nt));
    for (auto& t : tris) {
        long long a, b, c;
        if (!(in >> a >> b >> c)) fail("expected " + std::to_string(nt) + " triangle lines");
        for (long long x : {a, b, c}) {
            if (x < 0 || x >= nv) fail("triangle vertex index " + std::to_string(x) + " out of range");
        }
        t = {static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)};
    }
    std::vector<bool> boundary(static_cast<std::size_t>(nv), false);
    for (long long i = 0; i < nb; ++i) {
        long long v;
        if (!(in >> v)) fail("expected " + std::to_string(nb) + " boundary vertex lines");
        if (v < 0 || v >= nv) fail("boundary vertex index " + std::to_string(v) + " out of range");
        boundary[static_cast<std::size_t>(v)] = true;
    }
    std::string rest;
    if (in >> rest) fail("unexpected trailing data '" + rest + "' (counts do not match the content)");
    try {
        return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
    } catch (const InputError& e) {
        fail(e.what());
    }
    return {};
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("mesh file " + path.string() + ": cannot write");
    Index nb = 0;
    for (bool b : mesh.boundary_vertex()) nb += b ? 1 : 0;
    out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << nb << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.boundary_vertex()[v]) out << v << '\n';
    }
    if (!out) throw InputError("mesh file " + path.string() + ": write failed");
}

}  // namespace fraclod
