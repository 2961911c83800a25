#include "fraclod/error.hpp"
#include "fraclod/mesh.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

using namespace fraclod;
using Catch::Approx;

namespace {

// Lattice octagon: the a x b rectangle with its corners cut by diagonal lines
// (cuts listed counter-clockwise from the lower left), triangulated along
// lattice diagonals.
TriMesh lattice_octagon(int a, int b, std::array<int, 4> cut) {
    const auto inside = [&](int x, int y) {
        return x >= 0 && x <= a && y >= 0 && y <= b && x + y >= cut[0] && (a - x) + y >= cut[1] &&
               (a - x) + (b - y) >= cut[2] && x + (b - y) >= cut[3];
    };
    const auto on_boundary = [&](int x, int y) {
        return x == 0 || x == a || y == 0 || y == b || x + y == cut[0] || (a - x) + y == cut[1] ||
               (a - x) + (b - y) == cut[2] || x + (b - y) == cut[3];
    };
    std::map<std::pair<int, int>, Index> id;
    std::vector<Point2> verts;
    std::vector<bool> boundary;
    for (int y = 0; y <= b; ++y)
        for (int x = 0; x <= a; ++x)
            if (inside(x, y)) {
                id[{x, y}] = static_cast<Index>(verts.size());
                verts.push_back({x / double(a), y / double(b)});
                boundary.push_back(on_boundary(x, y));
            }
    std::vector<std::array<Index, 3>> tris;
    const auto add = [&](std::pair<int, int> p, std::pair<int, int> q, std::pair<int, int> r) {
        if (id.count(p) && id.count(q) && id.count(r)) tris.push_back({id[p], id[q], id[r]});
    };
    for (int y = 0; y < b; ++y)
        for (int x = 0; x < a; ++x) {
            const std::pair<int, int> p00{x, y}, p10{x + 1, y}, p01{x, y + 1}, p11{x + 1, y + 1};
            // Lower-left/upper-right cuts run along x + y = const, the other two along x - y = const.
            const bool anti = (x + y + 1 == cut[0]) || ((a - x - 1) + (b - y - 1) + 1 == cut[2]);
            if (anti) {
                add(p00, p10, p01);
                add(p10, p11, p01);
            } else {
                add(p00, p10, p11);
                add(p00, p11, p01);
            }
        }
    return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
}

Index count_boundary(const TriMesh& m) {
    return static_cast<Index>(std::count(m.boundary_vertex().begin(), m.boundary_vertex().end(), true));
}

double total_area(const TriMesh& m) {
    double s = 0.0;
    for (Index t = 0; t < m.num_triangles(); ++t) s += signed_area(m.triangle_vertices(t));
    return s;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fraclod_test_" + name);
}

}  // namespace

TEST_CASE("geometry helpers", "[mesh]") {
    const TriangleVertices t{{{0, 0}, {1, 0}, {0, 1}}};
    CHECK(signed_area(t) == 0.5);
    CHECK(diameter(t) == Approx(std::sqrt(2.0)));
    CHECK(inscribed_diameter(t) == Approx(4 * 0.5 / (2 + std::sqrt(2.0))));
    const auto l = barycentric(t, {0.25, 0.5});
    CHECK(l[0] == Approx(0.25));
    CHECK(l[1] == Approx(0.25));
    CHECK(l[2] == Approx(0.5));
}

TEST_CASE("structured unit square", "[mesh]") {
    const auto m = unit_square_structured(1);
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_triangles() == 2);
    CHECK(count_boundary(m) == 4);

    const auto m32 = unit_square_structured(32);
    CHECK(m32.num_vertices() == 33 * 33);
    CHECK(m32.num_triangles() == 2 * 32 * 32);
    CHECK(m32.mesh_size() == Approx(std::sqrt(2.0) / 32).epsilon(1e-14));
    CHECK(total_area(m32) == Approx(1.0).epsilon(1e-13));
    CHECK(m32.min_angle() == Approx(std::numbers::pi / 4));
    CHECK_THROWS_AS(unit_square_structured(0), InputError);
}

TEST_CASE("triangles are counter-clockwise and conforming", "[mesh]") {
    const auto m = refine_quadrisect(unit_square_structured(3));
    std::map<std::pair<Index, Index>, int> edge_count;
    for (Index t = 0; t < m.num_triangles(); ++t) {
        CHECK(signed_area(m.triangle_vertices(t)) > 0.0);
        const auto& v = m.triangle(t);
        for (int e = 0; e < 3; ++e) edge_count[std::minmax(v[e], v[(e + 1) % 3])]++;
    }
    Index boundary_edges = 0;
    for (const auto& [edge, count] : edge_count) {
        CHECK(count <= 2);
        if (count == 1) {
            ++boundary_edges;
            CHECK(m.boundary_vertex()[edge.first]);
            CHECK(m.boundary_vertex()[edge.second]);
        }
    }
    CHECK(boundary_edges == 4 * 6);
    CHECK(m.num_edges() == static_cast<Index>(edge_count.size()));
}

TEST_CASE("invalid meshes are rejected", "[mesh]") {
    // clockwise
    CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}, {true, true, true}), InputError);
    // zero area
    CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}, {true, true, true}), InputError);
    // hanging node: vertex 4 sits on the edge 1-2 of the left triangle
    CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}}, {{0, 1, 2}, {1, 3, 4}, {4, 3, 2}},
                            {true, true, true, true, false}),
                    InputError);
}

TEST_CASE("quadrisection counts and nesting", "[mesh]") {
    const auto coarse = unit_square_structured(2);
    const auto fine = refine_quadrisect(coarse);
    CHECK(fine.num_triangles() == 32);
    CHECK(fine.num_vertices() == 25);
    CHECK(fine.level() == 1);
    CHECK(fine.min_angle() == Approx(coarse.min_angle()));
    CHECK(fine.mesh_size() == Approx(coarse.mesh_size() / 2));

    // Parent vertices come first and are unchanged.
    for (Index v = 0; v < coarse.num_vertices(); ++v) CHECK(fine.vertex(v) == coarse.vertex(v));

    // Every child lies in its parent and has a quarter of its area.
    REQUIRE(fine.parent_element().size() == static_cast<std::size_t>(fine.num_triangles()));
    for (Index t = 0; t < fine.num_triangles(); ++t) {
        const Index p = fine.parent_element()[t];
        const auto pt = coarse.triangle_vertices(p);
        CHECK(signed_area(fine.triangle_vertices(t)) == Approx(signed_area(pt) / 4));
        for (Index v : fine.triangle(t)) {
            const auto l = barycentric(pt, fine.vertex(v));
            for (double x : l) CHECK(x >= -1e-14);
        }
    }

    // Two refinements: ancestors agree with the composition of parents.
    const auto finer = refine_quadrisect(fine);
    const auto anc = ancestor_elements(finer, coarse);
    for (Index t = 0; t < finer.num_triangles(); ++t)
        CHECK(anc[t] == fine.parent_element()[finer.parent_element()[t]]);
    const auto self = ancestor_elements(coarse, coarse);
    for (Index t = 0; t < coarse.num_triangles(); ++t) CHECK(self[t] == t);
}

TEST_CASE("vertex count grows by the edge count", "[mesh]") {
    // V' = V + E and, from Euler's formula for a disk, E = 3V - 3 - B.
    auto m = lattice_octagon(7, 5, {2, 1, 0, 3});
    for (int l = 0; l < 3; ++l) {
        const Index v = m.num_vertices(), e = m.num_edges(), b = count_boundary(m);
        CHECK(e == 3 * v - 3 - b);
        m = refine_quadrisect(m);
        CHECK(m.num_vertices() == v + e);
        CHECK(count_boundary(m) == 2 * b);
    }
}

TEST_CASE("five refinements of a 237-node mesh give 219345 nodes", "[mesh]") {
    auto m = lattice_octagon(15, 18, {4, 5, 6, 6});
    REQUIRE(m.num_vertices() == 237);
    REQUIRE(count_boundary(m) == 45);
    for (int l = 0; l < 5; ++l) m = refine_quadrisect(m);
    CHECK(m.num_vertices() == 219345);
}

TEST_CASE("patches", "[mesh]") {
    const auto m = unit_square_structured(2);
    CHECK(patch(m, 3, 0).elements == std::vector<Index>{3});
    // k = 2 on the 2 x 2 mesh: brute-force vertex-sharing scan. Only the two
    // corner triangles off the diagonal miss each other.
    for (Index t = 0; t < m.num_triangles(); ++t) {
        std::set<Index> layer{t};
        for (int step = 0; step < 2; ++step) {
            std::set<Index> verts, next;
            for (Index s : layer)
                for (Index v : m.triangle(s)) verts.insert(v);
            for (Index s = 0; s < m.num_triangles(); ++s)
                for (Index v : m.triangle(s))
                    if (verts.count(v)) next.insert(s);
            layer = next;
        }
        const auto p = patch(m, t, 2);
        CHECK(p.elements == std::vector<Index>(layer.begin(), layer.end()));
        const Point2 c = (1.0 / 3.0) * (m.vertex(m.triangle(t)[0]) + m.vertex(m.triangle(t)[1]) + m.vertex(m.triangle(t)[2]));
        const bool off_corner = (c.x > 0.5) != (c.y > 0.5) && std::abs(c.x - c.y) > 0.5;
        CHECK(p.elements.size() == (off_corner ? 7u : 8u));
    }

    // U^1 equals the brute-force vertex-sharing neighborhood.
    const auto f = refine_quadrisect(unit_square_structured(3));
    for (Index t = 0; t < f.num_triangles(); t += 7) {
        std::vector<Index> expected;
        const auto& vt = f.triangle(t);
        for (Index s = 0; s < f.num_triangles(); ++s) {
            const auto& vs = f.triangle(s);
            bool share = false;
            for (Index a : vt)
                for (Index b : vs) share |= a == b;
            if (share) expected.push_back(s);
        }
        const auto p = patch(f, t, 1);
        CHECK(p.elements == expected);
        CHECK(p.contains(t));
    }

    // Monotone growth up to the whole mesh; layers agree with patches.
    const std::vector<Index> center{10};
    const auto layers = patch_layers(f, center);
    std::size_t previous = 0;
    for (Index k = 0; k < 20; ++k) {
        const auto p = patch(f, center, k);
        CHECK(p.elements.size() >= previous);
        previous = p.elements.size();
        for (Index t = 0; t < f.num_triangles(); ++t) CHECK(p.contains(t) == (layers[t] >= 0 && layers[t] <= k));
    }
    CHECK(previous == static_cast<std::size_t>(f.num_triangles()));
}

TEST_CASE("locate", "[mesh]") {
    const auto m = unit_square_structured(4);
    for (Point2 p : {Point2{0.1, 0.05}, Point2{0.9, 0.95}, Point2{0.5, 0.5}, Point2{1.0, 1.0}}) {
        const Index t = m.locate(p);
        REQUIRE(t >= 0);
        for (double l : barycentric(m.triangle_vertices(t), p)) CHECK(l >= -1e-12);
    }
    CHECK(m.locate({1.5, 0.5}) == -1);
}

TEST_CASE("mesh files round trip", "[mesh]") {
    const auto m = lattice_octagon(6, 4, {1, 2, 0, 1});
    const auto path = temp_file("roundtrip.mesh");
    save_mesh(m, path);
    const auto r = load_mesh(path);
    CHECK(r.vertices() == m.vertices());
    CHECK(r.triangles() == m.triangles());
    CHECK(r.boundary_vertex() == m.boundary_vertex());
    std::filesystem::remove(path);
}

TEST_CASE("mesh file parsing", "[mesh]") {
    const auto path = temp_file("hand.mesh");
    {
        std::ofstream out(path);
        out << "4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0\n1\n2\n3\n";
    }
    const auto m = load_mesh(path);
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_triangles() == 2);
    CHECK(total_area(m) == Approx(1.0));

    {
        std::ofstream out(path);
        out << "4 3 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0\n1\n2\n3\n";
    }
    CHECK_THROWS_AS(load_mesh(path), InputError);
    {
        std::ofstream out(path);
        out << "4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 9\n0 2 3\n0\n1\n2\n3\n";
    }
    CHECK_THROWS_WITH(load_mesh(path), Catch::Matchers::ContainsSubstring("out of range"));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_mesh(temp_file("does_not_exist.mesh")), InputError);
}

TEST_CASE("shape regularity is finite and scale invariant", "[mesh]") {
    const auto m = unit_square_structured(4);
    const double c = m.shape_regularity();
    CHECK(std::isfinite(c));
    CHECK(refine_quadrisect(m).shape_regularity() == Approx(c));
}
