#include "fraclod/error.hpp"
#include "fraclod/fracture.hpp"
#include "fraclod/geometries.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

using namespace fraclod;
using Catch::Approx;

namespace {

// Chord of the line p + t d through the unit square (slab method).
std::array<Point2, 2> square_chord(Point2 p, Point2 d) {
    double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
    for (auto [pc, dc] : {std::pair{p.x, d.x}, std::pair{p.y, d.y}}) {
        if (dc == 0.0) continue;
        const double a = (0.0 - pc) / dc, b = (1.0 - pc) / dc;
        t0 = std::max(t0, std::min(a, b));
        t1 = std::min(t1, std::max(a, b));
    }
    return {p + t0 * d, p + t1 * d};
}

// Length of {y = c} inside a triangle.
double horizontal_chord(const TriangleVertices& t, double c) {
    std::vector<double> xs;
    for (int e = 0; e < 3; ++e) {
        const Point2 a = t[e], b = t[(e + 1) % 3];
        if ((a.y - c) * (b.y - c) < 0.0) xs.push_back(a.x + (c - a.y) / (b.y - a.y) * (b.x - a.x));
        else if (a.y == c) xs.push_back(a.x);
    }
    if (xs.size() < 2) return 0.0;
    return *std::max_element(xs.begin(), xs.end()) - *std::min_element(xs.begin(), xs.end());
}

double owned_length(const FractureTrace& trace, Index t) {
    double s = 0.0;
    for (Index p : trace.owned(t)) s += trace.pieces()[p].length();
    return s;
}

void check_pieces_inside(const TriMesh& mesh, const FractureTrace& trace) {
    for (const auto& p : trace.pieces()) {
        const auto tv = mesh.triangle_vertices(p.triangle);
        for (Point2 q : {p.a, p.b})
            for (double l : barycentric(tv, q)) CHECK(l >= -1e-12);
        CHECK(p.length() > 0.0);
        CHECK(std::abs((p.s1 - p.s0) - p.length()) <= 1e-12);
    }
}

}  // namespace

TEST_CASE("edge-aligned interface", "[fracture]") {
    const auto mesh = unit_square_structured(2);
    const auto trace = trace_fracture(mesh, gamma_vertical_half());
    CHECK(trace.union_of_edges());
    CHECK(trace.total_length() == Approx(1.0).epsilon(1e-14));
    for (const auto& p : trace.pieces()) {
        CHECK(p.on_edge);
        CHECK(p.neighbor >= 0);
        CHECK(p.triangle < p.neighbor);
    }
    check_pieces_inside(mesh, trace);
}

TEST_CASE("interface crossing triangle interiors", "[fracture]") {
    const auto mesh = unit_square_structured(2);
    const FractureNetwork net({{{0.0, 0.3}, {1.0, 0.3}}});
    const auto trace = trace_fracture(mesh, net);
    CHECK_FALSE(trace.union_of_edges());
    CHECK(trace.total_length() == Approx(1.0).epsilon(1e-14));
    Index crossed = 0;
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const double expected = horizontal_chord(mesh.triangle_vertices(t), 0.3);
        if (expected > 0.0) {
            ++crossed;
            CHECK(trace.owned(t).size() == 1);
            CHECK(owned_length(trace, t) == Approx(expected).epsilon(1e-12));
        } else {
            CHECK(trace.owned(t).empty());
        }
    }
    CHECK(crossed == 4);
    check_pieces_inside(mesh, trace);
}

TEST_CASE("random lines keep their length", "[fracture]") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> pos(0.1, 0.9), ang(0.0, std::numbers::pi);
    const auto mesh = unit_square_structured(7);
    for (int trial = 0; trial < 100; ++trial) {
        const double th = ang(rng);
        const auto chord = square_chord({pos(rng), pos(rng)}, {std::cos(th), std::sin(th)});
        const FractureNetwork net({{chord[0], chord[1]}});
        const auto trace = trace_fracture(mesh, net);
        CHECK(trace.total_length() == Approx(distance(chord[0], chord[1])).epsilon(1e-10));
        check_pieces_inside(mesh, trace);
    }
}

TEST_CASE("network outside the domain is rejected", "[fracture]") {
    const auto mesh = unit_square_structured(4);
    CHECK_THROWS_AS(trace_fracture(mesh, FractureNetwork({{{0.5, 0.5}, {1.5, 0.5}}})), InputError);
}

TEST_CASE("network validation", "[fracture]") {
    CHECK_THROWS_AS(FractureNetwork({{{0.2, 0.2}, {0.2, 0.2}}}), InputError);
    CHECK_THROWS_AS(FractureNetwork({{{0.2, 0.2}}}), InputError);
    // Crossing away from a shared chain vertex.
    CHECK_THROWS_AS(FractureNetwork({{{0.0, 0.5}, {1.0, 0.5}}, {{0.5, 0.0}, {0.5, 1.0}}}), InputError);

    const FractureNetwork cross({{{0.0, 0.5}, {0.5, 0.5}, {1.0, 0.5}}, {{0.5, 0.0}, {0.5, 0.5}, {0.5, 1.0}}});
    CHECK(cross.intersection_points().size() == 1);
    CHECK(cross.tip_points().empty());
    CHECK(cross.total_length() == Approx(2.0));
    CHECK(cross.segments().size() == 4);

    const FractureNetwork immersed({{{0.2, 0.2}, {0.4, 0.4}}});
    CHECK(immersed.tip_points().size() == 2);
    CHECK(immersed.intersection_points().empty());
}

TEST_CASE("built-in five-interface network", "[fracture]") {
    const auto net = five_interfaces_2e7();
    CHECK(net.num_polylines() == 5);
    CHECK(net.intersection_points().size() == 3);
    CHECK(net.tip_points().size() == 4);
    for (const auto& s : net.segments()) {
        const bool axis = s.a.x == s.b.x || s.a.y == s.b.y;
        CHECK(axis);
        CHECK(s.length() == Approx(1.0 / 64).epsilon(1e-14));
    }
    for (Index n : {16, 64, 128}) {
        const auto mesh = unit_square_structured(n);
        const auto trace = trace_fracture(mesh, net);
        CHECK(trace.union_of_edges() == (n >= 64));
        CHECK(trace.total_length() == Approx(net.total_length()).epsilon(1e-12));
        check_pieces_inside(mesh, trace);
    }
}

TEST_CASE("touching lists edge pieces of both neighbors", "[fracture]") {
    const auto mesh = unit_square_structured(4);
    const auto trace = trace_fracture(mesh, gamma_vertical_half());
    for (Index i = 0; i < static_cast<Index>(trace.pieces().size()); ++i) {
        const auto& p = trace.pieces()[i];
        const auto own = trace.touching(p.triangle);
        const auto nb = trace.touching(p.neighbor);
        CHECK(std::find(own.begin(), own.end(), i) != own.end());
        CHECK(std::find(nb.begin(), nb.end(), i) != nb.end());
        const auto nb_owned = trace.owned(p.neighbor);
        CHECK(std::find(nb_owned.begin(), nb_owned.end(), i) == nb_owned.end());
    }
}

TEST_CASE("fracture files round trip", "[fracture]") {
    const auto net = five_interfaces_2e7();
    const auto path = std::filesystem::temp_directory_path() / "fraclod_test_net.frac";
    save_fractures(net, path);
    const auto r = load_fractures(path);
    CHECK(r.polylines() == net.polylines());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_fractures(path), InputError);
}

TEST_CASE("layers of the two-interface mesh", "[fracture]") {
    const auto lm = two_layer_unstructured(7);
    CHECK(lm.network.num_polylines() == 2);
    const auto trace = trace_fracture(lm.mesh, lm.network);
    CHECK(trace.union_of_edges());
    CHECK(layer_of(lm.network, {0.01, 0.5}) == 0);
    CHECK(layer_of(lm.network, {0.99, 0.5}) == 2);
    CHECK(lm.mesh.num_vertices() == 256);
}
