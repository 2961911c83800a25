#include "fraclod/geometries.hpp"

#include "fraclod/coefficients.hpp"
#include "fraclod/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace fraclod {

FractureNetwork gamma_vertical_half() { return FractureNetwork({{{0.5, 0.0}, {0.5, 1.0}}}); }

namespace {

using GridPoint = std::pair<int, int>;

// Staircase of unit grid edges through the waypoints. Horizontal and
// vertical steps are interleaved so that the walk stays close to the
// straight line between consecutive waypoints. With `stop_at` the walk ends
// at the first vertex (after the start) contained in it.
std::vector<GridPoint> grid_walk(const std::vector<GridPoint>& waypoints, const std::set<GridPoint>* stop_at = nullptr) {
    std::vector<GridPoint> out{waypoints.front()};
    for (std::size_t w = 1; w < waypoints.size(); ++w) {
        auto [i, j] = out.back();
        const auto [ti, tj] = waypoints[w];
        const int nx = std::abs(ti - i), ny = std::abs(tj - j);
        const int sx = ti > i ? 1 : -1, sy = tj > j ? 1 : -1;
        int dx = 0, dy = 0;
        while (dx < nx || dy < ny) {
            // step in x while the x progress lags behind the y progress
            const bool step_x = dy == ny || (dx < nx && (2 * dx + 1) * ny <= (2 * dy + 1) * nx);
            if (step_x) ++dx, i += sx;
            else ++dy, j += sy;
            out.emplace_back(i, j);
            if (stop_at && stop_at->count(out.back())) return out;
        }
    }
    return out;
}

}  // namespace

FractureNetwork five_interfaces_2e7() {
    const auto c0 = grid_walk({{0, 24}, {12, 30}, {24, 26}, {36, 34}, {50, 29}, {64, 36}});
    const std::set<GridPoint> c0_vertices(c0.begin(), c0.end());
    const std::vector<std::vector<GridPoint>> walks{
        c0,
        grid_walk({{44, 0}, {40, 14}, {47, 40}}, &c0_vertices),  // ends on c0
        grid_walk({{21, 13}, {27, 40}, {22, 51}}),                // crosses c0, two tips
        grid_walk({{7, 0}, {16, 33}, {9, 64}}),                   // crosses c0
        grid_walk({{47, 45}, {55, 51}, {59, 59}}),                // immersed
    };

    std::set<std::pair<GridPoint, GridPoint>> edges;
    std::vector<std::vector<Point2>> polylines;
    for (const auto& walk : walks) {
        auto& pl = polylines.emplace_back();
        for (std::size_t s = 0; s < walk.size(); ++s) {
            pl.push_back({walk[s].first / 64.0, walk[s].second / 64.0});
            if (s == 0) continue;
            const auto e = std::minmax(walk[s - 1], walk[s]);
            if (!edges.insert(e).second) throw Error("built-in interfaces overlap");
        }
    }
    return FractureNetwork(std::move(polylines));
}

LayeredMesh two_layer_unstructured(std::uint64_t seed) {
    constexpr Index n = 15;
    constexpr double h = 1.0 / n;
    const auto id = [](Index i, Index j) { return j * (n + 1) + i; };

    std::vector<Point2> verts;
    std::vector<bool> boundary;
    for (Index j = 0; j <= n; ++j) {
        for (Index i = 0; i <= n; ++i) {
            const bool bx = i == 0 || i == n;
            const bool by = j == 0 || j == n;
            double x = i * h, y = j * h;
            if (!bx) x += cell_uniform(seed + 1, j, i, -0.12 * h, 0.12 * h);
            if (!by) y += cell_uniform(seed + 2, j, i, -0.12 * h, 0.12 * h);
            verts.push_back({x, y});
            boundary.push_back(bx || by);
        }
    }

    // Interface chains in grid coordinates; each has one diagonal step.
    std::vector<std::pair<Index, Index>> left, right;
    for (Index j = 0; j <= 6; ++j) left.emplace_back(5, j);
    for (Index j = 7; j <= n; ++j) left.emplace_back(6, j);
    for (Index j = 0; j <= 9; ++j) right.emplace_back(10, j);
    for (Index j = 10; j <= n; ++j) right.emplace_back(9, j);

    std::vector<std::array<Index, 3>> tris;
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            bool rising;  // diagonal from lower left to upper right
            if (i == 5 && j == 6) rising = true;
            else if (i == 9 && j == 9) rising = false;
            else rising = (cell_uniform(seed, j, i, 0.0, 1.0) < 0.5);
            const Index a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if (rising) {
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            } else {
                tris.push_back({a, b, d});
                tris.push_back({b, c, d});
            }
        }
    }

    LayeredMesh out{TriMesh(verts, std::move(tris), std::move(boundary)), {}};
    std::vector<std::vector<Point2>> polylines(2);
    for (auto [i, j] : left) polylines[0].push_back(verts[id(i, j)]);
    for (auto [i, j] : right) polylines[1].push_back(verts[id(i, j)]);
    out.network = FractureNetwork(std::move(polylines));
    return out;
}

Index layer_of(const FractureNetwork& network, Point2 p) {
    Index layer = 0;
    for (const auto& pl : network.polylines()) {
        int crossings = 0;
        for (std::size_t s = 0; s + 1 < pl.size(); ++s) {
            const Point2 a = pl[s], b = pl[s + 1];
            if ((a.y > p.y) == (b.y > p.y)) continue;
            const double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x < p.x) ++crossings;
        }
        layer += crossings % 2;
    }
    return layer;
}

const std::vector<std::string>& builtin_geometry_names() {
    static const std::vector<std::string> names{"none", "gamma_vertical_half", "five_interfaces_2e7",
                                                "two_layer_unstructured"};
    return names;
}

FractureNetwork builtin_network(const std::string& name) {
    if (name == "none") return FractureNetwork();
    if (name == "gamma_vertical_half") return gamma_vertical_half();
    if (name == "five_interfaces_2e7") return five_interfaces_2e7();
    if (name == "two_layer_unstructured") return two_layer_unstructured().network;
    throw InputError("unknown built-in geometry '" + name + "'");
}

}  // namespace fraclod
