#pragma once

#include "fraclod/sparse.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace fraclod {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double distance(Point2 a, Point2 b);

using TriangleVertices = std::array<Point2, 3>;

/// Signed area, positive for counter-clockwise vertex order.
double signed_area(const TriangleVertices& t);
/// Longest edge.
double diameter(const TriangleVertices& t);
/// Diameter of the inscribed circle, 4 |T| / perimeter.
double inscribed_diameter(const TriangleVertices& t);
/// Barycentric coordinates of p with respect to t.
std::array<double, 3> barycentric(const TriangleVertices& t, Point2 p);

/// Conforming triangulation of a polygonal domain.
///
/// Triangles are counter-clockwise with positive area. A mesh produced by
/// refine_quadrisect() keeps the parent's vertices as its first vertices
/// and records the parent triangle of every child in parent_element().
class TriMesh {
public:
    TriMesh() = default;
    /// Validates orientation, area and conformity; throws InputError.
    TriMesh(std::vector<Point2> vertices, std::vector<std::array<Index, 3>> triangles,
            std::vector<bool> boundary_vertex);

    Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }

    const std::vector<Point2>& vertices() const { return vertices_; }
    const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
    const std::vector<bool>& boundary_vertex() const { return boundary_; }
    Point2 vertex(Index v) const { return vertices_[v]; }
    const std::array<Index, 3>& triangle(Index t) const { return triangles_[t]; }
    TriangleVertices triangle_vertices(Index t) const;

    int level() const { return level_; }
    const std::shared_ptr<const TriMesh>& parent() const { return parent_; }
    const std::vector<Index>& parent_element() const { return parent_element_; }

    /// Triangles incident to a vertex, ascending.
    std::span<const Index> vertex_triangles(Index v) const;
    /// Neighbor across local edge e (edge e joins local vertices e and e+1), or -1.
    Index neighbor(Index t, int e) const { return neighbors_[t][e]; }

    /// max_T diam(T)
    double mesh_size() const;
    /// max(max_T H/d_T, max_{T,T'} d_T'/d_T)
    double shape_regularity() const;
    double min_angle() const;
    Index num_edges() const { return num_edges_; }

    /// Index of a triangle containing p (within relative tolerance), or -1.
    Index locate(Point2 p) const;

private:
    friend TriMesh refine_quadrisect(const TriMesh& mesh);

    void build_topology();

    std::vector<Point2> vertices_;
    std::vector<std::array<Index, 3>> triangles_;
    std::vector<bool> boundary_;
    int level_ = 0;
    std::shared_ptr<const TriMesh> parent_;
    std::vector<Index> parent_element_;

    std::vector<Index> vt_offsets_;
    std::vector<Index> vt_triangles_;
    std::vector<std::array<Index, 3>> neighbors_;
    Index num_edges_ = 0;
};

/// 2 n^2 right triangles on the unit square (diagonals from lower left to
/// upper right of every cell).
TriMesh unit_square_structured(Index n);

/// Red refinement: every triangle is split into four similar triangles using
/// the edge midpoints.
TriMesh refine_quadrisect(const TriMesh& mesh);

/// For every triangle of `fine`, the triangle of `coarse` containing it.
/// `fine` must be obtained from `coarse` by repeated quadrisection (or be
/// the same mesh).
std::vector<Index> ancestor_elements(const TriMesh& fine, const TriMesh& coarse);

/// U^k applied to a set of triangles, using vertex-sharing adjacency.
struct Patch {
    std::vector<Index> center;
    Index k = 0;
    std::vector<Index> elements;  // ascending

    bool contains(Index t) const;
};

Patch patch(const TriMesh& mesh, Index t, Index k);
Patch patch(const TriMesh& mesh, std::span<const Index> center, Index k);

/// Layer index of every triangle: 0 for the center set, m for
/// U^m \ U^{m-1}; unreachable triangles get -1.
std::vector<Index> patch_layers(const TriMesh& mesh, std::span<const Index> center);

TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace fraclod
