#pragma once

#include "fraclod/mesh.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace fraclod {

/// Polyline fracture network Γ = ∪ Γ_i.
///
/// Intersections between polylines are never computed: they must appear as
/// shared chain vertices. Construction rejects zero-length segments and
/// polylines crossing away from shared vertices.
class FractureNetwork {
public:
    struct Segment {
        Index polyline;
        Index local;  // position inside the polyline
        Point2 a;
        Point2 b;
        double s0;  // arclength of `a` along its polyline
        double length() const { return distance(a, b); }
    };

    FractureNetwork() = default;
    /// `domain_lo`/`domain_hi` bound the (rectangular) domain; they decide
    /// which polyline endpoints are immersed tips.
    explicit FractureNetwork(std::vector<std::vector<Point2>> polylines, Point2 domain_lo = {0.0, 0.0},
                             Point2 domain_hi = {1.0, 1.0});

    const std::vector<std::vector<Point2>>& polylines() const { return polylines_; }
    Index num_polylines() const { return static_cast<Index>(polylines_.size()); }
    const std::vector<Segment>& segments() const { return segments_; }
    /// Points shared by two or more polylines.
    const std::vector<Point2>& intersection_points() const { return intersections_; }
    /// Polyline endpoints inside the domain not shared with another polyline.
    const std::vector<Point2>& tip_points() const { return tips_; }
    double total_length() const;
    bool empty() const { return polylines_.empty(); }

private:
    std::vector<std::vector<Point2>> polylines_;
    std::vector<Segment> segments_;
    std::vector<Point2> intersections_;
    std::vector<Point2> tips_;
};

/// Piece of a fracture segment inside one mesh triangle.
struct TracePiece {
    Point2 a;
    Point2 b;
    Index triangle;       // owning triangle
    Index neighbor = -1;  // other triangle sharing the piece when it lies on an edge
    bool on_edge = false;
    int edge = -1;  // local edge of the owner when on_edge
    Index polyline = 0;
    double s0 = 0.0;  // arclength coordinates along the polyline
    double s1 = 0.0;

    double length() const { return distance(a, b); }
};

/// Γ restricted to the triangles of a mesh.
///
/// Each piece is owned by exactly one triangle (the lower index when the
/// piece lies on an edge shared by two triangles), so summing over owned
/// pieces integrates over Γ exactly once. `touching(T)` also lists the
/// edge pieces owned by the neighbor and therefore describes Γ ∩ T for the
/// closed triangle T.
class FractureTrace {
public:
    FractureTrace() = default;
    FractureTrace(std::vector<TracePiece> pieces, Index num_triangles);

    const std::vector<TracePiece>& pieces() const { return pieces_; }
    std::span<const Index> owned(Index t) const;
    std::span<const Index> touching(Index t) const;
    /// Every piece coincides with a mesh edge.
    bool union_of_edges() const { return union_of_edges_; }
    double total_length() const;
    bool empty() const { return pieces_.empty(); }

private:
    std::vector<TracePiece> pieces_;
    std::vector<Index> owned_offsets_{0};
    std::vector<Index> owned_;
    std::vector<Index> touching_offsets_{0};
    std::vector<Index> touching_;
    bool union_of_edges_ = true;
};

/// Clips every fracture segment against the mesh triangles. Throws
/// InputError when part of the network lies outside the meshed domain.
FractureTrace trace_fracture(const TriMesh& mesh, const FractureNetwork& network);

FractureNetwork load_fractures(const std::filesystem::path& path);
void save_fractures(const FractureNetwork& network, const std::filesystem::path& path);

}  // namespace fraclod
