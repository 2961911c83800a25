#include "fraclod/fracture.hpp"

#include "fraclod/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace fraclod {

namespace {

bool close(Point2 a, Point2 b, double tol) { return distance(a, b) <= tol; }

// Proper or improper intersection of closed segments pq and rs.
bool segments_touch(Point2 p, Point2 q, Point2 r, Point2 s, double tol) {
    const auto orient = [](Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); };
    const auto on_segment = [tol](Point2 a, Point2 b, Point2 c) {
        // c collinear with ab (checked by caller): is it within the bounding box?
        return std::min(a.x, b.x) - tol <= c.x && c.x <= std::max(a.x, b.x) + tol &&
               std::min(a.y, b.y) - tol <= c.y && c.y <= std::max(a.y, b.y) + tol;
    };
    const double l1 = distance(p, q);
    const double l2 = distance(r, s);
    const double d1 = orient(r, s, p) / l2;
    const double d2 = orient(r, s, q) / l2;
    const double d3 = orient(p, q, r) / l1;
    const double d4 = orient(p, q, s) / l1;
    const auto sgn = [tol](double d) { return d > tol ? 1 : (d < -tol ? -1 : 0); };
    const int s1 = sgn(d1), s2 = sgn(d2), s3 = sgn(d3), s4 = sgn(d4);
    if (s1 * s2 < 0 && s3 * s4 < 0) return true;
    if (s1 == 0 && on_segment(r, s, p)) return true;
    if (s2 == 0 && on_segment(r, s, q)) return true;
    if (s3 == 0 && on_segment(p, q, r)) return true;
    if (s4 == 0 && on_segment(p, q, s)) return true;
    return false;
}

}  // namespace

FractureNetwork::FractureNetwork(std::vector<std::vector<Point2>> polylines, Point2 domain_lo, Point2 domain_hi)
    : polylines_(std::move(polylines)) {
    const double diam = distance(domain_lo, domain_hi);
    const double tol = 1e-12 * diam;
    for (std::size_t i = 0; i < polylines_.size(); ++i) {
        const auto& pl = polylines_[i];
        if (pl.size() < 2) throw InputError("fracture polyline " + std::to_string(i) + " needs at least two points");
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < pl.size(); ++j) {
            Segment seg{static_cast<Index>(i), static_cast<Index>(j), pl[j], pl[j + 1], s};
            if (!(seg.length() > tol))
                throw InputError("fracture polyline " + std::to_string(i) + ": segment " + std::to_string(j) +
                                 " has (near) zero length");
            s += seg.length();
            segments_.push_back(seg);
        }
    }

    // Two segments may only meet at a vertex they both carry.
    const double gtol = 1e-10 * diam;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        for (std::size_t j = i + 1; j < segments_.size(); ++j) {
            const auto& u = segments_[i];
            const auto& v = segments_[j];
            if (!segments_touch(u.a, u.b, v.a, v.b, gtol)) continue;
            const bool shared = close(u.a, v.a, gtol) || close(u.a, v.b, gtol) || close(u.b, v.a, gtol) ||
                                close(u.b, v.b, gtol);
            const bool adjacent = u.polyline == v.polyline && std::abs(u.local - v.local) == 1;
            bool ok = false;
            if (shared) {
                // A shared vertex is fine unless the segments also overlap collinearly.
                const Point2 du = u.b - u.a;
                const Point2 dv = v.b - v.a;
                const bool parallel = std::abs(cross(du, dv)) <= 1e-12 * u.length() * v.length();
                ok = !(parallel && dot(du, dv) != 0.0 &&
                       [&] {
                           // collinear overlap test: does one segment's far end fall inside the other?
                           const auto inside = [&](const Segment& s, Point2 p) {
                               const double t = dot(p - s.a, s.b - s.a) / (s.length() * s.length());
                               return t > 1e-10 && t < 1.0 - 1e-10 &&
                                      std::abs(cross(s.b - s.a, p - s.a)) / s.length() <= gtol;
                           };
                           return inside(u, v.a) || inside(u, v.b) || inside(v, u.a) || inside(v, u.b);
                       }());
            }
            if (!ok && !(adjacent && shared)) {
                throw InputError("fracture polylines " + std::to_string(u.polyline) + " and " +
                                 std::to_string(v.polyline) +
                                 " intersect away from a shared chain vertex (segments " + std::to_string(u.local) +
                                 ", " + std::to_string(v.local) + ")");
            }
        }
    }

    // Intersection points: chain vertices carried by at least two polylines.
    std::vector<std::pair<Point2, Index>> verts;
    for (std::size_t i = 0; i < polylines_.size(); ++i)
        for (const auto& p : polylines_[i]) verts.emplace_back(p, static_cast<Index>(i));
    for (std::size_t a = 0; a < verts.size(); ++a) {
        bool multi = false;
        for (std::size_t b = 0; b < verts.size(); ++b) {
            if (verts[b].second != verts[a].second && close(verts[a].first, verts[b].first, gtol)) multi = true;
        }
        if (!multi) continue;
        const bool known = std::any_of(intersections_.begin(), intersections_.end(),
                                       [&](Point2 q) { return close(q, verts[a].first, gtol); });
        if (!known) intersections_.push_back(verts[a].first);
    }

    const auto on_domain_boundary = [&](Point2 p) {
        return std::abs(p.x - domain_lo.x) <= gtol || std::abs(p.x - domain_hi.x) <= gtol ||
               std::abs(p.y - domain_lo.y) <= gtol || std::abs(p.y - domain_hi.y) <= gtol;
    };
    for (const auto& pl : polylines_) {
        for (Point2 end : {pl.front(), pl.back()}) {
            if (on_domain_boundary(end)) continue;
            const bool shared = std::any_of(intersections_.begin(), intersections_.end(),
                                            [&](Point2 q) { return close(q, end, gtol); });
            if (!shared) tips_.push_back(end);
        }
    }
}

double FractureNetwork::total_length() const {
    double s = 0.0;
    for (const auto& seg : segments_) s += seg.length();
    return s;
}

FractureTrace::FractureTrace(std::vector<TracePiece> pieces, Index num_triangles) : pieces_(std::move(pieces)) {
    owned_offsets_.assign(static_cast<std::size_t>(num_triangles) + 1, 0);
    touching_offsets_.assign(static_cast<std::size_t>(num_triangles) + 1, 0);
    for (const auto& p : pieces_) {
        if (p.triangle < 0 || p.triangle >= num_triangles) throw InputError("trace: piece triangle out of range");
        ++owned_offsets_[p.triangle + 1];
        ++touching_offsets_[p.triangle + 1];
        if (p.on_edge && p.neighbor >= 0) ++touching_offsets_[p.neighbor + 1];
        if (!p.on_edge) union_of_edges_ = false;
    }
    for (Index t = 0; t < num_triangles; ++t) {
        owned_offsets_[t + 1] += owned_offsets_[t];
        touching_offsets_[t + 1] += touching_offsets_[t];
    }
    owned_.resize(static_cast<std::size_t>(owned_offsets_.back()));
    touching_.resize(static_cast<std::size_t>(touching_offsets_.back()));
    std::vector<Index> on(owned_offsets_.begin(), owned_offsets_.end() - 1);
    std::vector<Index> tn(touching_offsets_.begin(), touching_offsets_.end() - 1);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        owned_[on[p.triangle]++] = static_cast<Index>(i);
        touching_[tn[p.triangle]++] = static_cast<Index>(i);
        if (p.on_edge && p.neighbor >= 0) touching_[tn[p.neighbor]++] = static_cast<Index>(i);
    }
    // touching lists in piece order
    for (std::size_t t = 0; t + 1 < touching_offsets_.size(); ++t)
        std::sort(touching_.begin() + touching_offsets_[t], touching_.begin() + touching_offsets_[t + 1]);
}

std::span<const Index> FractureTrace::owned(Index t) const {
    return std::span<const Index>(owned_).subspan(owned_offsets_[t], owned_offsets_[t + 1] - owned_offsets_[t]);
}

std::span<const Index> FractureTrace::touching(Index t) const {
    return std::span<const Index>(touching_).subspan(touching_offsets_[t],
                                                     touching_offsets_[t + 1] - touching_offsets_[t]);
}

double FractureTrace::total_length() const {
    double s = 0.0;
    for (const auto& p : pieces_) s += p.length();
    return s;
}

namespace {

// Uniform bucket grid over triangle bounding boxes.
class TriangleBuckets {
public:
    explicit TriangleBuckets(const TriMesh& mesh) {
        lo_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        Point2 hi{-lo_.x, -lo_.y};
        for (const auto& p : mesh.vertices()) {
            lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        n_ = std::max<Index>(1, static_cast<Index>(std::sqrt(static_cast<double>(mesh.num_triangles()) / 2.0)));
        cell_ = {std::max(hi.x - lo_.x, 1e-300) / n_, std::max(hi.y - lo_.y, 1e-300) / n_};
        buckets_.resize(static_cast<std::size_t>(n_ * n_));
        for (Index t = 0; t < mesh.num_triangles(); ++t) {
            const auto tv = mesh.triangle_vertices(t);
            Point2 a = tv[0], b = tv[0];
            for (const auto& p : tv) {
                a = {std::min(a.x, p.x), std::min(a.y, p.y)};
                b = {std::max(b.x, p.x), std::max(b.y, p.y)};
            }
            for_cells(a, b, [&](std::size_t c) { buckets_[c].push_back(t); });
        }
    }

    template <class F>
    void for_cells(Point2 a, Point2 b, F&& f) const {
        const auto ix = [&](double x) {
            return std::clamp<Index>(static_cast<Index>(std::floor((x - lo_.x) / cell_.x)), 0, n_ - 1);
        };
        const auto iy = [&](double y) {
            return std::clamp<Index>(static_cast<Index>(std::floor((y - lo_.y) / cell_.y)), 0, n_ - 1);
        };
        const double ex = 1e-9 * cell_.x, ey = 1e-9 * cell_.y;
        for (Index j = iy(a.y - ey); j <= iy(b.y + ey); ++j)
            for (Index i = ix(a.x - ex); i <= ix(b.x + ex); ++i) f(static_cast<std::size_t>(j * n_ + i));
    }

    std::vector<Index> candidates(Point2 p, Point2 q) const {
        std::vector<Index> out;
        const double len = distance(p, q);
        const double step = std::min(cell_.x, cell_.y);
        const int chunks = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int c = 0; c < chunks; ++c) {
            const Point2 u = p + (static_cast<double>(c) / chunks) * (q - p);
            const Point2 w = p + (static_cast<double>(c + 1) / chunks) * (q - p);
            for_cells({std::min(u.x, w.x), std::min(u.y, w.y)}, {std::max(u.x, w.x), std::max(u.y, w.y)},
                      [&](std::size_t cell) { out.insert(out.end(), buckets_[cell].begin(), buckets_[cell].end()); });
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    Point2 lo_;
    Point2 cell_;
    Index n_ = 1;
    std::vector<std::vector<Index>> buckets_;
};

}  // namespace

FractureTrace trace_fracture(const TriMesh& mesh, const FractureNetwork& network) {
    const TriangleBuckets buckets(mesh);
    std::vector<TracePiece> pieces;
    for (const auto& seg : network.segments()) {
        const Point2 p = seg.a;
        const Point2 q = seg.b;
        const double seg_len = seg.length();
        double traced = 0.0;
        for (Index t : buckets.candidates(p, q)) {
            const auto tv = mesh.triangle_vertices(t);
            const double tol = 1e-10 * diameter(tv);
            double t0 = 0.0, t1 = 1.0;
            int edge_on = -1;
            bool empty = false;
            for (int e = 0; e < 3 && !empty; ++e) {
                const Point2 va = tv[e];
                const Point2 vb = tv[(e + 1) % 3];
                const double el = distance(va, vb);
                const double d0 = cross(vb - va, p - va) / el;
                const double d1 = cross(vb - va, q - va) / el;
                if (std::abs(d0) <= tol && std::abs(d1) <= tol) {
                    edge_on = e;
                    continue;
                }
                // inside: d(t) = d0 + t (d1 - d0) >= 0
                const double dd = d1 - d0;
                if (dd == 0.0) {
                    if (d0 < 0.0) empty = true;
                } else {
                    const double tc = -d0 / dd;
                    if (dd > 0.0) t0 = std::max(t0, tc);
                    else t1 = std::min(t1, tc);
                }
                if (t1 <= t0) empty = true;
            }
            if (empty) continue;
            const double piece_len = (t1 - t0) * seg_len;
            if (!(piece_len > tol)) continue;
            TracePiece piece;
            piece.a = p + t0 * (q - p);
            piece.b = p + t1 * (q - p);
            piece.triangle = t;
            piece.polyline = seg.polyline;
            piece.s0 = seg.s0 + t0 * seg_len;
            piece.s1 = seg.s0 + t1 * seg_len;
            if (edge_on >= 0) {
                piece.on_edge = true;
                piece.edge = edge_on;
                piece.neighbor = mesh.neighbor(t, edge_on);
                if (piece.neighbor >= 0 && piece.neighbor < t) continue;  // owned by the neighbor
            }
            traced += piece_len;
            pieces.push_back(piece);
        }
        if (std::abs(traced - seg_len) > 1e-9 * seg_len)
            throw InputError("fracture polyline " + std::to_string(seg.polyline) + " segment " +
                             std::to_string(seg.local) + " leaves the meshed domain (traced length " +
                             std::to_string(traced) + " of " + std::to_string(seg_len) + ")");
    }
    return FractureTrace(std::move(pieces), mesh.num_triangles());
}

FractureNetwork load_fractures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("fracture file " + path.string() + ": cannot open");
    long long np = 0;
    if (!(in >> np) || np < 0) throw InputError("fracture file " + path.string() + ": malformed header");
    std::vector<std::vector<Point2>> polylines(static_cast<std::size_t>(np));
    for (auto& pl : polylines) {
        long long m = 0;
        if (!(in >> m) || m < 2) throw InputError("fracture file " + path.string() + ": bad polyline point count");
        pl.resize(static_cast<std::size_t>(m));
        for (auto& p : pl) {
            if (!(in >> p.x >> p.y)) throw InputError("fracture file " + path.string() + ": missing points");
        }
    }
    std::string rest;
    if (in >> rest) throw InputError("fracture file " + path.string() + ": unexpected trailing data");
    return FractureNetwork(std::move(polylines));
}

void save_fractures(const FractureNetwork& network, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("fracture file " + path.string() + ": cannot write");
    out << network.num_polylines() << '\n' << std::setprecision(17);
    for (const auto& pl : network.polylines()) {
        out << pl.size() << '\n';
        for (const auto& p : pl) out << p.x << ' ' << p.y << '\n';
    }
}

}  // namespace fraclod
