#include "fraclod/interpolation.hpp"

#include "fraclod/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace fraclod {

double CircularArc::radius() const { return std::hypot(right.x, center_y - right.y); }

double CircularArc::half_angle() const { return std::atan2(right.x, center_y - right.y); }

Point2 CircularArc::at(double theta) const {
    const double r = radius();
    // a - r without cancellation: (a^2 - r^2) / (a + r)
    const double lowest = (2.0 * center_y * right.y - right.x * right.x - right.y * right.y) / (center_y + r);
    const double s = std::sin(0.5 * theta);
    return {r * std::sin(theta), lowest + 2.0 * r * s * s};
}

IntegrationDomain IntegrationDomain::whole(const TriangleVertices& t) {
    IntegrationDomain d;
    d.kind = Kind::triangle;
    d.triangle = t;
    return d;
}

IntegrationDomain IntegrationDomain::trace(const TriangleVertices& t, std::vector<std::array<Point2, 2>> segments) {
    IntegrationDomain d;
    d.kind = Kind::segments;
    d.triangle = t;
    d.segments = std::move(segments);
    return d;
}

IntegrationDomain IntegrationDomain::along_arc(const TriangleVertices& t, const CircularArc& arc) {
    if (!(arc.center_y > arc.right.y) || arc.right.x <= 0.0 || arc.left.x != -arc.right.x ||
        arc.left.y != arc.right.y)
        throw InputError("arc: expected symmetric endpoints (-x, y), (x, y) below the center");
    const double tol = 1e-12;
    for (Point2 p : {arc.left, arc.right, arc.at(0.0)}) {
        const auto l = barycentric(t, p);
        if (*std::min_element(l.begin(), l.end()) < -tol) throw InputError("arc does not lie inside the triangle");
    }
    IntegrationDomain d;
    d.kind = Kind::arc;
    d.triangle = t;
    d.arc = arc;
    return d;
}

double IntegrationDomain::measure() const {
    switch (kind) {
        case Kind::triangle: return std::abs(signed_area(triangle));
        case Kind::segments: {
            double s = 0.0;
            for (const auto& seg : segments) s += distance(seg[0], seg[1]);
            return s;
        }
        case Kind::arc: return arc.length();
    }
    return 0.0;
}

Eigen::Matrix3d sigma_mass_matrix(const IntegrationDomain& domain) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    const auto& t = domain.triangle;
    switch (domain.kind) {
        case IntegrationDomain::Kind::triangle: {
            const double area = std::abs(signed_area(t));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) m(i, j) = area * (i == j ? 2.0 : 1.0) / 12.0;
            break;
        }
        case IntegrationDomain::Kind::segments: {
            for (const auto& seg : domain.segments) {
                const double len = distance(seg[0], seg[1]);
                const auto la = barycentric(t, seg[0]);
                const auto lb = barycentric(t, seg[1]);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        m(i, j) += len / 6.0 *
                                   (2.0 * la[i] * la[j] + la[i] * lb[j] + lb[i] * la[j] + 2.0 * lb[i] * lb[j]);
            }
            break;
        }
        case IntegrationDomain::Kind::arc: {
            using boost::math::quadrature::gauss_kronrod;
            const double r = domain.arc.radius();
            const double th = domain.arc.half_angle();
            for (int i = 0; i < 3; ++i) {
                for (int j = i; j < 3; ++j) {
                    const auto f = [&](double theta) {
                        const auto l = barycentric(t, domain.arc.at(theta));
                        return l[i] * l[j] * r;
                    };
                    // λ_i λ_j is a trigonometric polynomial of degree two in θ, so
                    // one 31-point rule is exact up to rounding
                    m(i, j) = m(j, i) = gauss_kronrod<double, 31>::integrate(f, -th, th, 0, 0.0);
                }
            }
            break;
        }
    }
    return m;
}

DualBasis dual_basis(int node, const Eigen::Matrix3d& mass) {
    if (node < 0 || node > 2) throw InputError("dual_basis: local node must be 0, 1 or 2");
    DualBasis db;
    db.node = node;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(mass);
    const Eigen::Vector3d lam = es.eigenvalues();
    const Eigen::Matrix3d v = es.eigenvectors();
    const double lmax = lam.cwiseAbs().maxCoeff();
    if (!(lmax > 0.0)) return db;
    bool dropped = false;
    for (int k = 0; k < 3; ++k) {
        if (lam(k) <= 1e-12 * lmax) {
            dropped = true;
            if (std::abs(v(node, k)) > 1e-8) return db;  // e_N has a component in the kernel
        }
    }
    const auto pinv = [&](const Eigen::Vector3d& b) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k)
            if (lam(k) > 1e-12 * lmax) x += v.col(k) * (v.col(k).dot(b) / lam(k));
        return x;
    };
    // residual e_N - M c accumulated in extended precision
    const auto residual = [&](const Eigen::Vector3d& c) {
        Eigen::Vector3d r;
        for (int i = 0; i < 3; ++i) {
            long double s = (i == node) ? 1.0L : 0.0L;
            for (int j = 0; j < 3; ++j) s -= static_cast<long double>(mass(i, j)) * c(j);
            r(i) = static_cast<double>(s);
        }
        return r;
    };
    Eigen::Vector3d c = pinv(Eigen::Vector3d::Unit(node));
    for (int it = 0; it < 2; ++it) c += pinv(residual(c));
    db.status = dropped ? DualStatus::min_norm : DualStatus::unique;
    for (int i = 0; i < 3; ++i) db.coeffs[i] = c(i);
    db.norm = std::sqrt(std::max(0.0, c.dot(mass * c)));
    db.residual = residual(c).cwiseAbs().maxCoeff();
    return db;
}

DualBasis dual_basis(int node, const IntegrationDomain& domain) { return dual_basis(node, sigma_mass_matrix(domain)); }

IntegrationDomain fracture_domain(const TriMesh& coarse, const FractureTrace& coarse_trace, Index t) {
    std::vector<std::array<Point2, 2>> segs;
    for (Index pi : coarse_trace.touching(t)) {
        const auto& p = coarse_trace.pieces()[pi];
        segs.push_back({p.a, p.b});
    }
    return IntegrationDomain::trace(coarse.triangle_vertices(t), std::move(segs));
}

namespace {

double indicator_from(const TriangleVertices& tv, const IntegrationDomain& domain, const Eigen::Matrix3d& mass,
                      int node) {
    if (domain.segments.empty()) return std::numeric_limits<double>::infinity();
    const DualBasis db = dual_basis(node, mass);
    if (db.status == DualStatus::no_solution) return std::numeric_limits<double>::infinity();
    return std::sqrt(diameter(tv)) * db.norm;
}

}  // namespace

double indicator(const TriMesh& coarse, const FractureTrace& coarse_trace, Index t, int node) {
    const auto domain = fracture_domain(coarse, coarse_trace, t);
    return indicator_from(domain.triangle, domain, sigma_mass_matrix(domain), node);
}

Index NodeSets::num_fracture_nodes() const {
    return static_cast<Index>(std::count_if(fracture_triangles.begin(), fracture_triangles.end(),
                                            [](const auto& s) { return !s.empty(); }));
}

NodeSets classify(const TriMesh& coarse, const FractureTrace& coarse_trace, double sigma,
                  InterpolationVariant variant) {
    if (!(sigma > 0.0)) throw InputError("classify: threshold must be positive");
    NodeSets ns;
    ns.variant = variant;
    ns.sigma = sigma;
    ns.fracture_triangles.assign(static_cast<std::size_t>(coarse.num_vertices()), {});
    if (variant == InterpolationVariant::element_based) return ns;
    for (Index t = 0; t < coarse.num_triangles(); ++t) {
        if (coarse_trace.touching(t).empty()) continue;
        const auto domain = fracture_domain(coarse, coarse_trace, t);
        const Eigen::Matrix3d mass = sigma_mass_matrix(domain);
        for (int i = 0; i < 3; ++i) {
            const Index v = coarse.triangle(t)[i];
            if (coarse.boundary_vertex()[v]) continue;
            if (indicator_from(domain.triangle, domain, mass, i) < sigma) ns.fracture_triangles[v].push_back(t);
        }
    }
    return ns;
}

std::vector<std::vector<Index>> edge_rule_sets(const TriMesh& coarse, const FractureTrace& coarse_trace) {
    if (!coarse_trace.union_of_edges()) throw InputError("edge rule needs a fracture made of mesh edges");
    std::vector<std::vector<Index>> sets(static_cast<std::size_t>(coarse.num_vertices()));
    for (const auto& p : coarse_trace.pieces()) {
        const auto& tri = coarse.triangle(p.triangle);
        for (Index v : {tri[p.edge], tri[(p.edge + 1) % 3]}) {
            if (coarse.boundary_vertex()[v]) continue;
            sets[v].push_back(p.triangle);
            if (p.neighbor >= 0) sets[v].push_back(p.neighbor);
        }
    }
    for (auto& s : sets) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    return sets;
}

SparseMatrix prolongation_matrix(const TriMesh& fine, const TriMesh& coarse) {
    if (fine.level() <= coarse.level() || !fine.parent()) {
        ancestor_elements(fine, coarse);  // throws unless the meshes coincide
        return SparseMatrix::identity(fine.num_vertices());
    }
    const TriMesh& parent = *fine.parent();
    std::vector<Triplet> trip;
    std::vector<char> done(static_cast<std::size_t>(fine.num_vertices()), 0);
    for (Index v = 0; v < parent.num_vertices(); ++v) {
        trip.push_back({v, v, 1.0});
        done[v] = 1;
    }
    for (Index t = 0; t < parent.num_triangles(); ++t) {
        const auto& pv = parent.triangle(t);
        const auto& mid = fine.triangle(4 * t + 3);  // (m_ab, m_bc, m_ca)
        for (int e = 0; e < 3; ++e) {
            const Index m = mid[e];
            if (done[m]) continue;
            done[m] = 1;
            trip.push_back({m, pv[e], 0.5});
            trip.push_back({m, pv[(e + 1) % 3], 0.5});
        }
    }
    const SparseMatrix r = SparseMatrix::from_triplets(fine.num_vertices(), parent.num_vertices(), std::move(trip));
    return r * prolongation_matrix(parent, coarse);
}

namespace {

// Sparse row accumulator over fine vertices.
class RowBuilder {
public:
    explicit RowBuilder(Index n) : value_(static_cast<std::size_t>(n), 0.0), seen_(static_cast<std::size_t>(n), 0) {}

    void add(Index j, double v) {
        if (!seen_[j]) {
            seen_[j] = 1;
            touched_.push_back(j);
        }
        value_[j] += v;
    }

    void flush(Index row, double scale, const DofMap& fine_dofs, std::vector<Triplet>& out) {
        std::sort(touched_.begin(), touched_.end());
        double rowmax = 0.0;
        for (Index j : touched_)
            if (fine_dofs.dof(j) >= 0) rowmax = std::max(rowmax, std::abs(value_[j]));
        for (Index j : touched_) {
            const Index d = fine_dofs.dof(j);
            if (d >= 0 && std::abs(value_[j]) > 1e-14 * rowmax) out.push_back({row, d, scale * value_[j]});
            value_[j] = 0.0;
            seen_[j] = 0;
        }
        touched_.clear();
    }

private:
    std::vector<double> value_;
    std::vector<char> seen_;
    std::vector<Index> touched_;
};

}  // namespace

InterpolationOperator assemble_interpolation(std::shared_ptr<const TriMesh> fine, std::shared_ptr<const TriMesh> coarse,
                                             const NodeSets& nodes, const FractureTrace& coarse_trace,
                                             const FractureTrace& fine_trace) {
    InterpolationOperator op;
    op.fine = fine;
    op.coarse = coarse;
    op.coarse_dofs = DofMap(*coarse);
    op.fine_dofs = DofMap(*fine);
    op.ancestors = ancestor_elements(*fine, *coarse);
    op.coarse_trace = coarse_trace;
    op.nodes = nodes;
    if (nodes.fracture_triangles.size() != static_cast<std::size_t>(coarse->num_vertices()))
        throw InputError("assemble_interpolation: node sets belong to another mesh");

    // fine triangles per coarse triangle
    std::vector<std::vector<Index>> children(static_cast<std::size_t>(coarse->num_triangles()));
    for (Index t = 0; t < fine->num_triangles(); ++t) children[op.ancestors[t]].push_back(t);

    // fine trace pieces per polyline, ordered by arclength midpoint
    std::vector<std::vector<std::pair<double, Index>>> by_polyline;
    for (std::size_t i = 0; i < fine_trace.pieces().size(); ++i) {
        const auto& p = fine_trace.pieces()[i];
        if (static_cast<std::size_t>(p.polyline) >= by_polyline.size()) by_polyline.resize(p.polyline + 1);
        by_polyline[p.polyline].emplace_back(0.5 * (p.s0 + p.s1), static_cast<Index>(i));
    }
    for (auto& v : by_polyline) std::sort(v.begin(), v.end());

    RowBuilder row(fine->num_vertices());
    std::vector<Triplet> trip;
    for (Index dof = 0; dof < op.coarse_dofs.num_dofs(); ++dof) {
        const Index n = op.coarse_dofs.vertex(dof);
        const auto& tgamma = nodes.fracture_triangles[n];
        if (!tgamma.empty()) {
            for (Index T : tgamma) {
                const auto tv = coarse->triangle_vertices(T);
                const int local = static_cast<int>(
                    std::find(coarse->triangle(T).begin(), coarse->triangle(T).end(), n) - coarse->triangle(T).begin());
                const DualBasis psi = dual_basis(local, fracture_domain(*coarse, coarse_trace, T));
                if (psi.status == DualStatus::no_solution)
                    throw NumericalError("interpolation: selected fracture domain of node " + std::to_string(n) +
                                         " in triangle " + std::to_string(T) + " has no dual basis");
                for (Index pi : coarse_trace.touching(T)) {
                    const auto& sigma = coarse_trace.pieces()[pi];
                    if (static_cast<std::size_t>(sigma.polyline) >= by_polyline.size())
                        throw NumericalError("interpolation: fine trace misses a polyline");
                    const auto& list = by_polyline[sigma.polyline];
                    auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(sigma.s0, Index{-1}));
                    double covered = 0.0;
                    for (; it != list.end() && it->first < sigma.s1; ++it) {
                        const auto& fp = fine_trace.pieces()[it->second];
                        const auto ftv = fine->triangle_vertices(fp.triangle);
                        const auto& fids = fine->triangle(fp.triangle);
                        const double len = fp.length();
                        covered += len;
                        const double pa = psi.eval(barycentric(tv, fp.a));
                        const double pb = psi.eval(barycentric(tv, fp.b));
                        const auto la = barycentric(ftv, fp.a);
                        const auto lb = barycentric(ftv, fp.b);
                        for (int j = 0; j < 3; ++j)
                            row.add(fids[j], len / 6.0 * (2.0 * pa * la[j] + pa * lb[j] + pb * la[j] + 2.0 * pb * lb[j]));
                    }
                    if (std::abs(covered - sigma.length()) > 1e-9 * sigma.length())
                        throw NumericalError("interpolation: fine trace does not refine the coarse trace");
                }
            }
            row.flush(dof, 1.0 / static_cast<double>(tgamma.size()), op.fine_dofs, trip);
        } else {
            const auto tris = coarse->vertex_triangles(n);
            for (Index T : tris) {
                const auto tv = coarse->triangle_vertices(T);
                const int local = static_cast<int>(
                    std::find(coarse->triangle(T).begin(), coarse->triangle(T).end(), n) - coarse->triangle(T).begin());
                const DualBasis psi = dual_basis(local, IntegrationDomain::whole(tv));
                for (Index t : children[T]) {
                    const auto ftv = fine->triangle_vertices(t);
                    const auto& fids = fine->triangle(t);
                    const double area = signed_area(ftv);
                    std::array<double, 3> pv{};
                    for (int b = 0; b < 3; ++b) pv[b] = psi.eval(barycentric(tv, ftv[b]));
                    const double sum = pv[0] + pv[1] + pv[2];
                    for (int a = 0; a < 3; ++a) row.add(fids[a], area / 12.0 * (sum + pv[a]));
                }
            }
            row.flush(dof, 1.0 / static_cast<double>(tris.size()), op.fine_dofs, trip);
        }
    }
    op.matrix = SparseMatrix::from_triplets(op.coarse_dofs.num_dofs(), op.fine_dofs.num_dofs(), std::move(trip));
    op.prolongation = prolongation_matrix(*fine, *coarse)
                          .submatrix(op.fine_dofs.free_vertices(), op.coarse_dofs.free_vertices());
    return op;
}

InterpolationOperator build_interpolation(const AssembledForms& fine_forms, std::shared_ptr<const TriMesh> coarse,
                                          const FractureNetwork& network, double sigma,
                                          InterpolationVariant variant) {
    const FractureTrace coarse_trace =
        network.empty() ? FractureTrace({}, coarse->num_triangles()) : trace_fracture(*coarse, network);
    const NodeSets nodes = classify(*coarse, coarse_trace, sigma, variant);
    return assemble_interpolation(fine_forms.mesh, coarse, nodes, coarse_trace, fine_forms.trace);
}

}  // namespace fraclod
