#include "fraclod/fem.hpp"

#include "fraclod/error.hpp"

#include <cmath>

namespace fraclod {

DofMap::DofMap(const TriMesh& mesh) {
    dof_of_vertex_.assign(static_cast<std::size_t>(mesh.num_vertices()), -1);
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.boundary_vertex()[v]) continue;
        dof_of_vertex_[v] = static_cast<Index>(free_.size());
        free_.push_back(v);
    }
}

Vector DofMap::restrict_to_dofs(std::span<const double> vertex_values) const {
    if (vertex_values.size() != dof_of_vertex_.size()) throw InputError("restrict_to_dofs: length mismatch");
    Vector out(free_.size());
    for (std::size_t d = 0; d < free_.size(); ++d) out[d] = vertex_values[free_[d]];
    return out;
}

Vector DofMap::extend_to_vertices(std::span<const double> dof_values) const {
    if (dof_values.size() != free_.size()) throw InputError("extend_to_vertices: length mismatch");
    Vector out(dof_of_vertex_.size(), 0.0);
    for (std::size_t d = 0; d < free_.size(); ++d) out[free_[d]] = dof_values[d];
    return out;
}

std::array<Point2, 3> p1_gradients(const TriangleVertices& t) {
    const double area = signed_area(t);
    if (!(area > 0.0)) throw InputError("degenerate or clockwise triangle");
    std::array<Point2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Point2 a = t[(i + 1) % 3];
        const Point2 b = t[(i + 2) % 3];
        g[i] = {(a.y - b.y) / (2.0 * area), (b.x - a.x) / (2.0 * area)};
    }
    return g;
}

Matrix3 local_p1_stiffness(const TriangleVertices& t, double a) {
    const auto g = p1_gradients(t);
    const double s = a * signed_area(t);
    Matrix3 k{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = s * dot(g[i], g[j]);
    return k;
}

Matrix3 local_p1_mass(const TriangleVertices& t, double b) {
    const double area = signed_area(t);
    if (!(area > 0.0)) throw InputError("degenerate or clockwise triangle");
    Matrix3 m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = b * area * (i == j ? 2.0 : 1.0) / 12.0;
    return m;
}

Matrix3 local_trace_stiffness(const TriangleVertices& t, Point2 p, Point2 q, double a_gamma) {
    const auto g = p1_gradients(t);
    const double len = distance(p, q);
    Matrix3 k{};
    if (len == 0.0) return k;
    const Point2 tau = (1.0 / len) * (q - p);
    std::array<double, 3> d{};
    for (int i = 0; i < 3; ++i) d[i] = dot(g[i], tau);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = a_gamma * len * d[i] * d[j];
    return k;
}

Matrix3 local_trace_mass(const TriangleVertices& t, Point2 p, Point2 q, double b_gamma) {
    const double len = distance(p, q);
    const auto lp = barycentric(t, p);
    const auto lq = barycentric(t, q);
    Matrix3 m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m[i][j] = b_gamma * len / 6.0 *
                      (2.0 * lp[i] * lp[j] + lp[i] * lq[j] + lq[i] * lp[j] + 2.0 * lq[i] * lq[j]);
    return m;
}

std::vector<double> element_coefficients(const TriMesh& mesh, const GridField& field) {
    std::vector<double> c(static_cast<std::size_t>(mesh.num_triangles()));
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto tv = mesh.triangle_vertices(t);
        c[t] = field.eval((1.0 / 3.0) * (tv[0] + tv[1] + tv[2]));
    }
    return c;
}

namespace {

void scatter(std::vector<Triplet>& out, const std::array<Index, 3>& ids, const Matrix3& m) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.push_back({ids[i], ids[j], m[i][j]});
}

constexpr double kGauss = 0.28867513459481288225;  // 1 / (2 sqrt 3)

}  // namespace

SparseMatrix assemble_bulk_stiffness(const TriMesh& mesh, std::span<const double> coefficients) {
    if (coefficients.size() != static_cast<std::size_t>(mesh.num_triangles()))
        throw InputError("assemble_bulk_stiffness: one coefficient per triangle required");
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        scatter(trip, mesh.triangle(t), local_p1_stiffness(mesh.triangle_vertices(t), coefficients[t]));
    return SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(trip));
}

SparseMatrix assemble_bulk_stiffness(const TriMesh& mesh, const GridField& field) {
    return assemble_bulk_stiffness(mesh, element_coefficients(mesh, field));
}

SparseMatrix assemble_interface_stiffness(const TriMesh& mesh, const FractureTrace& trace, const InterfaceData& iface) {
    std::vector<Triplet> trip;
    for (const auto& p : trace.pieces())
        scatter(trip, mesh.triangle(p.triangle),
                local_trace_stiffness(mesh.triangle_vertices(p.triangle), p.a, p.b, iface[p.polyline].a_gamma));
    return SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(trip));
}

SparseMatrix assemble_mass(const TriMesh& mesh, double b) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        scatter(trip, mesh.triangle(t), local_p1_mass(mesh.triangle_vertices(t), b));
    return SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(trip));
}

SparseMatrix assemble_interface_mass(const TriMesh& mesh, const FractureTrace& trace, const InterfaceData& iface) {
    std::vector<Triplet> trip;
    for (const auto& p : trace.pieces()) {
        const double b = iface[p.polyline].b_gamma;
        if (b == 0.0) continue;
        scatter(trip, mesh.triangle(p.triangle), local_trace_mass(mesh.triangle_vertices(p.triangle), p.a, p.b, b));
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(trip));
}

Vector assemble_load(const TriMesh& mesh, const ScalarField& f, const FractureTrace& trace, const InterfaceData& iface) {
    Vector load(static_cast<std::size_t>(mesh.num_vertices()), 0.0);
    if (!f.is_zero()) {
        for (Index t = 0; t < mesh.num_triangles(); ++t) {
            const auto tv = mesh.triangle_vertices(t);
            const auto& ids = mesh.triangle(t);
            const double area = signed_area(tv);
            if (f.kind() == ScalarField::Kind::formula) {
                // edge-midpoint rule; the midpoint of edge (i, i+1) sees φ_i = φ_{i+1} = 1/2
                std::array<double, 3> fm{};
                for (int e = 0; e < 3; ++e) fm[e] = f(0.5 * (tv[e] + tv[(e + 1) % 3]));
                for (int i = 0; i < 3; ++i) load[ids[i]] += area / 3.0 * 0.5 * (fm[i] + fm[(i + 2) % 3]);
            } else {
                const double value = f((1.0 / 3.0) * (tv[0] + tv[1] + tv[2]));
                for (int i = 0; i < 3; ++i) load[ids[i]] += value * area / 3.0;
            }
        }
    }
    for (const auto& p : trace.pieces()) {
        const ScalarField& fg = iface[p.polyline].f_gamma;
        if (fg.is_zero()) continue;
        const auto tv = mesh.triangle_vertices(p.triangle);
        const auto& ids = mesh.triangle(p.triangle);
        const double len = p.length();
        if (fg.kind() == ScalarField::Kind::formula) {
            for (double xi : {0.5 - kGauss, 0.5 + kGauss}) {
                const Point2 x = p.a + xi * (p.b - p.a);
                const auto lam = barycentric(tv, x);
                const double w = 0.5 * len * fg(x);
                for (int i = 0; i < 3; ++i) load[ids[i]] += w * lam[i];
            }
        } else {
            const double value = fg(0.5 * (p.a + p.b));
            const auto la = barycentric(tv, p.a);
            const auto lb = barycentric(tv, p.b);
            for (int i = 0; i < 3; ++i) load[ids[i]] += value * len * 0.5 * (la[i] + lb[i]);
        }
    }
    return load;
}

Matrix3 AssembledForms::element_matrix(Index t) const {
    const auto tv = mesh->triangle_vertices(t);
    Matrix3 k = local_p1_stiffness(tv, coefficients[t]);
    for (Index pi : trace.owned(t)) {
        const auto& p = trace.pieces()[pi];
        const Matrix3 kt = local_trace_stiffness(tv, p.a, p.b, iface[p.polyline].a_gamma);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) k[i][j] += kt[i][j];
    }
    return k;
}

AssembledForms assemble_forms(std::shared_ptr<const TriMesh> mesh, const ProblemData& problem, bool with_mass) {
    if (!mesh) throw InputError("assemble_forms: no mesh");
    AssembledForms forms;
    forms.mesh = mesh;
    forms.dofs = DofMap(*mesh);
    forms.trace = problem.network.empty() ? FractureTrace({}, mesh->num_triangles())
                                          : trace_fracture(*mesh, problem.network);
    forms.iface = problem.iface;
    if (forms.iface.size() < problem.network.num_polylines())
        throw InputError("interface data missing for some fracture polylines");
    forms.coefficients = element_coefficients(*mesh, problem.a);
    const auto& free = forms.dofs.free_vertices();
    forms.k_bulk = assemble_bulk_stiffness(*mesh, forms.coefficients).submatrix(free, free);
    forms.k_iface = assemble_interface_stiffness(*mesh, forms.trace, forms.iface).submatrix(free, free);
    if (with_mass) {
        forms.m_bulk = assemble_mass(*mesh, problem.source.b).submatrix(free, free);
        forms.m_iface = assemble_interface_mass(*mesh, forms.trace, forms.iface).submatrix(free, free);
    } else {
        forms.m_bulk = SparseMatrix::zero(forms.dofs.num_dofs(), forms.dofs.num_dofs());
        forms.m_iface = SparseMatrix::zero(forms.dofs.num_dofs(), forms.dofs.num_dofs());
    }
    forms.f = forms.dofs.restrict_to_dofs(assemble_load(*mesh, problem.source.f, forms.trace, forms.iface));
    return forms;
}

Vector solve_reference(const AssembledForms& forms) { return solve_spd(forms.K(), forms.f); }

double relative_energy_error(std::span<const double> u_ref, std::span<const double> u_other, const SparseMatrix& k) {
    if (u_ref.size() != u_other.size()) throw InputError("relative_energy_error: length mismatch");
    const double ref = energy_norm(k, u_ref);
    if (ref == 0.0) throw NumericalError("relative_energy_error: reference has zero energy");
    Vector diff(u_ref.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u_ref[i] - u_other[i];
    return energy_norm(k, diff) / ref;
}

std::vector<double> element_energies(const AssembledForms& forms, std::span<const double> vertex_values) {
    if (vertex_values.size() != static_cast<std::size_t>(forms.mesh->num_vertices()))
        throw InputError("element_energies: expected one value per vertex");
    std::vector<double> e(static_cast<std::size_t>(forms.mesh->num_triangles()));
    for (Index t = 0; t < forms.mesh->num_triangles(); ++t) {
        const Matrix3 k = forms.element_matrix(t);
        const auto& ids = forms.mesh->triangle(t);
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += vertex_values[ids[i]] * k[i][j] * vertex_values[ids[j]];
        e[t] = s;
    }
    return e;
}

}  // namespace fraclod
