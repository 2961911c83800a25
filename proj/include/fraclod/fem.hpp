#pragma once

#include "fraclod/coefficients.hpp"
#include "fraclod/fracture.hpp"
#include "fraclod/mesh.hpp"
#include "fraclod/sparse.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace fraclod {

/// Free (non-boundary) vertices of a mesh; homogeneous Dirichlet elsewhere.
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(const TriMesh& mesh);

    Index num_dofs() const { return static_cast<Index>(free_.size()); }
    Index num_vertices() const { return static_cast<Index>(dof_of_vertex_.size()); }
    /// Dof of a vertex, or -1 for a boundary vertex.
    Index dof(Index vertex) const { return dof_of_vertex_[vertex]; }
    Index vertex(Index dof) const { return free_[dof]; }
    const std::vector<Index>& free_vertices() const { return free_; }

    Vector restrict_to_dofs(std::span<const double> vertex_values) const;
    /// Vertex values with zeros on the boundary.
    Vector extend_to_vertices(std::span<const double> dof_values) const;

private:
    std::vector<Index> free_;
    std::vector<Index> dof_of_vertex_;
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Constant gradients of the three P1 basis functions.
std::array<Point2, 3> p1_gradients(const TriangleVertices& t);
Matrix3 local_p1_stiffness(const TriangleVertices& t, double a);
Matrix3 local_p1_mass(const TriangleVertices& t, double b);
/// a_gamma ∫_σ ∂_τ φ_i ∂_τ φ_j over the segment σ = [p, q] inside t.
Matrix3 local_trace_stiffness(const TriangleVertices& t, Point2 p, Point2 q, double a_gamma);
/// b_gamma ∫_σ φ_i φ_j over σ = [p, q].
Matrix3 local_trace_mass(const TriangleVertices& t, Point2 p, Point2 q, double b_gamma);

/// Field value at every triangle centroid.
std::vector<double> element_coefficients(const TriMesh& mesh, const GridField& field);

// Global assembly over all vertices (boundary rows included).
SparseMatrix assemble_bulk_stiffness(const TriMesh& mesh, const GridField& field);
SparseMatrix assemble_bulk_stiffness(const TriMesh& mesh, std::span<const double> coefficients);
SparseMatrix assemble_interface_stiffness(const TriMesh& mesh, const FractureTrace& trace, const InterfaceData& iface);
SparseMatrix assemble_mass(const TriMesh& mesh, double b);
SparseMatrix assemble_interface_mass(const TriMesh& mesh, const FractureTrace& trace, const InterfaceData& iface);
Vector assemble_load(const TriMesh& mesh, const ScalarField& f, const FractureTrace& trace, const InterfaceData& iface);

/// Fine-scale problem description shared by the drivers.
struct ProblemData {
    GridField a = GridField::constant(1.0);
    SourceTerm source;
    FractureNetwork network;
    InterfaceData iface;
};

/// All discrete operators of one problem on one mesh, restricted to the
/// free dofs.
struct AssembledForms {
    std::shared_ptr<const TriMesh> mesh;
    DofMap dofs;
    FractureTrace trace;
    InterfaceData iface;
    std::vector<double> coefficients;  // per triangle
    SparseMatrix k_bulk;
    SparseMatrix k_iface;
    SparseMatrix m_bulk;
    SparseMatrix m_iface;
    Vector f;

    SparseMatrix K() const { return k_bulk + k_iface; }
    SparseMatrix M() const { return m_bulk + m_iface; }
    /// Local 3x3 energy matrix of triangle t: bulk part plus the trace pieces
    /// t owns. Summing over triangles gives K exactly.
    Matrix3 element_matrix(Index t) const;
};

AssembledForms assemble_forms(std::shared_ptr<const TriMesh> mesh, const ProblemData& problem, bool with_mass = false);

/// Fine SFEM solution on the free dofs.
Vector solve_reference(const AssembledForms& forms);

/// |||u_ref - u_other||| / |||u_ref||| with the energy norm of k.
double relative_energy_error(std::span<const double> u_ref, std::span<const double> u_other, const SparseMatrix& k);

/// v^T K_t v for every triangle t, with v given on all vertices.
std::vector<double> element_energies(const AssembledForms& forms, std::span<const double> vertex_values);

}  // namespace fraclod
