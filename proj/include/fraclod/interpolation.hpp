#pragma once

#include "fraclod/fem.hpp"
#include "fraclod/fracture.hpp"
#include "fraclod/mesh.hpp"
#include "fraclod/sparse.hpp"

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <memory>
#include <vector>

namespace fraclod {

/// Lower arc of the circle with center (0, center_y) between two points of
/// equal height.
struct CircularArc {
    double center_y = 0.0;
    Point2 left;
    Point2 right;

    double radius() const;
    double half_angle() const;
    /// Point at angle theta measured from the downward direction.
    Point2 at(double theta) const;
    double length() const { return 2.0 * radius() * half_angle(); }
};

/// Integration domain σ of a nodal variable, always inside one coarse
/// triangle whose barycentric coordinates are the active hats.
struct IntegrationDomain {
    enum class Kind { triangle, segments, arc };

    Kind kind = Kind::triangle;
    TriangleVertices triangle{};
    std::vector<std::array<Point2, 2>> segments;
    CircularArc arc;

    static IntegrationDomain whole(const TriangleVertices& t);
    static IntegrationDomain trace(const TriangleVertices& t, std::vector<std::array<Point2, 2>> segments);
    static IntegrationDomain along_arc(const TriangleVertices& t, const CircularArc& arc);

    /// Area or total length.
    double measure() const;
};

/// ∫_σ λ_i λ_j over the three hats of the domain's triangle. Arcs use
/// a 31-point Gauss-Kronrod rule, the other kinds exact formulas.
Eigen::Matrix3d sigma_mass_matrix(const IntegrationDomain& domain);

enum class DualStatus { unique, min_norm, no_solution };

struct DualBasis {
    int node = 0;  // local vertex of the domain's triangle
    std::array<double, 3> coeffs{};
    double norm = std::numeric_limits<double>::infinity();
    DualStatus status = DualStatus::no_solution;
    /// max_j |∫_σ ψ λ_j - δ_ij|
    double residual = std::numeric_limits<double>::infinity();

    /// ψ at a point with barycentric coordinates `lambda`.
    double eval(const std::array<double, 3>& lambda) const {
        return coeffs[0] * lambda[0] + coeffs[1] * lambda[1] + coeffs[2] * lambda[2];
    }
};

/// ψ with ∫_σ ψ λ_j = δ_{node,j}. Singular mass matrices are handled with a
/// pseudo-inverse (eigenvalues below 1e-12 of the largest are dropped).
DualBasis dual_basis(int node, const IntegrationDomain& domain);
DualBasis dual_basis(int node, const Eigen::Matrix3d& mass);

/// Fracture part Γ_T of the closed coarse triangle T.
IntegrationDomain fracture_domain(const TriMesh& coarse, const FractureTrace& coarse_trace, Index t);

/// s_{N,T} = diam(T)^{1/2} ||ψ_{N,Γ_T}||, +inf if Γ_T is empty or no dual
/// basis exists. `node` is a local vertex of T.
double indicator(const TriMesh& coarse, const FractureTrace& coarse_trace, Index t, int node);

enum class InterpolationVariant { fracture_aware, element_based };

struct NodeSets {
    InterpolationVariant variant = InterpolationVariant::fracture_aware;
    double sigma = 500.0;
    /// T^Γ(N) per coarse vertex, ascending; always empty for boundary vertices.
    std::vector<std::vector<Index>> fracture_triangles;

    bool on_fracture(Index vertex) const { return !fracture_triangles[vertex].empty(); }
    Index num_fracture_nodes() const;
};

NodeSets classify(const TriMesh& coarse, const FractureTrace& coarse_trace, double sigma,
                  InterpolationVariant variant = InterpolationVariant::fracture_aware);

/// T^Γ(N) = {T : N ∈ E ⊂ T for a fracture edge E}. Requires an edge-aligned
/// trace; throws InputError otherwise.
std::vector<std::vector<Index>> edge_rule_sets(const TriMesh& coarse, const FractureTrace& coarse_trace);

/// Coarse hat functions evaluated at the vertices of a nested fine mesh
/// (all vertices, rows fine, columns coarse).
SparseMatrix prolongation_matrix(const TriMesh& fine, const TriMesh& coarse);

/// I_H as a matrix from fine free dofs to coarse free nodal values.
struct InterpolationOperator {
    std::shared_ptr<const TriMesh> coarse;
    std::shared_ptr<const TriMesh> fine;
    DofMap coarse_dofs;
    DofMap fine_dofs;
    std::vector<Index> ancestors;  // per fine triangle
    FractureTrace coarse_trace;
    NodeSets nodes;
    SparseMatrix matrix;        // coarse dofs x fine dofs
    SparseMatrix prolongation;  // fine dofs x coarse dofs

    Vector apply(std::span<const double> fine_values) const { return spmv(matrix, fine_values); }
    Vector prolong(std::span<const double> coarse_values) const { return spmv(prolongation, coarse_values); }
};

InterpolationOperator assemble_interpolation(std::shared_ptr<const TriMesh> fine, std::shared_ptr<const TriMesh> coarse,
                                             const NodeSets& nodes, const FractureTrace& coarse_trace,
                                             const FractureTrace& fine_trace);

/// Traces the network on the coarse mesh, classifies and assembles.
InterpolationOperator build_interpolation(const AssembledForms& fine_forms, std::shared_ptr<const TriMesh> coarse,
                                          const FractureNetwork& network, double sigma,
                                          InterpolationVariant variant);

}  // namespace fraclod
