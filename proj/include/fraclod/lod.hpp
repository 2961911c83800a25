#pragma once

#include "fraclod/fem.hpp"
#include "fraclod/interpolation.hpp"
#include "fraclod/sparse.hpp"

#include <array>
#include <limits>
#include <vector>

namespace fraclod {

/// Patch size large enough to cover any mesh.
inline constexpr Index kGlobalPatch = std::numeric_limits<Index>::max();

/// Correctors of one coarse element for its (free) vertices.
struct ElementCorrectors {
    Index element = -1;
    Index k = 0;
    std::vector<Index> dofs;                // fine dofs interior to U^k(T), ascending
    std::array<Index, 3> coarse_vertex{};   // vertices of T
    std::array<Vector, 3> values;           // empty for boundary vertices
    std::vector<Index> constraint_rows;     // coarse dofs constrained on the patch
};

/// Solves the constrained patch problems
///     a(φ, w) = a_T(λ_i, w)  for all w in V_f(U^k(T)).
/// Holds read-only references; concurrent calls are safe.
class CorrectorSolver {
public:
    CorrectorSolver(const AssembledForms& forms, const InterpolationOperator& op);

    ElementCorrectors solve(Index element, Index k) const;
    /// φ_{T,i}^k on all fine dofs.
    Vector element_corrector(Index element, Index coarse_vertex, Index k) const;
    /// Σ_{T ⊂ supp λ_i} φ_{T,i}^k on all fine dofs.
    Vector node_corrector(Index coarse_vertex, Index k) const;

    /// Fine dofs whose incident fine triangles all lie in the patch.
    std::vector<Index> interior_dofs(const Patch& patch) const;
    /// a_T(λ_i, ·) over the fine dofs, for local vertex i of T (all fine dofs).
    Vector element_load(Index element, int local) const;
    /// Same, restricted to the given ascending dofs.
    Vector element_load(Index element, int local, std::span<const Index> dofs) const;

private:
    const AssembledForms& forms_;
    const InterpolationOperator& op_;
    SparseMatrix k_;
    SparseMatrix ct_;  // transpose of the interpolation matrix
    std::vector<std::vector<Index>> children_;
};

/// Columns b_i = λ_i - Q_k λ_i of the multiscale space, as fine dof vectors.
struct CorrectedBasis {
    Index k = 0;
    double sigma = 0.0;
    InterpolationVariant variant = InterpolationVariant::fracture_aware;
    SparseMatrix b;  // fine dofs x coarse dofs

    Index size() const { return b.cols(); }
};

/// `threads` = 0 uses the hardware concurrency. The result does not depend
/// on the thread count.
CorrectedBasis corrected_basis(const AssembledForms& forms, const InterpolationOperator& op, Index k,
                               unsigned threads = 0);

/// B^T A B, symmetrized.
SparseMatrix galerkin_projection(const SparseMatrix& a, const SparseMatrix& basis);

struct CoarseSystem {
    SparseMatrix stiffness;
    Vector load;
    SparseMatrix mass;  // empty unless requested
};

CoarseSystem assemble_coarse_system(const AssembledForms& forms, const SparseMatrix& basis, bool with_mass = false);

struct LodSolution {
    Vector coarse;  // coefficients in the basis
    Vector fine;    // fine dof representation
};

LodSolution lod_solve(const AssembledForms& forms, const CorrectedBasis& basis);
/// Galerkin solve in the span of the columns of `basis` (e.g. the
/// prolongated hats for standard coarse FEM).
LodSolution galerkin_solve(const AssembledForms& forms, const SparseMatrix& basis);

struct DecayProfile {
    std::vector<double> energy;  // per coarse layer, sqrt of the ring energy
    std::vector<double> sup;     // max |v| over fine vertices of the ring
};

/// Energy of v (fine dofs) split by coarse layer around `center`. A fine
/// triangle counts towards the layer of its coarse ancestor, so the squared
/// entries sum to a(v, v). A fine vertex belongs to the lowest layer among
/// its incident triangles.
DecayProfile decay_profile(const AssembledForms& forms, const InterpolationOperator& op,
                           std::span<const double> v, std::span<const Index> center);

}  // namespace fraclod
