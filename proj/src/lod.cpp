#include "fraclod/lod.hpp"

#include "fraclod/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace fraclod {

CorrectorSolver::CorrectorSolver(const AssembledForms& forms, const InterpolationOperator& op)
    : forms_(forms), op_(op), k_(forms.K()), ct_(op.matrix.transpose()) {
    if (op.fine_dofs.num_dofs() != forms.dofs.num_dofs())
        throw InputError("corrector solver: interpolation and forms live on different fine meshes");
    children_.resize(static_cast<std::size_t>(op.coarse->num_triangles()));
    for (Index t = 0; t < static_cast<Index>(op.ancestors.size()); ++t) children_[op.ancestors[t]].push_back(t);
}

std::vector<Index> CorrectorSolver::interior_dofs(const Patch& patch) const {
    const TriMesh& fine = *forms_.mesh;
    std::vector<Index> cand;
    for (Index T : patch.elements)
        for (Index t : children_[T])
            for (Index v : fine.triangle(t)) cand.push_back(v);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::vector<Index> dofs;
    for (Index v : cand) {
        const Index d = forms_.dofs.dof(v);
        if (d < 0) continue;
        const auto tris = fine.vertex_triangles(v);
        const bool inside = std::all_of(tris.begin(), tris.end(), [&](Index t) { return patch.contains(op_.ancestors[t]); });
        if (inside) dofs.push_back(d);
    }
    std::sort(dofs.begin(), dofs.end());
    return dofs;
}

Vector CorrectorSolver::element_load(Index element, int local) const {
    std::vector<Index> all(static_cast<std::size_t>(forms_.dofs.num_dofs()));
    for (Index d = 0; d < forms_.dofs.num_dofs(); ++d) all[d] = d;
    return element_load(element, local, all);
}

Vector CorrectorSolver::element_load(Index element, int local, std::span<const Index> dofs) const {
    const TriMesh& fine = *forms_.mesh;
    const auto tv = op_.coarse->triangle_vertices(element);
    Vector rhs(dofs.size(), 0.0);
    for (Index t : children_[element]) {
        const Matrix3 kt = forms_.element_matrix(t);
        const auto& ids = fine.triangle(t);
        std::array<double, 3> lam{};
        for (int b = 0; b < 3; ++b) lam[b] = barycentric(tv, fine.vertex(ids[b]))[local];
        for (int a = 0; a < 3; ++a) {
            const Index d = forms_.dofs.dof(ids[a]);
            if (d < 0) continue;
            const auto it = std::lower_bound(dofs.begin(), dofs.end(), d);
            if (it == dofs.end() || *it != d) continue;
            rhs[it - dofs.begin()] += kt[a][0] * lam[0] + kt[a][1] * lam[1] + kt[a][2] * lam[2];
        }
    }
    return rhs;
}

ElementCorrectors CorrectorSolver::solve(Index element, Index k) const {
    const TriMesh& coarse = *op_.coarse;
    ElementCorrectors out;
    out.element = element;
    out.k = k;
    out.coarse_vertex = coarse.triangle(element);
    const Patch p = patch(coarse, element, std::min<Index>(k, coarse.num_triangles()));
    out.dofs = interior_dofs(p);

    bool any = false;
    for (int i = 0; i < 3; ++i) any = any || op_.coarse_dofs.dof(out.coarse_vertex[i]) >= 0;
    if (!any) return out;
    if (out.dofs.empty()) return out;  // V_f(U^k(T)) = {0}

    for (Index d : out.dofs) {
        const auto offs = ct_.row_offsets();
        const auto cols = ct_.col_indices();
        for (Index q = offs[d]; q < offs[d + 1]; ++q) out.constraint_rows.push_back(cols[q]);
    }
    std::sort(out.constraint_rows.begin(), out.constraint_rows.end());
    out.constraint_rows.erase(std::unique(out.constraint_rows.begin(), out.constraint_rows.end()),
                              out.constraint_rows.end());

    const SparseMatrix kp = k_.submatrix(out.dofs, out.dofs);
    const SparseMatrix cp = op_.matrix.submatrix(out.constraint_rows, out.dofs);
    const std::string label = "element " + std::to_string(element) + ", k=" + std::to_string(k);
    const SaddleFactorization fact(kp, cp, label);
    const Vector zero_dual(out.constraint_rows.size(), 0.0);

    for (int i = 0; i < 3; ++i) {
        if (op_.coarse_dofs.dof(out.coarse_vertex[i]) < 0) continue;
        out.values[i] = fact.solve(element_load(element, i, out.dofs), zero_dual).primal;
    }
    return out;
}

Vector CorrectorSolver::element_corrector(Index element, Index coarse_vertex, Index k) const {
    const auto& tri = op_.coarse->triangle(element);
    const auto it = std::find(tri.begin(), tri.end(), coarse_vertex);
    if (it == tri.end()) throw InputError("element_corrector: vertex not in element");
    const int local = static_cast<int>(it - tri.begin());
    const ElementCorrectors ec = solve(element, k);
    Vector out(static_cast<std::size_t>(forms_.dofs.num_dofs()), 0.0);
    if (!ec.values[local].empty())
        for (std::size_t j = 0; j < ec.dofs.size(); ++j) out[ec.dofs[j]] = ec.values[local][j];
    return out;
}

Vector CorrectorSolver::node_corrector(Index coarse_vertex, Index k) const {
    Vector out(static_cast<std::size_t>(forms_.dofs.num_dofs()), 0.0);
    for (Index T : op_.coarse->vertex_triangles(coarse_vertex)) {
        const Vector phi = element_corrector(T, coarse_vertex, k);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += phi[j];
    }
    return out;
}

CorrectedBasis corrected_basis(const AssembledForms& forms, const InterpolationOperator& op, Index k,
                               unsigned threads) {
    if (k < 0) throw InputError("corrected_basis: k must be non-negative");
    const CorrectorSolver solver(forms, op);
    const Index nt = op.coarse->num_triangles();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    // Elements are solved in chunks; each chunk is scattered in element order
    // so the sum does not depend on scheduling.
    std::vector<Triplet> trip;
    const Index chunk = static_cast<Index>(4 * threads);
    std::vector<ElementCorrectors> results(static_cast<std::size_t>(chunk));
    std::vector<std::exception_ptr> errors(threads);
    for (Index start = 0; start < nt; start += chunk) {
        const Index stop = std::min(nt, start + chunk);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < threads; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (Index e = start + static_cast<Index>(w); e < stop; e += static_cast<Index>(threads))
                            results[e - start] = solver.solve(e, k);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
        for (Index e = start; e < stop; ++e) {
            const auto& ec = results[e - start];
            for (int i = 0; i < 3; ++i) {
                const Index col = op.coarse_dofs.dof(ec.coarse_vertex[i]);
                if (col < 0 || ec.values[i].empty()) continue;
                for (std::size_t j = 0; j < ec.dofs.size(); ++j)
                    if (ec.values[i][j] != 0.0) trip.push_back({ec.dofs[j], col, -ec.values[i][j]});
            }
        }
    }
    const SparseMatrix correction = SparseMatrix::from_triplets(op.fine_dofs.num_dofs(), op.coarse_dofs.num_dofs(),
                                                                std::move(trip));
    CorrectedBasis basis;
    basis.k = k;
    basis.sigma = op.nodes.sigma;
    basis.variant = op.nodes.variant;
    basis.b = op.prolongation + correction;
    return basis;
}

SparseMatrix galerkin_projection(const SparseMatrix& a, const SparseMatrix& basis) {
    const SparseMatrix p = basis.transpose() * (a * basis);
    return (p + p.transpose()).scaled(0.5);
}

CoarseSystem assemble_coarse_system(const AssembledForms& forms, const SparseMatrix& basis, bool with_mass) {
    CoarseSystem sys;
    sys.stiffness = galerkin_projection(forms.K(), basis);
    sys.load = spmv(basis.transpose(), forms.f);
    if (with_mass) sys.mass = galerkin_projection(forms.M(), basis);
    return sys;
}

LodSolution galerkin_solve(const AssembledForms& forms, const SparseMatrix& basis) {
    const CoarseSystem sys = assemble_coarse_system(forms, basis);
    LodSolution sol;
    sol.coarse = solve_spd(sys.stiffness, sys.load);
    sol.fine = spmv(basis, sol.coarse);
    return sol;
}

LodSolution lod_solve(const AssembledForms& forms, const CorrectedBasis& basis) {
    return galerkin_solve(forms, basis.b);
}

DecayProfile decay_profile(const AssembledForms& forms, const InterpolationOperator& op,
                           std::span<const double> v, std::span<const Index> center) {
    const TriMesh& fine = *forms.mesh;
    const auto layers = patch_layers(*op.coarse, center);
    Index nlayers = 0;
    for (Index l : layers) nlayers = std::max(nlayers, l + 1);
    const Vector vv = forms.dofs.extend_to_vertices(v);
    const auto energies = element_energies(forms, vv);
    DecayProfile prof;
    prof.energy.assign(static_cast<std::size_t>(nlayers), 0.0);
    prof.sup.assign(static_cast<std::size_t>(nlayers), 0.0);
    std::vector<Index> vertex_layer(static_cast<std::size_t>(fine.num_vertices()), nlayers);
    for (Index t = 0; t < fine.num_triangles(); ++t) {
        const Index l = layers[op.ancestors[t]];
        if (l < 0) continue;
        prof.energy[l] += energies[t];
        for (Index x : fine.triangle(t)) vertex_layer[x] = std::min(vertex_layer[x], l);
    }
    for (Index x = 0; x < fine.num_vertices(); ++x)
        if (vertex_layer[x] < nlayers) prof.sup[vertex_layer[x]] = std::max(prof.sup[vertex_layer[x]], std::abs(vv[x]));
    for (auto& e : prof.energy) e = std::sqrt(std::max(0.0, e));
    return prof;
}

}  // namespace fraclod
