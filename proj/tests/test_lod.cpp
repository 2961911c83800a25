#include "fraclod/error.hpp"
#include "fraclod/geometries.hpp"
#include "fraclod/lod.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <random>
#include <set>

using namespace fraclod;
using Catch::Approx;

namespace {

struct Case {
    std::shared_ptr<const TriMesh> coarse, fine;
    ProblemData problem;
    AssembledForms forms;
    InterpolationOperator op;
};

Case make_case(Index coarse_n, int refinements, FractureNetwork net, double sigma = 500.0,
               InterpolationVariant variant = InterpolationVariant::fracture_aware) {
    Case c;
    c.coarse = std::make_shared<const TriMesh>(unit_square_structured(coarse_n));
    TriMesh f = *c.coarse;
    for (int i = 0; i < refinements; ++i) f = refine_quadrisect(f);
    c.fine = std::make_shared<const TriMesh>(std::move(f));
    c.problem.a = GridField::sample_uniform(coarse_n << refinements, 0.1, 0.9, 4);
    c.problem.source.f = ScalarField::box({0.25, 0.25}, {0.75, 0.75}, 1.0);
    c.problem.iface = InterfaceData::uniform(net.num_polylines(), 5.0, 0.0, ScalarField::constant(1.0));
    c.problem.network = std::move(net);
    c.forms = assemble_forms(c.fine, c.problem);
    c.op = build_interpolation(c.forms, c.coarse, c.problem.network, sigma, variant);
    return c;
}

Vector column(const SparseMatrix& b, Index j) {
    Vector v(b.rows(), 0.0);
    for (Index r = 0; r < b.rows(); ++r) v[r] = b.coeff(r, j);
    return v;
}

Vector minus(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

double max_abs(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Random element of ker I_H.
Vector kernel_vector(const InterpolationOperator& op, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Vector w(op.fine_dofs.num_dofs());
    for (auto& x : w) x = g(rng);
    return minus(w, op.prolong(op.apply(w)));
}

}  // namespace

TEST_CASE("correctors lie in the kernel of the interpolation", "[lod]") {
    const auto c = make_case(4, 2, gamma_vertical_half());
    const CorrectorSolver solver(c.forms, c.op);
    for (Index t = 0; t < c.coarse->num_triangles(); t += 3)
        for (Index k : {1, 2}) {
            const auto ec = solver.solve(t, k);
            for (int i = 0; i < 3; ++i) {
                if (ec.values[i].empty()) continue;
                const auto phi = solver.element_corrector(t, c.coarse->triangle(t)[i], k);
                CHECK(max_abs(c.op.apply(phi)) <= 1e-9 * std::max(1.0, max_abs(phi)));
            }
        }
}

TEST_CASE("element loads add up to the stiffness of a hat", "[lod]") {
    const auto c = make_case(4, 2, gamma_vertical_half());
    const CorrectorSolver solver(c.forms, c.op);
    Index v = 0;
    while (!(c.coarse->vertex(v) == Point2{0.5, 0.25})) ++v;
    Vector sum(c.forms.dofs.num_dofs(), 0.0);
    for (Index t : c.coarse->vertex_triangles(v)) {
        const auto& tri = c.coarse->triangle(t);
        const int local = static_cast<int>(std::find(tri.begin(), tri.end(), v) - tri.begin());
        const auto l = solver.element_load(t, local);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += l[i];
    }
    const auto hat = column(c.op.prolongation, c.op.coarse_dofs.dof(v));
    const auto khat = spmv(c.forms.K(), hat);
    for (std::size_t i = 0; i < sum.size(); ++i) CHECK(sum[i] == Approx(khat[i]).margin(1e-12));
}

TEST_CASE("global correctors are a-orthogonal to the kernel", "[lod]") {
    const auto c = make_case(4, 2, five_interfaces_2e7());
    const auto basis = corrected_basis(c.forms, c.op, kGlobalPatch, 1);
    CHECK(basis.size() == c.op.coarse_dofs.num_dofs());
    const auto k = c.forms.K();
    std::mt19937 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto w = kernel_vector(c.op, rng);
        const auto kw = spmv(k, w);
        for (Index j = 0; j < basis.size(); ++j) {
            const auto b = column(basis.b, j);
            CHECK(std::abs(dot(b, kw)) <= 1e-8 * energy_norm(k, b) * energy_norm(k, w));
        }
    }
}

TEST_CASE("global multiscale solution interpolates like the fine solution", "[lod]") {
    const auto c = make_case(4, 2, five_interfaces_2e7());
    const auto basis = corrected_basis(c.forms, c.op, kGlobalPatch, 1);
    const auto ms = lod_solve(c.forms, basis);
    const auto uh = solve_reference(c.forms);
    const auto d = c.op.apply(minus(uh, ms.fine));
    CHECK(max_abs(d) <= 1e-8 * std::max(1e-300, max_abs(c.op.apply(uh))));
}

TEST_CASE("Galerkin residual is orthogonal to the multiscale space", "[lod]") {
    const auto c = make_case(8, 2, five_interfaces_2e7());
    for (Index k : {1, 2}) {
        const auto basis = corrected_basis(c.forms, c.op, k, 1);
        const auto ms = lod_solve(c.forms, basis);
        const auto res = minus(c.forms.f, spmv(c.forms.K(), ms.fine));
        const auto bt = basis.b.transpose();
        CHECK(norm2(spmv(bt, res)) <= 1e-9 * norm2(spmv(bt, c.forms.f)));
    }
}

TEST_CASE("multiscale solution is the energy best approximation in its space", "[lod]") {
    const auto c = make_case(4, 2, gamma_vertical_half());
    const auto basis = corrected_basis(c.forms, c.op, 1, 1);
    const auto ms = lod_solve(c.forms, basis);
    const auto uh = solve_reference(c.forms);
    const auto k = c.forms.K();
    const double e0 = energy_norm(k, minus(uh, ms.fine));
    std::mt19937 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Vector delta(basis.size());
        for (auto& x : delta) x = 1e-3 * g(rng);
        const auto other = minus(ms.fine, spmv(basis.b, delta));
        CHECK(energy_norm(k, minus(uh, other)) >= e0);
    }
}

TEST_CASE("equal meshes reduce to coarse FEM", "[lod]") {
    const auto c = make_case(8, 0, gamma_vertical_half());
    const auto basis = corrected_basis(c.forms, c.op, 2, 1);
    for (Index j = 0; j < basis.size(); ++j) {
        CHECK(basis.b.coeff(j, j) == Approx(1.0).epsilon(1e-12));
        CHECK(norm2(column(basis.b, j)) == Approx(1.0).epsilon(1e-12));
    }
    const auto ms = lod_solve(c.forms, basis);
    const auto fem = galerkin_solve(c.forms, c.op.prolongation);
    const auto uh = solve_reference(c.forms);
    for (std::size_t i = 0; i < uh.size(); ++i) {
        CHECK(ms.fine[i] == Approx(fem.fine[i]).margin(1e-10));
        CHECK(ms.fine[i] == Approx(uh[i]).margin(1e-10));
    }
}

TEST_CASE("patches covering the mesh give the global basis", "[lod]") {
    const auto c = make_case(4, 2, five_interfaces_2e7());
    const auto global = corrected_basis(c.forms, c.op, kGlobalPatch, 1);
    const auto big = corrected_basis(c.forms, c.op, 20, 1);
    const double scale = global.b.max_abs();
    CHECK((global.b + big.b.scaled(-1.0)).pruned(1e-12 * scale).nnz() == 0);
}

TEST_CASE("basis support stays inside the enlarged patch", "[lod]") {
    const auto c = make_case(8, 2, five_interfaces_2e7());
    const Index k = 1;
    const auto basis = corrected_basis(c.forms, c.op, k, 1);
    const auto& anc = c.op.ancestors;
    for (Index j = 0; j < basis.size(); j += 5) {
        const Index v = c.op.coarse_dofs.vertex(j);
        const auto ring = c.coarse->vertex_triangles(v);
        const auto p = patch(*c.coarse, std::vector<Index>(ring.begin(), ring.end()), k + 1);
        const auto col = column(basis.b, j);
        for (Index d = 0; d < static_cast<Index>(col.size()); ++d) {
            if (col[d] == 0.0) continue;
            bool inside = false;
            for (Index t : c.fine->vertex_triangles(c.forms.dofs.vertex(d))) inside |= p.contains(anc[t]);
            CHECK(inside);
        }
    }
}

TEST_CASE("corrected basis is linearly independent", "[lod]") {
    const auto c = make_case(8, 2, five_interfaces_2e7());
    const auto basis = corrected_basis(c.forms, c.op, 1, 1);
    Eigen::MatrixXd b(basis.b.rows(), basis.b.cols());
    b.setZero();
    for (Index r = 0; r < basis.b.rows(); ++r)
        for (Index i = basis.b.row_offsets()[r]; i < basis.b.row_offsets()[r + 1]; ++i)
            b(r, basis.b.col_indices()[i]) = basis.b.values()[i];
    const Eigen::MatrixXd gram = b.transpose() * b;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() > 1e-6 * es.eigenvalues().maxCoeff());
}

TEST_CASE("thread count does not change the basis", "[lod]") {
    const auto c = make_case(8, 2, five_interfaces_2e7());
    const auto one = corrected_basis(c.forms, c.op, 2, 1);
    const auto three = corrected_basis(c.forms, c.op, 2, 3);
    REQUIRE(one.b.nnz() == three.b.nnz());
    CHECK(std::equal(one.b.col_indices().begin(), one.b.col_indices().end(), three.b.col_indices().begin()));
    CHECK(std::memcmp(one.b.values().data(), three.b.values().data(), one.b.values().size() * sizeof(double)) == 0);
}

TEST_CASE("corrector energy is bounded by the element energy of the hat", "[lod]") {
    const auto c = make_case(8, 2, five_interfaces_2e7());
    const CorrectorSolver solver(c.forms, c.op);
    double worst = 0.0;
    for (Index t = 0; t < c.coarse->num_triangles(); t += 4) {
        const auto ec = solver.solve(t, 3);
        for (int i = 0; i < 3; ++i) {
            if (ec.values[i].empty()) continue;
            const Index v = c.coarse->triangle(t)[i];
            const auto phi = solver.element_corrector(t, v, 3);
            // a_T(λ_i, λ_i)
            const auto hat = column(c.op.prolongation, c.op.coarse_dofs.dof(v));
            const double hat_t = dot(hat, solver.element_load(t, i));
            worst = std::max(worst, energy_norm(c.forms.K(), phi) / std::sqrt(hat_t));
        }
    }
    // a(φ, φ) = a_T(λ, φ) <= |||λ|||_T |||φ|||_T gives the ratio <= 1.
    CHECK(worst <= 1.0 + 1e-10);
}

TEST_CASE("decay profile splits the energy by coarse layer", "[lod]") {
    const auto c = make_case(8, 2, gamma_vertical_half());
    const CorrectorSolver solver(c.forms, c.op);
    Index v = 0;
    for (; v < c.coarse->num_vertices(); ++v)
        if (c.coarse->vertex(v) == Point2{0.5, 0.5}) break;
    const auto ring = c.coarse->vertex_triangles(v);
    const std::vector<Index> center(ring.begin(), ring.end());
    const auto phi = solver.node_corrector(v, kGlobalPatch);
    const auto prof = decay_profile(c.forms, c.op, phi, center);
    double s = 0.0;
    for (double e : prof.energy) s += e * e;
    CHECK(s == Approx(std::pow(energy_norm(c.forms.K(), phi), 2)).epsilon(1e-12));

    // A function supported inside the center has energy in layer 0 only.
    Vector local(c.forms.dofs.num_dofs(), 0.0);
    for (Index t = 0; t < c.fine->num_triangles(); ++t)
        if (std::binary_search(center.begin(), center.end(), c.op.ancestors[t]))
            for (Index fv : c.fine->triangle(t)) {
                bool interior = true;
                for (Index u : c.fine->vertex_triangles(fv))
                    interior &= std::binary_search(center.begin(), center.end(), c.op.ancestors[u]);
                if (interior && c.forms.dofs.dof(fv) >= 0) local[c.forms.dofs.dof(fv)] = 1.0;
            }
    const auto lp = decay_profile(c.forms, c.op, local, center);
    CHECK(lp.energy[0] > 0.0);
    for (std::size_t l = 1; l < lp.energy.size(); ++l) CHECK(lp.energy[l] == 0.0);
}
