#include "fraclod/error.hpp"
#include "fraclod/geometries.hpp"
#include "fraclod/interpolation.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace fraclod;
using Catch::Approx;

namespace {

// ||ψ_N|| on the lower arc through (±e, e) of the circle centered at (0, a),
// in the triangle (0,0), (1,1), (-1,1). Composite Simpson in long double and
// Cramer's rule; independent of the library quadrature.
long double arc_dual_norm(long double a, long double e, int node) {
    const long double r = std::sqrt(e * e + (a - e) * (a - e));
    const long double th = std::asin(e / r);
    const auto hats = [&](long double t) {
        const long double x = r * std::sin(t), y = a - r * std::cos(t);
        return std::array<long double, 3>{1.0L - y, (x + y) / 2.0L, (y - x) / 2.0L};
    };
    long double m[3][3] = {};
    const int n = 20000;
    const long double h = 2.0L * th / n;
    for (int k = 0; k <= n; ++k) {
        const long double w = (k == 0 || k == n) ? 1.0L : (k % 2 ? 4.0L : 2.0L);
        const auto l = hats(-th + k * h);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] += w * l[i] * l[j] * r * h / 3.0L;
    }
    const auto det3 = [](const long double q[3][3]) {
        return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
               q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    };
    const long double d = det3(m);
    long double c[3];
    for (int col = 0; col < 3; ++col) {
        long double q[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) q[i][j] = j == col ? (i == node ? 1.0L : 0.0L) : m[i][j];
        c[col] = det3(q) / d;
    }
    // ||ψ||^2 = c^T M c = c_N
    return std::sqrt(c[node]);
}

IntegrationDomain arc_domain(double a, double e) {
    const TriangleVertices t{Point2{0.0, 0.0}, Point2{1.0, 1.0}, Point2{-1.0, 1.0}};
    return IntegrationDomain::along_arc(t, CircularArc{a, {-e, e}, {e, e}});
}

double biorthogonality_error(const DualBasis& d, const Eigen::Matrix3d& m) {
    double err = 0.0;
    for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += d.coeffs[i] * m(i, j);
        err = std::max(err, std::abs(s - (j == d.node ? 1.0 : 0.0)));
    }
    return err;
}

struct Setup {
    std::shared_ptr<const TriMesh> coarse, fine;
    AssembledForms forms;
    FractureNetwork network;
};

Setup setup(const TriMesh& coarse, int refinements, FractureNetwork net, bool with_mass = false) {
    Setup s;
    s.coarse = std::make_shared<const TriMesh>(coarse);
    TriMesh f = coarse;
    for (int i = 0; i < refinements; ++i) f = refine_quadrisect(f);
    s.fine = std::make_shared<const TriMesh>(std::move(f));
    ProblemData p;
    p.a = GridField::constant(1.0);
    p.source.f = ScalarField::constant(1.0);
    p.iface = InterfaceData::uniform(net.num_polylines(), 1.0, 0.0, ScalarField::constant(0.0));
    p.network = net;
    s.network = std::move(net);
    s.forms = assemble_forms(s.fine, p, with_mass);
    return s;
}

void check_projection(const InterpolationOperator& op, int samples, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    const Index nc = op.coarse_dofs.num_dofs();
    for (int s = 0; s < samples; ++s) {
        Vector v(nc);
        for (auto& x : v) x = g(rng);
        const auto back = op.apply(op.prolong(v));
        double err = 0.0;
        for (Index i = 0; i < nc; ++i) err = std::max(err, std::abs(back[i] - v[i]));
        CHECK(err <= 1e-9);
    }
    // Idempotence on fine functions.
    Vector w(op.fine_dofs.num_dofs());
    for (auto& x : w) x = g(rng);
    const auto iw = op.apply(w);
    const auto iiw = op.apply(op.prolong(iw));
    for (Index i = 0; i < nc; ++i) CHECK(iiw[i] == Approx(iw[i]).margin(1e-9));
}

}  // namespace

TEST_CASE("mass matrices of integration domains", "[interpolation]") {
    const TriangleVertices t{Point2{0, 0}, Point2{2, 0}, Point2{0, 1}};
    const auto m = sigma_mass_matrix(IntegrationDomain::whole(t));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(m(i, j) == Approx((i == j ? 2.0 : 1.0) / 12.0).epsilon(1e-14));

    const auto me = sigma_mass_matrix(IntegrationDomain::trace(t, {{Point2{0, 0}, Point2{2, 0}}}));
    CHECK(me(0, 0) == Approx(2.0 / 3.0));
    CHECK(me(0, 1) == Approx(1.0 / 3.0));
    CHECK(me(2, 2) == Approx(0.0).margin(1e-15));
    CHECK(IntegrationDomain::trace(t, {{Point2{0, 0}, Point2{2, 0}}}).measure() == Approx(2.0));
}

TEST_CASE("arc mass matrix matches an independent quadrature", "[interpolation]") {
    const double a = 3.0, e = 1.0;
    const auto m = sigma_mass_matrix(arc_domain(a, e));
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double r = std::sqrt(e * e + (a - e) * (a - e)), th = std::asin(e / r);
    double ref[3][3] = {};
    const int n = 4000;
    const double h = 2 * th / n;
    for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
        const double tt = -th + k * h, x = r * std::sin(tt), y = a - r * std::cos(tt);
        const double l[3] = {1 - y, (x + y) / 2, (y - x) / 2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) ref[i][j] += w * l[i] * l[j] * r * h / 3;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(m(i, j) == Approx(ref[i][j]).epsilon(1e-10));
    CHECK(arc_domain(a, e).measure() == Approx(2 * r * th));
}

TEST_CASE("dual basis of a whole triangle", "[interpolation]") {
    const TriangleVertices t{Point2{0, 0}, Point2{2, 0}, Point2{0.5, 1.5}};
    const auto dom = IntegrationDomain::whole(t);
    const auto m = sigma_mass_matrix(dom);
    for (int node = 0; node < 3; ++node) {
        const auto d = dual_basis(node, dom);
        CHECK(d.status == DualStatus::unique);
        CHECK(biorthogonality_error(d, m) <= 1e-10);
        CHECK(d.residual <= 1e-10);
        // (M^-1)_NN = 9 / |T|
        CHECK(d.norm == Approx(3.0 / std::sqrt(signed_area(t))).epsilon(1e-12));
    }
}

TEST_CASE("dual basis on an edge and on a chord", "[interpolation]") {
    const TriangleVertices t{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}};
    const auto edge = IntegrationDomain::trace(t, {{Point2{0, 0}, Point2{1, 0}}});
    const auto m = sigma_mass_matrix(edge);
    for (int node : {0, 1}) {
        const auto d = dual_basis(node, edge);
        CHECK(d.status == DualStatus::min_norm);
        CHECK(d.norm == Approx(2.0).epsilon(1e-12));
        CHECK(biorthogonality_error(d, m) <= 1e-10);
    }
    const auto opposite = dual_basis(2, edge);
    CHECK(opposite.status == DualStatus::no_solution);
    CHECK(std::isinf(opposite.norm));

    // Straight chord from vertex 0 to the opposite edge.
    const auto chord = IntegrationDomain::trace(t, {{Point2{0, 0}, Point2{0.3, 0.7}}});
    const auto mc = sigma_mass_matrix(chord);
    const auto d0 = dual_basis(0, chord);
    CHECK(d0.status == DualStatus::min_norm);
    CHECK(std::isfinite(d0.norm));
    CHECK(biorthogonality_error(d0, mc) <= 1e-10);
    CHECK(dual_basis(1, chord).status == DualStatus::no_solution);

    // A bent trace spans all three hats.
    const auto bent = IntegrationDomain::trace(
        t, {{Point2{0, 0.5}, Point2{0.25, 0.25}}, {Point2{0.25, 0.25}, Point2{0.5, 0.25}}});
    const auto mb = sigma_mass_matrix(bent);
    for (int node = 0; node < 3; ++node) {
        const auto d = dual_basis(node, bent);
        CHECK(d.status == DualStatus::unique);
        CHECK(biorthogonality_error(d, mb) <= 1e-10);
    }
}

TEST_CASE("dual basis norms on flattening arcs", "[interpolation]") {
    // Shape 1 (e = 1) and shape 2 (e = 1/2), a = 2 ... 2000.
    for (double e : {1.0, 0.5})
        for (double a : {2.0, 20.0, 200.0, 2000.0}) {
            const auto dom = arc_domain(a, e);
            const auto p1 = dual_basis(0, dom), p2 = dual_basis(2, dom), p3 = dual_basis(1, dom);
            CHECK(p1.norm == Approx(static_cast<double>(arc_dual_norm(a, e, 0))).epsilon(1e-6));
            CHECK(p2.norm == Approx(static_cast<double>(arc_dual_norm(a, e, 2))).epsilon(1e-6));
            CHECK(p3.norm == Approx(p2.norm).epsilon(1e-6));  // mirror symmetry
        }
}

TEST_CASE("published arc norms", "[interpolation]") {
    // Two significant digits; the second shape at a = 2000 is reported by the
    // acceptance check (the computed 2.68e4 differs from the published value).
    struct Row {
        double e, a, psi1, psi2;
    };
    const Row rows[] = {{1.0, 2, 3.9, 2.0},     {1.0, 20, 8.9e1, 2.1},  {1.0, 200, 9.4e2, 2.1},
                        {1.0, 2000, 9.5e3, 2.1}, {0.5, 2, 1.8e1, 2.3e1}, {0.5, 20, 2.6e2, 2.6e2},
                        {0.5, 200, 2.7e3, 2.7e3}};
    for (const auto& r : rows) {
        const auto dom = arc_domain(r.a, r.e);
        CHECK(dual_basis(0, dom).norm == Approx(r.psi1).epsilon(0.05));
        CHECK(dual_basis(2, dom).norm == Approx(r.psi2).epsilon(0.05));
    }
    // ψ2 of the first shape levels off while ψ1 grows linearly in a.
    const double lo = dual_basis(2, arc_domain(2, 1)).norm, hi = dual_basis(2, arc_domain(2000, 1)).norm;
    CHECK(hi / lo <= 1.1);
    CHECK(dual_basis(0, arc_domain(2000, 1)).norm / dual_basis(0, arc_domain(200, 1)).norm == Approx(10).epsilon(0.02));
}

TEST_CASE("indicator values", "[interpolation]") {
    const auto mesh = unit_square_structured(4);
    const auto trace = trace_fracture(mesh, gamma_vertical_half());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto tv = mesh.triangle_vertices(t);
        for (int i = 0; i < 3; ++i) {
            const double s = indicator(mesh, trace, t, i);
            const bool on_gamma = std::abs(tv[i].x - 0.5) < 1e-12;
            bool edge_on_gamma = false;
            for (int e = 0; e < 3; ++e)
                edge_on_gamma |= std::abs(tv[e].x - 0.5) < 1e-12 && std::abs(tv[(e + 1) % 3].x - 0.5) < 1e-12;
            if (on_gamma && edge_on_gamma)
                CHECK(s == Approx(std::sqrt(diameter(tv)) * 2.0 / std::sqrt(0.25)).epsilon(1e-12));
            else
                CHECK(std::isinf(s));
        }
    }
}

TEST_CASE("indicator is scale invariant", "[interpolation]") {
    const auto base = unit_square_structured(4);
    const double c = 0.01;
    std::vector<Point2> verts;
    for (Point2 p : base.vertices()) verts.push_back(c * p);
    const TriMesh scaled(verts, base.triangles(), base.boundary_vertex());
    const std::vector<Point2> line{{0.0, 0.0}, {0.3, 0.55}, {1.0, 0.8}};
    std::vector<Point2> scaled_line;
    for (Point2 p : line) scaled_line.push_back(c * p);
    const auto t1 = trace_fracture(base, FractureNetwork({line}));
    const auto t2 = trace_fracture(scaled, FractureNetwork({scaled_line}, {0, 0}, {c, c}));
    Index finite = 0;
    for (Index t = 0; t < base.num_triangles(); ++t)
        for (int i = 0; i < 3; ++i) {
            const double s1 = indicator(base, t1, t, i), s2 = indicator(scaled, t2, t, i);
            CHECK(std::isinf(s1) == std::isinf(s2));
            if (std::isfinite(s1)) {
                ++finite;
                CHECK(s2 == Approx(s1).epsilon(1e-8));
            }
        }
    CHECK(finite > 0);
}

TEST_CASE("node classification", "[interpolation]") {
    const auto mesh = unit_square_structured(8);
    const auto empty = trace_fracture(mesh, FractureNetwork{});
    CHECK(classify(mesh, empty, 500).num_fracture_nodes() == 0);

    const auto aligned = trace_fracture(mesh, gamma_vertical_half());
    const auto ns = classify(mesh, aligned, 500);
    CHECK(ns.num_fracture_nodes() == 7);
    auto rule = edge_rule_sets(mesh, aligned);
    for (auto& s : rule) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    CHECK(ns.fracture_triangles == rule);
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.boundary_vertex()[v]) CHECK_FALSE(ns.on_fracture(v));

    CHECK(classify(mesh, aligned, 500, InterpolationVariant::element_based).num_fracture_nodes() == 0);
    CHECK_THROWS_AS(classify(mesh, aligned, 0.0), InputError);
    CHECK_THROWS_AS(edge_rule_sets(mesh, trace_fracture(mesh, FractureNetwork({{{0.0, 0.3}, {1.0, 0.3}}}))),
                    InputError);

    // Larger thresholds only add triangles.
    const auto rough = trace_fracture(mesh, five_interfaces_2e7());
    const auto small = classify(mesh, rough, 10), large = classify(mesh, rough, 500);
    CHECK(large.num_fracture_nodes() >= small.num_fracture_nodes());
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        for (Index t : small.fracture_triangles[v])
            CHECK(std::binary_search(large.fracture_triangles[v].begin(), large.fracture_triangles[v].end(), t));
}

TEST_CASE("prolongation reproduces coarse hats", "[interpolation]") {
    const auto coarse = unit_square_structured(2);
    const auto fine = refine_quadrisect(refine_quadrisect(coarse));
    const auto p = prolongation_matrix(fine, coarse);
    CHECK(p.rows() == fine.num_vertices());
    for (Index v = 0; v < fine.num_vertices(); ++v) {
        double s = 0.0;
        for (Index c = 0; c < coarse.num_vertices(); ++c) s += p.coeff(v, c);
        CHECK(s == Approx(1.0).epsilon(1e-14));
        // Linear functions are reproduced.
        double x = 0.0;
        for (Index c = 0; c < coarse.num_vertices(); ++c) x += p.coeff(v, c) * coarse.vertex(c).x;
        CHECK(x == Approx(fine.vertex(v).x).margin(1e-14));
    }
}

TEST_CASE("interpolation is a projection onto coarse functions", "[interpolation]") {
    const auto s = setup(unit_square_structured(8), 3, five_interfaces_2e7());
    for (auto variant : {InterpolationVariant::fracture_aware, InterpolationVariant::element_based})
        for (double sigma : {10.0, 500.0}) {
            const auto op = build_interpolation(s.forms, s.coarse, s.network, sigma, variant);
            check_projection(op, 50, 17);
        }

    const auto aligned = setup(unit_square_structured(4), 2, gamma_vertical_half());
    check_projection(build_interpolation(aligned.forms, aligned.coarse, aligned.network, 500,
                                         InterpolationVariant::fracture_aware),
                     50, 5);

    const auto lm = two_layer_unstructured(7);
    const auto un = setup(lm.mesh, 2, lm.network);
    check_projection(build_interpolation(un.forms, un.coarse, un.network, 500, InterpolationVariant::fracture_aware),
                     50, 6);
}

TEST_CASE("fracture nodes average over the trace only", "[interpolation]") {
    const auto s = setup(unit_square_structured(4), 2, gamma_vertical_half());
    const auto op = build_interpolation(s.forms, s.coarse, s.network, 500, InterpolationVariant::fracture_aware);
    // A fine function supported away from Γ has zero nodal values on Γ nodes.
    Vector w(op.fine_dofs.num_dofs(), 0.0);
    for (Index d = 0; d < op.fine_dofs.num_dofs(); ++d)
        if (std::abs(s.fine->vertex(op.fine_dofs.vertex(d)).x - 0.5) > 1e-12) w[d] = 1.0;
    const auto iw = op.apply(w);
    for (Index c = 0; c < op.coarse_dofs.num_dofs(); ++c) {
        const Index v = op.coarse_dofs.vertex(c);
        if (op.nodes.on_fracture(v)) CHECK(iw[c] == Approx(0.0).margin(1e-12));
    }
    // ... while an element-based node sees the bulk.
    const auto eb = build_interpolation(s.forms, s.coarse, s.network, 500, InterpolationVariant::element_based);
    const auto ew = eb.apply(w);
    double mx = 0.0;
    for (double x : ew) mx = std::max(mx, std::abs(x));
    CHECK(mx > 0.1);
}

TEST_CASE("approximation quotient stays bounded under refinement", "[interpolation]") {
    // max_v ||v - I_H v|| / (H |||v|||) over smooth random v, for H = 1/8 and 1/16 at h = H/4.
    const auto quotient = [](Index n) {
        const auto s = setup(unit_square_structured(n), 2, five_interfaces_2e7(), true);
        const auto op = build_interpolation(s.forms, s.coarse, s.network, 500, InterpolationVariant::fracture_aware);
        const auto k = s.forms.K();
        std::mt19937 rng(11);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            double c[4][4];
            for (auto& row : c)
                for (auto& x : row) x = g(rng);
            Vector v(op.fine_dofs.num_dofs());
            for (Index d = 0; d < op.fine_dofs.num_dofs(); ++d) {
                const Point2 p = s.fine->vertex(op.fine_dofs.vertex(d));
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j)
                        v[d] += c[i][j] * std::sin((i + 1) * std::numbers::pi * p.x) *
                                std::sin((j + 1) * std::numbers::pi * p.y) / ((i + 1) * (j + 1));
            }
            auto r = op.prolong(op.apply(v));
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = v[i] - r[i];
            worst = std::max(worst, energy_norm(s.forms.m_bulk, r) / (s.coarse->mesh_size() * energy_norm(k, v)));
        }
        return worst;
    };
    const double q8 = quotient(8), q16 = quotient(16);
    CHECK(std::isfinite(q8));
    CHECK(q16 <= 2.0 * q8);
}
