#include "fraclod/experiments.hpp"

#include "fraclod/error.hpp"
#include "fraclod/geometries.hpp"
#include "fraclod/lod.hpp"
#include "fraclod/wave.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace fraclod {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
    static const std::vector<std::pair<ExperimentKind, std::string>> names{
        {ExperimentKind::dual_norm_table, "dual_norm_table"}, {ExperimentKind::decay_demo, "decay_demo"},
        {ExperimentKind::convergence, "convergence"},         {ExperimentKind::patch_study, "patch_study"},
        {ExperimentKind::wave, "wave"},                       {ExperimentKind::mesh_info, "mesh_info"}};
    return names;
}

std::string variant_name(InterpolationVariant v) {
    return v == InterpolationVariant::fracture_aware ? "fracture_aware" : "element_based";
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
    for (const auto& item : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }))
            throw InputError(where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(where + ": invalid or missing '" + key + "'");
    }
}

template <class T>
std::vector<T> get_list(const json& j, const char* key, const std::string& where) {
    const json& v = j.at(key);
    try {
        if (v.is_array()) return v.get<std::vector<T>>();
        return {v.get<T>()};
    } catch (const json::exception&) {
        throw InputError(where + ": invalid '" + key + "'");
    }
}

ScalarField parse_source(const json& j, const std::string& where) {
    if (j.is_number()) return ScalarField::constant(j.get<double>());
    check_keys(j, where, {"formula", "box", "inside", "outside"});
    if (j.contains("formula")) {
        const auto name = get<std::string>(j, "formula", where);
        const auto& names = ScalarField::formula_names();
        if (std::find(names.begin(), names.end(), name) == names.end())
            throw InputError(where + ": unknown formula '" + name + "'");
        return ScalarField::formula(name);
    }
    if (j.contains("box")) {
        const auto b = get<std::vector<double>>(j, "box", where);
        if (b.size() != 4 || !(b[0] < b[2]) || !(b[1] < b[3])) throw InputError(where + ": box must be [x0,y0,x1,y1]");
        const double outside = j.contains("outside") ? get<double>(j, "outside", where) : 0.0;
        return ScalarField::box({b[0], b[1]}, {b[2], b[3]}, get<double>(j, "inside", where), outside);
    }
    throw InputError(where + ": expected a number, {\"formula\": ...} or {\"box\": ...}");
}

InterfaceConstants parse_interface(const json& j, const std::string& where) {
    check_keys(j, where, {"a_gamma", "b_gamma", "f_gamma"});
    InterfaceConstants c;
    if (j.contains("a_gamma")) c.a_gamma = get<double>(j, "a_gamma", where);
    if (j.contains("b_gamma")) c.b_gamma = get<double>(j, "b_gamma", where);
    c.f_gamma = j.contains("f_gamma") ? parse_source(j.at("f_gamma"), where + ".f_gamma") : ScalarField::constant(0.0);
    return c;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Index log2_exact(Index n) {
    Index r = 0;
    while ((Index(1) << r) < n) ++r;
    return r;
}

Index k_for_level(const ExperimentConfig& c, std::size_t level) { return c.k.size() == 1 ? c.k[0] : c.k.at(level); }

std::string format_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

FractureNetwork make_network(const ExperimentConfig& c) {
    if (!c.fracture_file.empty()) return load_fractures(c.fracture_file);
    if (c.geometry == "two_layer_unstructured") return two_layer_unstructured(c.mesh.seed).network;
    return builtin_network(c.geometry);
}

std::shared_ptr<const TriMesh> coarse_mesh(const ExperimentConfig& c, Index n) {
    if (!c.mesh.file.empty()) return std::make_shared<TriMesh>(load_mesh(c.mesh.file));
    if (c.mesh.builtin == "two_layer_unstructured")
        return std::make_shared<TriMesh>(two_layer_unstructured(c.mesh.seed).mesh);
    return std::make_shared<TriMesh>(unit_square_structured(n));
}

std::vector<std::shared_ptr<const TriMesh>> refine_hierarchy(std::shared_ptr<const TriMesh> coarse, Index levels) {
    std::vector<std::shared_ptr<const TriMesh>> out{std::move(coarse)};
    for (Index l = 0; l < levels; ++l) out.push_back(std::make_shared<TriMesh>(refine_quadrisect(*out.back())));
    return out;
}

/// Relative energy error that treats a zero reference as exact when the
/// other solution vanishes too.
double safe_relative_error(std::span<const double> ref, std::span<const double> other, const SparseMatrix& k) {
    if (energy_norm(k, ref) > 0.0) return relative_energy_error(ref, other, k);
    return energy_norm(k, other) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

Vector eoc_column(const std::vector<double>& errors, const std::vector<double>& sizes) {
    Vector out(errors.size(), kNaN);
    if (errors.size() < 2) return out;
    bool usable = std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0 && std::isfinite(e); });
    if (!usable) return out;
    const auto eoc = estimate_eoc(errors, sizes);
    std::copy(eoc.begin(), eoc.end(), out.begin() + 1);
    return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [k, name] : kind_names())
        if (k == kind) return name;
    return "unknown";
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    const std::string w = "config";
    check_keys(j, w,
               {"kind", "mesh", "geometry", "coefficient", "interface", "interfaces", "source", "density",
                "variants", "sigma", "k", "threads", "shapes", "a_values", "center_node", "fit_layers",
                "coarse_levels", "tau", "t_end", "sample_times", "forcing_cutoff", "energy_check_cutoff", "output",
                "scale", "description"});

    ExperimentConfig c;
    const auto kind = get<std::string>(j, "kind", w);
    const auto it = std::find_if(kind_names().begin(), kind_names().end(), [&](auto& p) { return p.second == kind; });
    if (it == kind_names().end()) throw InputError("config: unknown kind '" + kind + "'");
    c.kind = it->first;

    if (j.contains("mesh")) {
        const json& m = j.at("mesh");
        check_keys(m, "mesh", {"coarse_n", "fine_n", "builtin", "file", "refinements", "seed"});
        if (m.contains("coarse_n")) c.mesh.coarse_n = get<Index>(m, "coarse_n", "mesh");
        if (m.contains("fine_n")) c.mesh.fine_n = get<Index>(m, "fine_n", "mesh");
        if (m.contains("builtin")) c.mesh.builtin = get<std::string>(m, "builtin", "mesh");
        if (m.contains("file")) c.mesh.file = resolve(base_dir, get<std::string>(m, "file", "mesh"));
        if (m.contains("refinements")) c.mesh.refinements = get<Index>(m, "refinements", "mesh");
        if (m.contains("seed")) c.mesh.seed = get<std::uint64_t>(m, "seed", "mesh");
    }
    if (j.contains("geometry")) {
        const json& g = j.at("geometry");
        if (g.is_string()) {
            c.geometry = g.get<std::string>();
        } else {
            check_keys(g, "geometry", {"file"});
            c.geometry.clear();
            c.fracture_file = resolve(base_dir, get<std::string>(g, "file", "geometry"));
        }
    }
    if (j.contains("coefficient")) {
        const json& a = j.at("coefficient");
        check_keys(a, "coefficient", {"n", "lo", "hi", "seeds", "constant"});
        if (a.contains("n")) c.coefficient.n = get<Index>(a, "n", "coefficient");
        if (a.contains("lo")) c.coefficient.lo = get<double>(a, "lo", "coefficient");
        if (a.contains("hi")) c.coefficient.hi = get<double>(a, "hi", "coefficient");
        if (a.contains("seeds")) c.coefficient.seeds = get_list<std::uint64_t>(a, "seeds", "coefficient");
        if (a.contains("constant")) c.coefficient.constant = get<double>(a, "constant", "coefficient");
    }
    if (j.contains("interface") && j.contains("interfaces"))
        throw InputError("config: give either 'interface' or 'interfaces'");
    if (j.contains("interface")) c.interfaces = {parse_interface(j.at("interface"), "interface")};
    if (j.contains("interfaces")) {
        if (!j.at("interfaces").is_array()) throw InputError("interfaces: expected a list");
        for (const auto& e : j.at("interfaces")) c.interfaces.push_back(parse_interface(e, "interfaces"));
    }
    if (j.contains("source")) c.source = parse_source(j.at("source"), "source");
    if (j.contains("density")) c.density = get<double>(j, "density", w);
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : get_list<std::string>(j, "variants", w)) {
            if (v == "fracture_aware") c.variants.push_back(InterpolationVariant::fracture_aware);
            else if (v == "element_based") c.variants.push_back(InterpolationVariant::element_based);
            else throw InputError("config: unknown variant '" + v + "'");
        }
    }
    if (j.contains("sigma")) c.sigma = get_list<double>(j, "sigma", w);
    if (j.contains("k")) c.k = get_list<Index>(j, "k", w);
    if (j.contains("threads")) c.threads = get<unsigned>(j, "threads", w);
    if (j.contains("shapes")) c.shapes = get_list<int>(j, "shapes", w);
    if (j.contains("a_values")) c.a_values = get_list<double>(j, "a_values", w);
    if (j.contains("center_node")) {
        const auto p = get<std::vector<double>>(j, "center_node", w);
        if (p.size() != 2) throw InputError("config: center_node must be [x, y]");
        c.center_node = {p[0], p[1]};
    }
    if (j.contains("fit_layers")) {
        const auto f = get<std::vector<Index>>(j, "fit_layers", w);
        if (f.size() != 2) throw InputError("config: fit_layers must be [first, last]");
        c.fit_first = f[0];
        c.fit_last = f[1];
    }
    if (j.contains("coarse_levels")) c.coarse_levels = get_list<Index>(j, "coarse_levels", w);
    if (j.contains("tau")) c.tau = get<double>(j, "tau", w);
    if (j.contains("t_end")) c.t_end = get<double>(j, "t_end", w);
    if (j.contains("sample_times")) c.sample_times = get_list<double>(j, "sample_times", w);
    if (j.contains("forcing_cutoff")) c.forcing_cutoff = get<double>(j, "forcing_cutoff", w);
    if (j.contains("energy_check_cutoff")) c.energy_check_cutoff = get<double>(j, "energy_check_cutoff", w);
    if (j.contains("output")) c.output = resolve(base_dir, get<std::string>(j, "output", w));
    if (j.contains("scale")) c.scale = get<double>(j, "scale", w);
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

void validate(const ExperimentConfig& c) {
    const auto fail = [](const std::string& msg) { throw InputError("config: " + msg); };
    if (!(c.scale > 0.0 && c.scale <= 1.0) || std::exp2(std::round(std::log2(c.scale))) != c.scale)
        fail("scale must be a power of two in (0, 1]");

    if (c.kind == ExperimentKind::dual_norm_table) {
        if (c.shapes.empty() || c.a_values.empty()) fail("shapes and a_values must be non-empty");
        for (int s : c.shapes)
            if (s != 1 && s != 2) fail("shapes must be 1 or 2");
        for (double a : c.a_values)
            if (!(a > 1.0) || !std::isfinite(a)) fail("a_values must be finite and > 1");
        return;
    }

    const MeshConfig& m = c.mesh;
    if (!m.builtin.empty() && !m.file.empty()) fail("mesh: give either 'builtin' or 'file'");
    if (!m.builtin.empty() && m.builtin != "two_layer_unstructured") fail("mesh: unknown builtin '" + m.builtin + "'");
    if (!m.file.empty() && !std::filesystem::exists(m.file)) fail("mesh file " + m.file.string() + " not found");
    if (m.structured()) {
        if (c.kind == ExperimentKind::wave) {
            if (c.coarse_levels.empty()) fail("wave needs coarse_levels");
            for (Index n : c.coarse_levels)
                if (!is_power_of_two(n) || n < 2 || n > m.fine_n) fail("coarse_levels must be powers of two in [2, fine_n]");
        } else if (!is_power_of_two(m.coarse_n) || m.coarse_n < 2) {
            fail("mesh.coarse_n must be a power of two >= 2");
        }
        if (!is_power_of_two(m.fine_n) || m.fine_n < m.coarse_n) fail("mesh.fine_n must be a power of two >= coarse_n");
        if (m.fine_n > 4096) fail("mesh.fine_n too large");
    } else {
        if (c.kind == ExperimentKind::wave) fail("wave needs a structured mesh");
        if (m.refinements < 0 || m.refinements > 8) fail("mesh.refinements must be in [0, 8]");
        if (c.kind == ExperimentKind::convergence && m.refinements < 2) fail("convergence needs >= 2 refinements");
    }

    if (!c.fracture_file.empty()) {
        if (!std::filesystem::exists(c.fracture_file)) fail("fracture file " + c.fracture_file.string() + " not found");
    } else {
        const auto& names = builtin_geometry_names();
        if (std::find(names.begin(), names.end(), c.geometry) == names.end())
            fail("unknown geometry '" + c.geometry + "'");
    }
    const CoefficientConfig& a = c.coefficient;
    if (a.constant < 0.0) fail("coefficient.constant must be positive");
    if (a.constant == 0.0) {
        if (a.n < 1 || a.n > 8192) fail("coefficient.n must be in [1, 8192]");
        if (!(a.lo > 0.0) || !(a.lo <= a.hi) || !std::isfinite(a.hi)) fail("coefficient needs 0 < lo <= hi");
        if (a.seeds.empty()) fail("coefficient.seeds must be non-empty");
    }
    for (const auto& i : c.interfaces)
        if (!(i.a_gamma > 0.0) || !(i.b_gamma >= 0.0)) fail("interface needs a_gamma > 0 and b_gamma >= 0");
    if (!(c.density > 0.0)) fail("density must be positive");
    if (c.variants.empty()) fail("variants must be non-empty");
    if (c.sigma.empty()) fail("sigma must be non-empty");
    for (double s : c.sigma)
        if (!(s > 0.0)) fail("sigma values must be positive");
    if (c.k.empty()) fail("k must be non-empty");
    for (Index k : c.k)
        if (k < 0) fail("k values must be >= 0");
    const Index coarse_levels = m.structured() ? log2_exact(m.fine_n / m.coarse_n) : m.refinements;
    if (c.kind == ExperimentKind::convergence && c.k.size() != 1 && static_cast<Index>(c.k.size()) != coarse_levels)
        fail("convergence: give one k or one per coarse level");
    if (c.kind == ExperimentKind::wave && c.k.size() != 1 && c.k.size() != c.coarse_levels.size())
        fail("wave: give one k or one per coarse level");
    if (c.kind == ExperimentKind::decay_demo && !(c.fit_first >= 0 && c.fit_first < c.fit_last))
        fail("fit_layers must satisfy 0 <= first < last");

    if (c.kind == ExperimentKind::wave) {
        TimeGrid grid{c.tau, c.t_end};
        grid.validate();
        if (c.sample_times.empty()) fail("sample_times must be non-empty");
        for (double t : c.sample_times) {
            if (!(t > 0.0) || t > c.t_end * (1.0 + 1e-12)) fail("sample_times must lie in (0, t_end]");
            grid.step_of(t);
        }
        if (c.energy_check_cutoff >= 0.0 && c.energy_check_cutoff >= c.t_end)
            fail("energy_check_cutoff must be before t_end");
    }
}

ExperimentConfig apply_scale(ExperimentConfig c, double scale) {
    c.scale = scale;
    validate(c);
    if (scale == 1.0) return c;
    const Index halvings = static_cast<Index>(std::lround(-std::log2(scale)));
    const auto shrink = [&](Index n) { return std::max<Index>(1, n >> halvings); };
    c.coefficient.n = shrink(c.coefficient.n);
    if (c.mesh.structured()) {
        c.mesh.coarse_n = std::max<Index>(2, shrink(c.mesh.coarse_n));
        c.mesh.fine_n = std::max(c.mesh.coarse_n, shrink(c.mesh.fine_n));
        for (auto& n : c.coarse_levels) n = std::max<Index>(2, shrink(n));
        std::vector<Index> levels;
        for (Index n : c.coarse_levels)
            if (std::find(levels.begin(), levels.end(), n) == levels.end() && n <= c.mesh.fine_n) levels.push_back(n);
        c.coarse_levels = levels;
        if (c.kind == ExperimentKind::wave && c.k.size() > c.coarse_levels.size()) c.k.resize(c.coarse_levels.size());
        if (c.kind == ExperimentKind::convergence && c.k.size() > 1)
            c.k.resize(static_cast<std::size_t>(log2_exact(c.mesh.fine_n / c.mesh.coarse_n)));
    } else {
        const Index keep = c.kind == ExperimentKind::convergence ? 2 : 0;
        const Index r = std::max(keep, c.mesh.refinements - halvings);
        if (c.k.size() > 1) c.k.resize(static_cast<std::size_t>(r));
        c.mesh.refinements = r;
    }
    validate(c);
    return c;
}

ProblemData make_problem(const ExperimentConfig& c) {
    ProblemData p;
    p.network = make_network(c);
    const CoefficientConfig& a = c.coefficient;
    if (a.constant > 0.0) {
        p.a = GridField::constant(a.constant);
    } else if (a.seeds.size() == 1) {
        p.a = GridField::sample_uniform(a.n, a.lo, a.hi, a.seeds[0]);
    } else {
        const FractureNetwork& net = p.network;
        const Index layers = static_cast<Index>(a.seeds.size());
        p.a = layered_field(a.n, a.lo, a.hi, a.seeds, [&](Point2 x) {
            const Index l = layer_of(net, x);
            if (l >= layers) throw InputError("coefficient: need one seed per layer");
            return l;
        });
    }
    p.source = SourceTerm{c.source, c.density};
    const Index np = p.network.num_polylines();
    if (c.interfaces.size() == 1) {
        p.iface = InterfaceData(std::vector<InterfaceConstants>(static_cast<std::size_t>(np), c.interfaces[0]));
    } else if (static_cast<Index>(c.interfaces.size()) == np) {
        p.iface = InterfaceData(c.interfaces);
    } else if (np > 0) {
        throw InputError("config: " + std::to_string(np) + " fracture polylines but " +
                         std::to_string(c.interfaces.size()) + " interface entries");
    }
    return p;
}

std::vector<std::shared_ptr<const TriMesh>> make_mesh_hierarchy(const ExperimentConfig& c) {
    if (c.mesh.structured())
        return refine_hierarchy(coarse_mesh(c, c.mesh.coarse_n), log2_exact(c.mesh.fine_n / c.mesh.coarse_n));
    return refine_hierarchy(coarse_mesh(c, 0), c.mesh.refinements);
}

ResultTable run_dual_norm_table(const ExperimentConfig& c) {
    validate(c);
    const TriangleVertices t{Point2{0.0, 0.0}, Point2{1.0, 1.0}, Point2{-1.0, 1.0}};
    ResultTable table({"shape", "a", "psi1_norm", "psi2_norm"});
    for (int shape : c.shapes) {
        const double e = shape == 1 ? 1.0 : 0.5;
        for (double a : c.a_values) {
            const auto domain = IntegrationDomain::along_arc(t, CircularArc{a, {-e, e}, {e, e}});
            const DualBasis psi1 = dual_basis(0, domain);
            const DualBasis psi2 = dual_basis(2, domain);
            table.add_row({std::int64_t{shape}, a, psi1.norm, psi2.norm});
        }
    }
    return table;
}

ResultTable run_decay_demo(const ExperimentConfig& c) {
    validate(c);
    const auto meshes = make_mesh_hierarchy(c);
    const ProblemData problem = make_problem(c);
    const AssembledForms forms = assemble_forms(meshes.back(), problem);
    const TriMesh& coarse = *meshes.front();

    Index node = -1;
    for (Index v = 0; v < coarse.num_vertices(); ++v)
        if (distance(coarse.vertex(v), c.center_node) < 1e-12) node = v;
    if (node < 0 || coarse.boundary_vertex()[node]) throw InputError("center_node is not a free coarse vertex");
    const auto ring = coarse.vertex_triangles(node);
    const std::vector<Index> center(ring.begin(), ring.end());

    ResultTable table({"variant", "layer", "energy", "sup"});
    for (InterpolationVariant variant : c.variants) {
        const auto op = build_interpolation(forms, meshes.front(), problem.network, c.sigma.front(), variant);
        const CorrectorSolver solver(forms, op);
        const Vector phi = solver.node_corrector(node, kGlobalPatch);
        const DecayProfile profile = decay_profile(forms, op, phi, center);
        for (std::size_t l = 0; l < profile.energy.size(); ++l)
            table.add_row({variant_name(variant), static_cast<std::int64_t>(l), profile.energy[l], profile.sup[l]});
    }
    return table;
}

double decay_slope(const ResultTable& decay, const std::string& variant, Index first, Index last) {
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < decay.size(); ++r) {
        if (std::get<std::string>(decay.at(r, "variant")) != variant) continue;
        const auto layer = std::get<std::int64_t>(decay.at(r, "layer"));
        if (layer < first || layer > last) continue;
        xs.push_back(static_cast<double>(layer));
        ys.push_back(std::log(std::get<double>(decay.at(r, "energy"))));
    }
    if (xs.size() < 2) throw InputError("decay_slope: fewer than two layers in range");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ResultTable run_convergence(const ExperimentConfig& c) {
    validate(c);
    const auto meshes = make_mesh_hierarchy(c);
    const ProblemData problem = make_problem(c);
    if (!problem.network.empty() && !trace_fracture(*meshes.front(), problem.network).union_of_edges())
        throw InputError("convergence: fractures must be unions of coarse mesh edges");
    const AssembledForms forms = assemble_forms(meshes.back(), problem);
    const Vector u_ref = solve_reference(forms);
    const SparseMatrix k = forms.K();

    const std::size_t levels = meshes.size() - 1;
    std::vector<double> sizes, lod_err, fem_err;
    std::vector<Index> patch_k;
    for (std::size_t l = 0; l < levels; ++l) {
        const auto op = build_interpolation(forms, meshes[l], problem.network, c.sigma.front(), c.variants.front());
        patch_k.push_back(k_for_level(c, l));
        const CorrectedBasis basis = corrected_basis(forms, op, patch_k.back(), c.threads);
        lod_err.push_back(safe_relative_error(u_ref, lod_solve(forms, basis).fine, k));
        fem_err.push_back(safe_relative_error(u_ref, galerkin_solve(forms, op.prolongation).fine, k));
        sizes.push_back(meshes[l]->mesh_size());
    }
    const Vector lod_eoc = eoc_column(lod_err, sizes);
    const Vector fem_eoc = eoc_column(fem_err, sizes);
    ResultTable table({"level", "H", "nodes", "k", "lod_error", "lod_eoc", "fem_error", "fem_eoc"});
    for (std::size_t l = 0; l < levels; ++l)
        table.add_row({static_cast<std::int64_t>(l), sizes[l], std::int64_t{meshes[l]->num_vertices()},
                       std::int64_t{patch_k[l]}, lod_err[l], lod_eoc[l], fem_err[l], fem_eoc[l]});
    return table;
}

ResultTable run_patch_study(const ExperimentConfig& c) {
    validate(c);
    const auto meshes = make_mesh_hierarchy(c);
    const ProblemData problem = make_problem(c);
    const AssembledForms forms = assemble_forms(meshes.back(), problem);
    const Vector u_ref = solve_reference(forms);
    const SparseMatrix k = forms.K();

    ResultTable table({"series", "variant", "sigma", "k", "fracture_nodes", "error"});
    for (InterpolationVariant variant : c.variants) {
        // Σ only matters for the fracture-aware operator.
        const std::vector<double> sigmas =
            variant == InterpolationVariant::fracture_aware ? c.sigma : std::vector<double>{c.sigma.front()};
        for (double sigma : sigmas) {
            const auto op = build_interpolation(forms, meshes.front(), problem.network, sigma, variant);
            const bool aware = variant == InterpolationVariant::fracture_aware;
            const std::string series = variant_name(variant) + (aware ? "_sigma" + format_time(sigma) : "");
            for (Index patch_k : c.k) {
                const CorrectedBasis basis = corrected_basis(forms, op, patch_k, c.threads);
                const double err = safe_relative_error(u_ref, lod_solve(forms, basis).fine, k);
                table.add_row({series, variant_name(variant), aware ? sigma : kNaN, std::int64_t{patch_k},
                               std::int64_t{op.nodes.num_fracture_nodes()}, err});
            }
        }
    }
    return table;
}

ResultTable run_wave(const ExperimentConfig& c) {
    validate(c);
    const ProblemData problem = make_problem(c);
    const TimeGrid grid{c.tau, c.t_end};
    WaveOptions options;
    options.sample_times = c.sample_times;
    if (c.forcing_cutoff >= 0.0) options.forcing_cutoff = c.forcing_cutoff;

    std::vector<std::string> columns{"n", "H", "k"};
    for (double t : c.sample_times) {
        columns.push_back("error_t" + format_time(t));
        columns.push_back("eoc_t" + format_time(t));
    }
    columns.push_back("energy_drift");

    const std::size_t levels = c.coarse_levels.size();
    std::vector<double> sizes;
    std::vector<std::vector<double>> errors(c.sample_times.size());
    std::vector<double> drift;
    for (std::size_t l = 0; l < levels; ++l) {
        const Index n = c.coarse_levels[l];
        const auto meshes = refine_hierarchy(coarse_mesh(c, n), log2_exact(c.mesh.fine_n / n));
        const AssembledForms forms = assemble_forms(meshes.back(), problem, true);
        const SparseMatrix k = forms.K();
        const auto op = build_interpolation(forms, meshes.front(), problem.network, c.sigma.front(), c.variants.front());
        const CorrectedBasis basis = corrected_basis(forms, op, k_for_level(c, l), c.threads);

        const WaveTrajectory ref = wave_solve_fine(forms, grid, options);
        const WaveTrajectory lod = wave_solve_lod(forms, basis.b, grid, options);
        for (std::size_t s = 0; s < c.sample_times.size(); ++s) {
            const double t = c.sample_times[s];
            const auto at = [&](const WaveTrajectory& tr) -> const Vector& {
                return tr.u[static_cast<std::size_t>(
                    std::find_if(tr.times.begin(), tr.times.end(),
                                 [&](double x) { return std::abs(x - t) <= 1e-12 * std::max(1.0, t); }) -
                    tr.times.begin())];
            };
            errors[s].push_back(safe_relative_error(at(ref), at(lod), k));
        }

        double max_drift = kNaN;
        if (c.energy_check_cutoff >= 0.0) {
            WaveOptions eopt;
            eopt.forcing_cutoff = c.energy_check_cutoff;
            eopt.record_energy = true;
            const WaveTrajectory e = wave_solve_lod(forms, basis.b, grid, eopt);
            max_drift = 0.0;
            // energy[i] is the energy after step i; steps whose start lies after
            // the cutoff carry no load
            for (Index i = 1; i < static_cast<Index>(e.energy.size()); ++i) {
                if ((i - 1) * c.tau <= c.energy_check_cutoff + 1e-12 * c.tau) continue;
                const double prev = e.energy[static_cast<std::size_t>(i - 1)];
                const double cur = e.energy[static_cast<std::size_t>(i)];
                max_drift = std::max(max_drift, prev > 0.0 ? std::abs(cur - prev) / prev : std::abs(cur - prev));
            }
        }
        drift.push_back(max_drift);
        sizes.push_back(meshes.front()->mesh_size());
    }

    std::vector<Vector> eocs;
    for (const auto& e : errors) eocs.push_back(eoc_column(e, sizes));
    ResultTable table(columns);
    for (std::size_t l = 0; l < levels; ++l) {
        std::vector<Cell> row{std::int64_t{c.coarse_levels[l]}, sizes[l], std::int64_t{k_for_level(c, l)}};
        for (std::size_t s = 0; s < errors.size(); ++s) {
            row.push_back(errors[s][l]);
            row.push_back(eocs[s][l]);
        }
        row.push_back(drift[l]);
        table.add_row(std::move(row));
    }
    return table;
}

ResultTable run_mesh_info(const ExperimentConfig& c) {
    validate(c);
    const auto meshes = make_mesh_hierarchy(c);
    const FractureNetwork network = make_network(c);
    ResultTable table({"level", "vertices", "triangles", "h", "min_angle_deg", "trace_pieces", "edge_aligned"});
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = *meshes[l];
        const FractureTrace trace = network.empty() ? FractureTrace({}, m.num_triangles()) : trace_fracture(m, network);
        table.add_row({static_cast<std::int64_t>(l), std::int64_t{m.num_vertices()}, std::int64_t{m.num_triangles()},
                       m.mesh_size(), m.min_angle() * 180.0 / std::numbers::pi, static_cast<std::int64_t>(trace.pieces().size()),
                       std::int64_t{trace.union_of_edges() ? 1 : 0}});
    }
    return table;
}

ResultTable run_experiment(const ExperimentConfig& c) {
    switch (c.kind) {
        case ExperimentKind::dual_norm_table: return run_dual_norm_table(c);
        case ExperimentKind::decay_demo: return run_decay_demo(c);
        case ExperimentKind::convergence: return run_convergence(c);
        case ExperimentKind::patch_study: return run_patch_study(c);
        case ExperimentKind::wave: return run_wave(c);
        case ExperimentKind::mesh_info: return run_mesh_info(c);
    }
    throw InputError("unknown experiment kind");
}

void write_outputs(const ExperimentConfig& c, const ResultTable& table, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
    const std::string stem = to_string(c.kind);
    emit_csv(table, dir / (stem + ".csv"));

    PlotOptions plot;
    plot.title = stem;
    switch (c.kind) {
        case ExperimentKind::dual_norm_table:
            plot.log_x = plot.log_y = true;
            plot.group_by = "shape";
            emit_svg_plot(table, "a", {"psi1_norm", "psi2_norm"}, plot, dir / (stem + ".svg"));
            break;
        case ExperimentKind::decay_demo:
            plot.log_y = true;
            plot.group_by = "variant";
            emit_svg_plot(table, "layer", {"energy"}, plot, dir / (stem + ".svg"));
            break;
        case ExperimentKind::convergence:
            plot.log_x = plot.log_y = true;
            emit_svg_plot(table, "H", {"lod_error", "fem_error"}, plot, dir / (stem + ".svg"));
            break;
        case ExperimentKind::patch_study:
            plot.log_y = true;
            plot.group_by = "series";
            emit_svg_plot(table, "k", {"error"}, plot, dir / (stem + ".svg"));
            break;
        case ExperimentKind::wave: {
            plot.log_x = plot.log_y = true;
            std::vector<std::string> ys;
            for (double t : c.sample_times) ys.push_back("error_t" + format_time(t));
            emit_svg_plot(table, "H", ys, plot, dir / (stem + ".svg"));
            break;
        }
        case ExperimentKind::mesh_info: break;
    }
}

}  // namespace fraclod
