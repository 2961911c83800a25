#pragma once

#include "fraclod/coefficients.hpp"
#include "fraclod/fem.hpp"
#include "fraclod/interpolation.hpp"
#include "fraclod/table.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fraclod {

enum class ExperimentKind { dual_norm_table, decay_demo, convergence, patch_study, wave, mesh_info };

std::string to_string(ExperimentKind kind);

/// Nested mesh pair. Either structured (coarse_n, fine_n powers of two with
/// fine_n / coarse_n = 2^r) or an unstructured coarse mesh (built-in name or
/// file) refined `refinements` times.
struct MeshConfig {
    Index coarse_n = 8;
    Index fine_n = 64;
    std::string builtin;  // e.g. "two_layer_unstructured"
    std::filesystem::path file;
    Index refinements = 0;
    std::uint64_t seed = 7;

    bool structured() const { return builtin.empty() && file.empty(); }
};

/// Random piecewise constant coefficient. One seed gives a single field,
/// several seeds give a layered field (layer i of the network uses seeds[i]).
struct CoefficientConfig {
    Index n = 64;
    double lo = 0.1;
    double hi = 0.9;
    std::vector<std::uint64_t> seeds{1};
    double constant = 0.0;  // > 0 selects a constant coefficient instead
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::convergence;
    MeshConfig mesh;
    /// Built-in geometry name or empty when `fracture_file` is used.
    std::string geometry = "none";
    std::filesystem::path fracture_file;
    CoefficientConfig coefficient;
    std::vector<InterfaceConstants> interfaces;  // one entry applies to all polylines
    ScalarField source = ScalarField::constant(0.0);
    double density = 1.0;

    std::vector<InterpolationVariant> variants{InterpolationVariant::fracture_aware};
    std::vector<double> sigma{500.0};
    /// Patch sizes: the sweep of patch_study, or one per level (a single
    /// entry is broadcast) for convergence and wave.
    std::vector<Index> k{2};
    unsigned threads = 0;

    // dual_norm_table
    std::vector<int> shapes{1, 2};
    std::vector<double> a_values{2.0, 20.0, 200.0, 2000.0};

    // decay_demo
    Point2 center_node{0.5, 0.5};
    Index fit_first = 2;
    Index fit_last = 5;

    // wave
    std::vector<Index> coarse_levels;  // coarse n list
    double tau = 5e-3;
    double t_end = 0.1;
    std::vector<double> sample_times{0.1};
    double forcing_cutoff = -1.0;        // < 0: forcing always on
    double energy_check_cutoff = -1.0;   // < 0: no energy run

    std::filesystem::path output = "out";
    /// Applied by apply_scale(); the drivers take resolutions as given.
    double scale = 1.0;
};

/// Parses and validates a JSON config. Relative paths are resolved against
/// `base_dir`. Throws InputError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Checks ranges and referenced files. Called by every driver before any
/// computation.
void validate(const ExperimentConfig& config);
/// Shrinks the mesh resolutions by `scale` (a power of two in (0, 1]).
ExperimentConfig apply_scale(ExperimentConfig config, double scale);

/// Problem data (coefficient, sources, network) described by a config.
ProblemData make_problem(const ExperimentConfig& config);
/// Coarse mesh and its nested refinements, finest last.
std::vector<std::shared_ptr<const TriMesh>> make_mesh_hierarchy(const ExperimentConfig& config);

/// Rows (shape, a, psi1_norm, psi2_norm) for the arc-shaped domains in the
/// triangle (0,0), (1,1), (-1,1); psi1 belongs to (0,0), psi2 to (-1,1).
ResultTable run_dual_norm_table(const ExperimentConfig& config);
/// Rows (variant, layer, energy, sup) for the global corrector of the
/// basis function at `center_node`.
ResultTable run_decay_demo(const ExperimentConfig& config);
/// Least-squares slope of log(energy) over layers [first, last] of one
/// variant of a decay table.
double decay_slope(const ResultTable& decay, const std::string& variant, Index first, Index last);
/// Rows (level, H, nodes, k, lod_error, lod_eoc, fem_error, fem_eoc) against
/// the finest level.
ResultTable run_convergence(const ExperimentConfig& config);
/// Rows (series, variant, sigma, k, fracture_nodes, error); sigma is nan for
/// the element-based operator.
ResultTable run_patch_study(const ExperimentConfig& config);
/// Rows (n, H, k, error_t<t>, eoc_t<t> per sample time, energy_drift).
ResultTable run_wave(const ExperimentConfig& config);
/// Rows (level, vertices, triangles, h, min_angle_deg, trace_pieces,
/// edge_aligned) for the mesh hierarchy.
ResultTable run_mesh_info(const ExperimentConfig& config);

ResultTable run_experiment(const ExperimentConfig& config);

/// Writes <kind>.csv and <kind>.svg into `dir` (created if missing).
void write_outputs(const ExperimentConfig& config, const ResultTable& table, const std::filesystem::path& dir);

}  // namespace fraclod
