// Command-line front end for the experiment drivers.
//
//   fraclod <subcommand> --config <file.json> --out <dir> [--scale s] [--threads n]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "fraclod/error.hpp"
#include "fraclod/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Options {
    std::string config;
    std::string out;
    double scale = 1.0;
    int threads = -1;
};

void print_table(const fraclod::ResultTable& table) { std::cout << fraclod::to_csv(table); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale solver for fractured media: experiment drivers"};
    app.require_subcommand(1);

    const std::map<std::string, fraclod::ExperimentKind> commands{
        {"dual-norms", fraclod::ExperimentKind::dual_norm_table},
        {"decay", fraclod::ExperimentKind::decay_demo},
        {"convergence", fraclod::ExperimentKind::convergence},
        {"patch-study", fraclod::ExperimentKind::patch_study},
        {"wave", fraclod::ExperimentKind::wave},
        {"mesh-info", fraclod::ExperimentKind::mesh_info},
    };
    Options opt;
    for (const auto& [name, kind] : commands) {
        auto* sub = app.add_subcommand(name, "run the " + fraclod::to_string(kind) + " experiment");
        auto* cfg = sub->add_option("--config", opt.config, "JSON experiment config");
        if (kind != fraclod::ExperimentKind::dual_norm_table) cfg->required();
        sub->add_option("--out", opt.out, "output directory (default: the config's 'output')");
        sub->add_option("--scale", opt.scale, "shrink mesh resolutions by this power of two in (0, 1]");
        sub->add_option("--threads", opt.threads, "corrector worker threads (0 = hardware)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const fraclod::ExperimentKind kind = commands.at(name);
    try {
        fraclod::ExperimentConfig config;
        if (!opt.config.empty()) {
            config = fraclod::load_config(opt.config);
        } else {
            config.kind = kind;
            fraclod::validate(config);
        }
        // mesh-info accepts any config and reports on its meshes
        if (kind == fraclod::ExperimentKind::mesh_info) {
            config.kind = kind;
        } else if (config.kind != kind) {
            throw fraclod::InputError("config kind '" + fraclod::to_string(config.kind) + "' does not match '" +
                                      name + "'");
        }
        if (opt.threads >= 0) config.threads = static_cast<unsigned>(opt.threads);
        config = fraclod::apply_scale(config, opt.scale * config.scale);
        const std::filesystem::path out = opt.out.empty() ? config.output : std::filesystem::path(opt.out);

        const auto start = std::chrono::steady_clock::now();
        const fraclod::ResultTable table = fraclod::run_experiment(config);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fraclod::write_outputs(config, table, out);
        print_table(table);
        std::fprintf(stderr, "%s: %zu rows in %.2f s, written to %s\n", name.c_str(), table.size(), seconds,
                     out.string().c_str());
        return 0;
    } catch (const fraclod::InputError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumericalError;
    }
}
