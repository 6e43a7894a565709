// Command-line front end: simulate ensembles, discover SDEs, run reliability
// studies, or chain all stages from one config file.

#include <sdekit/errors.hpp>
#include <sdekit/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOpts {
    std::string config_file;
    std::string output_dir;
    unsigned threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_file, "Run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("-o,--output-dir", opts.output_dir,
                    "Output directory (default: config value, then $SDEKIT_OUT, then ./out)");
    cmd->add_option("-j,--threads", opts.threads, "Worker thread cap (0 = hardware)");
    cmd->add_option("--set", opts.overrides,
                    "Override a config value, e.g. --set simulate.seed=7 (repeatable)");
}

sdekit::RunConfig load_config(const CommonOpts& opts, const CLI::App* cmd) {
    std::ifstream in(opts.config_file);
    if (!in) throw sdekit::ConfigError("cannot open config file: " + opts.config_file);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw sdekit::ConfigError("config file " + opts.config_file +
                                  " is not valid JSON: " + e.what());
    }
    for (const auto& assignment : opts.overrides) sdekit::apply_override(doc, assignment);

    sdekit::RunConfig cfg = sdekit::parse_run_config(doc);
    if (!opts.output_dir.empty()) {
        cfg.output_dir = opts.output_dir;
    } else if (cfg.output_dir.empty()) {
        const char* env = std::getenv("SDEKIT_OUT");
        cfg.output_dir = (env != nullptr && *env != '\0') ? env : "out";
    }
    if (cmd->count("--threads") > 0) cfg.threads = opts.threads;
    return cfg;
}

void print_equations(const sdekit::DiscoveredSde& disc) {
    for (const auto& rec : disc.equations) {
        const std::string label =
            (rec.kind == sdekit::TargetKind::Drift ? "drift  x" : "diff^2 x") +
            std::to_string(rec.state_index + 1);
        std::cout << "  " << label << " = " << rec.expansion.to_pretty_string();
        if (rec.kinematic)
            std::cout << "  [kinematic]";
        else if (!rec.summary.converged)
            std::cout << "  [not converged]";
        std::cout << "\n";
    }
}

int cmd_simulate(const CommonOpts& opts, const CLI::App* cmd) {
    const sdekit::RunConfig cfg = load_config(opts, cmd);
    const sdekit::Ensemble ens = sdekit::run_simulate(cfg);
    const auto dir = sdekit::write_simulate_outputs(cfg, ens);
    std::cout << "wrote " << ens.n_paths() << " paths (" << ens.paths.front().rows()
              << " rows each) to " << dir.string() << "\n";
    return 0;
}

int cmd_discover(const CommonOpts& opts, const CLI::App* cmd, const std::string& ensemble_dir) {
    const sdekit::RunConfig cfg = load_config(opts, cmd);
    sdekit::Ensemble ens;
    if (!ensemble_dir.empty()) {
        ens = sdekit::read_ensemble(ensemble_dir);
        std::cout << "read " << ens.n_paths() << " paths from " << ensemble_dir << "\n";
    } else {
        ens = sdekit::run_simulate(cfg);
        std::cout << "simulated " << ens.n_paths() << " paths\n";
    }
    const sdekit::DiscoveredSde disc = sdekit::run_discover(cfg, ens);
    const auto file = sdekit::write_discover_outputs(cfg, disc);
    std::cout << "discovered model:\n";
    print_equations(disc);
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int cmd_reliability(const CommonOpts& opts, const CLI::App* cmd, const std::string& model_file,
                    const std::string& compare_file) {
    const sdekit::RunConfig cfg = load_config(opts, cmd);

    const auto curve_of = [&](const std::string& file) {
        if (file.empty()) {
            sdekit::SdeModel model = sdekit::resolve_system(cfg).first;
            return std::make_pair(sdekit::run_reliability(cfg, model),
                                  std::string("curve_true"));
        }
        sdekit::SdeModel model = sdekit::load_model(file);
        const std::string stem = "curve_" + std::filesystem::path(file).stem().string();
        return std::make_pair(sdekit::run_reliability(cfg, model), stem);
    };

    const auto [curve_a, stem_a] = curve_of(model_file);
    auto path_a = sdekit::write_curve_output(cfg, curve_a, stem_a);
    std::cout << "wrote " << path_a.string() << " (pf(T) = " << curve_a.pf.tail(1)(0) << ")\n";

    if (!compare_file.empty()) {
        const auto [curve_b, stem_b] = curve_of(compare_file);
        if (stem_b == stem_a) throw sdekit::ConfigError("comparison model stems collide: " + stem_a);
        auto path_b = sdekit::write_curve_output(cfg, curve_b, stem_b);
        std::cout << "wrote " << path_b.string() << " (pf(T) = " << curve_b.pf.tail(1)(0) << ")\n";
        const sdekit::CurveComparison cmp = sdekit::compare_curves(curve_a, curve_b);
        nlohmann::json prov_a{{"source", model_file.empty() ? "system:" + cfg.system : model_file},
                              {"config_hash", cfg.hash()}};
        nlohmann::json prov_b{{"source", compare_file}, {"config_hash", cfg.hash()}};
        const auto report = sdekit::write_comparison_output(cfg, cmp, prov_a, prov_b);
        std::cout << "sup_diff = " << cmp.sup_diff << ", mean_abs_diff = " << cmp.mean_abs_diff
                  << " -> " << report.string() << "\n";
    }
    return 0;
}

int cmd_pipeline(const CommonOpts& opts, const CLI::App* cmd) {
    const sdekit::RunConfig cfg = load_config(opts, cmd);

    const sdekit::Ensemble ens = sdekit::run_simulate(cfg);
    const auto ens_dir = sdekit::write_simulate_outputs(cfg, ens);
    std::cout << "[1/3] simulated " << ens.n_paths() << " paths -> " << ens_dir.string() << "\n";

    const sdekit::DiscoveredSde disc = sdekit::run_discover(cfg, ens);
    const auto model_file = sdekit::write_discover_outputs(cfg, disc);
    std::cout << "[2/3] discovered model -> " << model_file.string() << "\n";
    print_equations(disc);

    if (!cfg.reliability.enabled) {
        std::cout << "[3/3] reliability not configured; done\n";
        return 0;
    }
    const sdekit::SdeModel reference = sdekit::resolve_system(cfg).first;
    const sdekit::FailureCurve curve_true = sdekit::run_reliability(cfg, reference);
    sdekit::write_curve_output(cfg, curve_true, "curve_true");
    const sdekit::FailureCurve curve_disc = sdekit::run_reliability(cfg, disc.model);
    sdekit::write_curve_output(cfg, curve_disc, "curve_discovered");
    const sdekit::CurveComparison cmp = sdekit::compare_curves(curve_true, curve_disc);
    nlohmann::json prov_true{{"source", cfg.system.empty() ? cfg.model_file.string()
                                                           : "system:" + cfg.system},
                             {"config_hash", cfg.hash()}};
    nlohmann::json prov_disc{{"source", "discovered"}, {"config_hash", cfg.hash()}};
    const auto report = sdekit::write_comparison_output(cfg, cmp, prov_true, prov_disc);
    std::cout << "[3/3] pf(T): true = " << curve_true.pf.tail(1)(0)
              << ", discovered = " << curve_disc.pf.tail(1)(0) << ", sup_diff = " << cmp.sup_diff
              << " -> " << report.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdekit: discover interpretable stochastic differential equations from "
                 "trajectory ensembles and propagate them to first-passage failure curves"};
    app.set_version_flag("--version", "sdekit 0.1.0");
    app.require_subcommand(1);

    CommonOpts sim_opts, disc_opts, rel_opts, pipe_opts;
    std::string ensemble_dir, model_file, compare_file;

    CLI::App* sim = app.add_subcommand("simulate", "Simulate a trajectory ensemble");
    add_common(sim, sim_opts);

    CLI::App* disc = app.add_subcommand("discover", "Fit drift and diffusion equations");
    add_common(disc, disc_opts);
    disc->add_option("--ensemble", ensemble_dir,
                     "Read this ensemble directory instead of simulating");

    CLI::App* rel = app.add_subcommand("reliability", "Estimate a first-passage failure curve");
    add_common(rel, rel_opts);
    rel->add_option("--model", model_file,
                    "Propagate this model file (default: the config's system)")
        ->check(CLI::ExistingFile);
    rel->add_option("--compare", compare_file, "Second model; also writes a comparison report")
        ->check(CLI::ExistingFile);

    CLI::App* pipe = app.add_subcommand("pipeline", "Run simulate, discover, and reliability");
    add_common(pipe, pipe_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts, sim);
        if (disc->parsed()) return cmd_discover(disc_opts, disc, ensemble_dir);
        if (rel->parsed()) return cmd_reliability(rel_opts, rel, model_file, compare_file);
        if (pipe->parsed()) return cmd_pipeline(pipe_opts, pipe);
    } catch (const sdekit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sdekit::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const sdekit::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sdekit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
