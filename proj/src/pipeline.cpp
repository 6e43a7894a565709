#include "sdekit/pipeline.hpp"

#include "sdekit/errors.hpp"
#include "sdekit/rng.hpp"
#include "sdekit/simulate.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <utility>

namespace sdekit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where + " must be an object");
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.find(it.key()) == allowed.end())
            fail("unknown key '" + it.key() + "' in " + where);
}

/// Accessor for one (possibly absent) config section with dotted error paths.
struct Section {
    const json* obj = nullptr;
    std::string name;

    bool has(const char* key) const { return obj != nullptr && obj->contains(key); }
    std::string path(const char* key) const { return name.empty() ? key : name + "." + key; }
    const json& at(const char* key) const { return obj->at(key); }

    double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        if (!at(key).is_number()) fail(path(key) + " must be a number");
        return at(key).get<double>();
    }

    double positive(const char* key, double fallback) const {
        const double v = number(key, fallback);
        if (!(v > 0.0)) fail(path(key) + " must be positive");
        return v;
    }

    std::uint64_t uinteger(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
            fail(path(key) + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!at(key).is_boolean()) fail(path(key) + " must be true or false");
        return at(key).get<bool>();
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!at(key).is_string()) fail(path(key) + " must be a string");
        return at(key).get<std::string>();
    }
};

Section section_of(const json& j, const char* key) {
    Section s;
    s.name = key;
    if (j.contains(key)) {
        expect_object(j.at(key), key);
        s.obj = &j.at(key);
    }
    return s;
}

int to_zero_based(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where + " must be an integer state index");
    const auto idx = v.get<long long>();
    if (idx < 1) fail(where + " uses 1-based state indices (x1 is index 1)");
    return static_cast<int>(idx - 1);
}

std::vector<int> state_list(const Section& s, const char* key) {
    std::vector<int> out;
    if (!s.has(key)) return out;
    const json& v = s.at(key);
    if (!v.is_array()) fail(s.path(key) + " must be an array of state indices");
    out.reserve(v.size());
    for (const auto& el : v) out.push_back(to_zero_based(el, s.path(key)));
    return out;
}

std::optional<Eigen::VectorXd> state_vector(const Section& s, const char* key) {
    if (!s.has(key)) return std::nullopt;
    const json& v = s.at(key);
    if (!v.is_array() || v.empty()) fail(s.path(key) + " must be a non-empty array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(s.path(key) + " must contain only numbers");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
}

void check_whole_multiple(double horizon, double dt, const std::string& field) {
    const auto k = std::llround(horizon / dt);
    if (k < 1 || std::abs(static_cast<double>(k) * dt - horizon) >
                     1e-9 * std::max(1.0, std::abs(horizon)))
        fail(field + " must be a whole number of dt steps");
}

void parse_dictionary(const json& j, DiscoveryConfig& out) {
    if (!j.contains("dictionary")) return;
    const json& d = j.at("dictionary");
    if (d.is_array()) {
        for (const auto& el : d) out.explicit_columns.push_back(term_from_json(el).first);
        if (out.explicit_columns.empty()) fail("dictionary column list is empty");
        return;
    }
    expect_object(d, "dictionary");
    check_keys(d, {"poly_order", "signum", "abs", "x_abs_x", "sin", "cos"}, "dictionary");
    Section s{&d, "dictionary"};
    const double order = s.number("poly_order", 0.0);
    if (order != std::floor(order) || order < 0.0) fail("dictionary.poly_order must be a non-negative integer");
    out.dict_cfg.poly_order = static_cast<int>(order);
    out.dict_cfg.include_signum = s.boolean("signum", false);
    out.dict_cfg.include_abs = s.boolean("abs", false);
    out.dict_cfg.include_x_abs_x = s.boolean("x_abs_x", false);
    out.dict_cfg.include_sin = s.boolean("sin", false);
    out.dict_cfg.include_cos = s.boolean("cos", false);
}

void parse_vb(const json& j, SsHyperparams& h) {
    Section s = section_of(j, "vb");
    if (s.obj)
        check_keys(*s.obj,
                   {"v_s", "a_sigma", "b_sigma", "p0", "rho", "tau_init", "pip_threshold",
                    "max_iters"},
                   "vb");
    h.v_s = s.positive("v_s", h.v_s);
    h.a_sigma = s.positive("a_sigma", h.a_sigma);
    h.b_sigma = s.positive("b_sigma", h.b_sigma);
    h.p0 = s.number("p0", h.p0);
    h.rho = s.positive("rho", h.rho);
    h.tau_init = s.positive("tau_init", h.tau_init);
    h.pip_threshold = s.number("pip_threshold", h.pip_threshold);
    h.max_iters = static_cast<int>(s.uinteger("max_iters", static_cast<std::uint64_t>(h.max_iters)));
    h.validate();
}

void parse_discovery(const json& j, DiscoveryConfig& out) {
    Section s = section_of(j, "discovery");
    if (!s.obj) return;
    check_keys(*s.obj,
               {"drift_states", "diffusion_states", "kinematic_pairs", "drift_correction",
                "half_factor", "chunk"},
               "discovery");
    out.drift_states = state_list(s, "drift_states");
    out.diffusion_states = state_list(s, "diffusion_states");
    if (s.has("kinematic_pairs")) {
        const json& kp = s.at("kinematic_pairs");
        if (!kp.is_object())
            fail("discovery.kinematic_pairs must map displacement indices to velocity indices");
        for (const auto& [key, value] : kp.items()) {
            std::size_t pos = 0;
            long long disp = 0;
            try {
                disp = std::stoll(key, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != key.size() || disp < 1)
                fail("discovery.kinematic_pairs keys must be 1-based state indices, got '" + key +
                     "'");
            out.kinematic_pairs[static_cast<int>(disp - 1)] =
                to_zero_based(value, "discovery.kinematic_pairs");
        }
    }
    out.diffusion_drift_correction = s.boolean("drift_correction", out.diffusion_drift_correction);
    out.km.half_factor = s.boolean("half_factor", out.km.half_factor);
    out.chunk = static_cast<Eigen::Index>(s.uinteger("chunk", static_cast<std::uint64_t>(out.chunk)));
    if (out.chunk < 1) fail("discovery.chunk must be positive");
}

std::filesystem::path require_output_dir(const RunConfig& cfg) {
    if (cfg.output_dir.empty()) fail("output_dir is not set");
    std::filesystem::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

} // namespace

RunConfig parse_run_config(const json& j) {
    expect_object(j, "config");
    check_keys(j,
               {"system", "model_file", "simulate", "dictionary", "vb", "discovery",
                "reliability", "output_dir", "threads"},
               "config");

    RunConfig cfg;
    cfg.raw = j;

    Section top{&j, ""};
    cfg.system = top.text("system", "");
    cfg.model_file = top.text("model_file", "");
    if (!cfg.system.empty() && !cfg.model_file.empty())
        fail("config sets both 'system' and 'model_file'; choose one");
    if (cfg.system.empty() && cfg.model_file.empty())
        fail("config needs either 'system' (built-in name) or 'model_file'");
    if (!cfg.system.empty()) builtin_from_string(cfg.system); // validates the name

    Section sim = section_of(j, "simulate");
    if (sim.obj)
        check_keys(*sim.obj,
                   {"dt", "horizon", "n_paths", "seed", "noise_percent", "noise_states", "x0"},
                   "simulate");
    cfg.simulate.dt = sim.positive("dt", cfg.simulate.dt);
    cfg.simulate.horizon = sim.positive("horizon", cfg.simulate.horizon);
    check_whole_multiple(cfg.simulate.horizon, cfg.simulate.dt, "simulate.horizon");
    cfg.simulate.n_paths = static_cast<std::size_t>(
        sim.uinteger("n_paths", static_cast<std::uint64_t>(cfg.simulate.n_paths)));
    if (cfg.simulate.n_paths == 0) fail("simulate.n_paths must be positive");
    cfg.simulate.seed = sim.uinteger("seed", cfg.simulate.seed);
    cfg.simulate.noise_percent = sim.number("noise_percent", 0.0);
    if (cfg.simulate.noise_percent < 0.0) fail("simulate.noise_percent must be non-negative");
    cfg.simulate.noise_states = state_list(sim, "noise_states");
    cfg.simulate.x0 = state_vector(sim, "x0");

    parse_dictionary(j, cfg.discovery);
    parse_vb(j, cfg.discovery.hyper);
    parse_discovery(j, cfg.discovery);

    Section rel = section_of(j, "reliability");
    if (rel.obj) {
        check_keys(*rel.obj,
                   {"enabled", "threshold", "state_index", "abs", "T", "dt", "n_paths", "seed",
                    "report_stride", "x0"},
                   "reliability");
        cfg.reliability.enabled = rel.boolean("enabled", true);
    }
    if (cfg.reliability.enabled) {
        if (!rel.has("threshold")) fail("reliability.threshold is required");
        cfg.reliability.threshold = rel.number("threshold", 0.0);
        if (rel.has("state_index"))
            cfg.reliability.state_index = to_zero_based(rel.at("state_index"), "reliability.state_index");
        cfg.reliability.use_abs = rel.boolean("abs", false);
        cfg.reliability.horizon = rel.positive("T", cfg.reliability.horizon);
        if (rel.has("dt")) cfg.reliability.dt = rel.positive("dt", 0.0);
        check_whole_multiple(cfg.reliability.horizon, cfg.reliability_dt(), "reliability.T");
        cfg.reliability.n_paths = static_cast<std::size_t>(
            rel.uinteger("n_paths", static_cast<std::uint64_t>(cfg.reliability.n_paths)));
        if (cfg.reliability.n_paths < 100) fail("reliability.n_paths must be at least 100");
        cfg.reliability.seed = rel.uinteger("seed", cfg.reliability.seed);
        cfg.reliability.report_stride = rel.positive("report_stride", cfg.reliability.report_stride);
        cfg.reliability.x0 = state_vector(rel, "x0");
    }

    cfg.output_dir = top.text("output_dir", "");
    cfg.threads = static_cast<unsigned>(top.uinteger("threads", 0));
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        fail("override must look like section.key=value, got '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    for (auto& ch : path)
        if (ch == '.') ch = '/';
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value; // bare strings stay strings
    }
    try {
        doc[json::json_pointer("/" + path)] = parsed;
    } catch (const json::exception& e) {
        fail("cannot apply override '" + assignment + "': " + e.what());
    }
}

std::pair<SdeModel, Eigen::VectorXd> resolve_system(const RunConfig& cfg) {
    if (!cfg.system.empty()) return builtin_system(builtin_from_string(cfg.system));
    SdeModel model = load_model(cfg.model_file);
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(model.dim);
    return {std::move(model), std::move(origin)};
}

json provenance_json(const RunConfig& cfg) {
    json p;
    p["config_hash"] = cfg.hash();
    p["config"] = cfg.raw;
    return p;
}

Ensemble run_simulate(const RunConfig& cfg) {
    auto [model, default_x0] = resolve_system(cfg);
    const Eigen::VectorXd x0 = cfg.simulate.x0.value_or(default_x0);
    if (x0.size() != model.dim)
        fail("simulate.x0 has " + std::to_string(x0.size()) + " entries for a " +
             std::to_string(model.dim) + "-state system");
    for (int s : cfg.simulate.noise_states)
        if (s < 0 || s >= model.dim) fail("simulate.noise_states index out of range");

    Ensemble ens = simulate_ensemble(model, x0, cfg.simulate.dt, cfg.simulate.horizon,
                                     cfg.simulate.n_paths, cfg.simulate.seed, cfg.threads);
    if (cfg.simulate.noise_percent > 0.0) {
        // Disjoint from the per-path child-seed indices 0..n_paths-1.
        const std::uint64_t noise_seed = child_seed(cfg.simulate.seed, 0xffffffffULL);
        ens = cfg.simulate.noise_states.empty()
                  ? add_measurement_noise(ens, cfg.simulate.noise_percent, noise_seed)
                  : add_measurement_noise(ens, cfg.simulate.noise_percent, noise_seed,
                                          cfg.simulate.noise_states);
    }
    return ens;
}

DiscoveredSde run_discover(const RunConfig& cfg, const Ensemble& ens) {
    cfg.discovery.validate(ens.dim());
    return discover_sde(ens, cfg.discovery);
}

FailureCurve run_reliability(const RunConfig& cfg, const SdeModel& model) {
    if (!cfg.reliability.enabled) fail("config has no reliability section");
    Eigen::VectorXd x0;
    if (cfg.reliability.x0)
        x0 = *cfg.reliability.x0;
    else if (cfg.simulate.x0)
        x0 = *cfg.simulate.x0;
    else if (!cfg.system.empty())
        x0 = builtin_system(builtin_from_string(cfg.system)).second;
    else
        x0 = Eigen::VectorXd::Zero(model.dim);
    if (x0.size() != model.dim)
        fail("reliability x0 has " + std::to_string(x0.size()) + " entries for a " +
             std::to_string(model.dim) + "-state system");
    if (cfg.reliability.state_index >= model.dim)
        fail("reliability.state_index is out of range for a " + std::to_string(model.dim) +
             "-state system");
    const LimitState ls{cfg.reliability.state_index, cfg.reliability.threshold,
                        cfg.reliability.use_abs};
    return failure_probability(model, x0, cfg.reliability_dt(), cfg.reliability.horizon,
                               cfg.reliability.n_paths, ls, cfg.reliability.seed,
                               cfg.reliability.report_stride, cfg.threads);
}

std::filesystem::path write_simulate_outputs(const RunConfig& cfg, const Ensemble& ens) {
    const auto dir = require_output_dir(cfg) / "ensemble";
    write_ensemble(dir, ens, cfg.hash());
    return dir;
}

std::filesystem::path write_discover_outputs(const RunConfig& cfg, const DiscoveredSde& disc) {
    const auto dir = require_output_dir(cfg);
    const auto file = dir / "discovered.json";
    save_discovered(disc, provenance_json(cfg), file);
    for (const auto& rec : disc.equations) {
        const std::string slug = equation_slug(rec);
        write_pip_csv(dir / ("pip_" + slug + ".csv"), rec, cfg.hash());
        if (!rec.kinematic)
            write_elbo_csv(dir / ("elbo_" + slug + ".csv"), rec.summary.elbo_trace, cfg.hash());
    }
    return file;
}

std::filesystem::path write_curve_output(const RunConfig& cfg, const FailureCurve& curve,
                                         const std::string& stem) {
    const auto file = require_output_dir(cfg) / (stem + ".csv");
    write_curve_csv(file, curve, cfg.hash());
    return file;
}

std::filesystem::path write_comparison_output(const RunConfig& cfg, const CurveComparison& cmp,
                                              const json& provenance_a,
                                              const json& provenance_b) {
    const auto file = require_output_dir(cfg) / "comparison.json";
    const json doc = comparison_to_json(cmp, provenance_a, provenance_b);
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << doc.dump(2) << "\n";
    return file;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
    PipelineResult result;
    result.ensemble = run_simulate(cfg);
    result.discovered = run_discover(cfg, result.ensemble);
    if (cfg.reliability.enabled) {
        const SdeModel reference = resolve_system(cfg).first;
        result.curve_true = run_reliability(cfg, reference);
        result.curve_discovered = run_reliability(cfg, result.discovered.model);
        result.comparison = compare_curves(*result.curve_true, *result.curve_discovered);
    }
    return result;
}

} // namespace sdekit
