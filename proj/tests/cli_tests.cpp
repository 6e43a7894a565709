// End-to-end checks of the command-line tool: each test invokes the real
// binary through the shell and inspects exit codes and written artifacts.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sdekit/io.hpp>
#include <sdekit/model.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef SDEKIT_CLI_PATH
#error "SDEKIT_CLI_PATH must be defined by the build"
#endif

#ifdef _WIN32
#define WEXITSTATUS(x) (x)
#define WIFEXITED(x) 1
#else
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sdekit_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr combined
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path log = scratch / "cli_output.log";
    const std::string cmd =
        std::string("\"") + SDEKIT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
    const fs::path file = dir / "config.json";
    std::ofstream(file) << cfg.dump(2) << "\n";
    return file;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

/// A scalar mean-reverting model saved to disk, used as a cheap `model_file`.
fs::path write_ou_model(const fs::path& dir) {
    sdekit::SdeModel m;
    m.dim = 1;
    m.label = "ou-test";
    m.drift.resize(1);
    m.drift[0].dim = 1;
    m.drift[0].terms = {{sdekit::BasisTerm::monomial(0, 1), -2.0}};
    m.diffusion.resize(1);
    m.diffusion[0].expansion.dim = 1;
    m.diffusion[0].expansion.terms = {{sdekit::BasisTerm::constant(), 0.8}};
    const fs::path file = dir / "ou_model.json";
    sdekit::save_model(m, file);
    return file;
}

json ou_base_config(const fs::path& model_file) {
    json cfg;
    cfg["model_file"] = model_file.string();
    cfg["simulate"] = {{"dt", 0.01}, {"horizon", 1.0}, {"n_paths", 30},
                       {"seed", 4},  {"x0", {0.5}}};
    cfg["dictionary"] = {{"poly_order", 2}};
    cfg["discovery"] = {{"drift_states", {1}}, {"diffusion_states", {1}}};
    return cfg;
}

// Extracts the value of "config_hash=..." from a CSV comment line.
std::string hash_from_comment(const std::string& line) {
    const std::string key = "config_hash=";
    const auto pos = line.find(key);
    REQUIRE(pos != std::string::npos);
    std::string tail = line.substr(pos + key.size());
    const auto space = tail.find(' ');
    if (space != std::string::npos) tail = tail.substr(0, space);
    while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) tail.pop_back();
    return tail;
}

} // namespace

TEST_CASE("the version flag reports the tool banner") {
    const fs::path dir = work_dir("version");
    const CliResult r = run_cli("--version", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("sdekit") != std::string::npos);
}

TEST_CASE("running without a subcommand is a usage error") {
    const fs::path dir = work_dir("noargs");
    CHECK(run_cli("", dir).exit_code == 2);
    CHECK(run_cli("frobnicate", dir).exit_code == 2);
    // Missing required --config is also a parse error.
    CHECK(run_cli("simulate", dir).exit_code == 2);
}

TEST_CASE("simulate writes the configured ensemble and reruns byte-identically") {
    const fs::path dir = work_dir("simulate");
    json cfg;
    cfg["system"] = "duffing_sdof";
    cfg["simulate"] = {{"dt", 0.001},         {"horizon", 1.0}, {"n_paths", 500},
                       {"seed", 27},          {"noise_percent", 5.0}};
    const fs::path cfg_file = write_config(dir, cfg);

    const fs::path out_a = dir / "a";
    const CliResult r = run_cli("simulate -c \"" + cfg_file.string() + "\" -o \"" +
                                    out_a.string() + "\"",
                                dir);
    CHECK(r.exit_code == 0);

    const json manifest = json::parse(slurp(out_a / "ensemble" / "manifest.json"));
    CHECK(manifest.at("format") == "sde-ensemble-v1");
    CHECK(manifest.at("n_paths") == 500);
    CHECK(manifest.at("rows_per_path") == 1001);
    CHECK(manifest.at("dim") == 2);

    const std::string path0 = slurp(out_a / "ensemble" / "path_0.csv");
    CHECK(count_lines(path0) == 1002); // header + 1001 samples

    // Same config, fresh output directory: every byte reproduces.
    const fs::path out_b = dir / "b";
    CHECK(run_cli("simulate -c \"" + cfg_file.string() + "\" -o \"" + out_b.string() + "\"",
                  dir)
              .exit_code == 0);
    CHECK(slurp(out_b / "ensemble" / "manifest.json") ==
          slurp(out_a / "ensemble" / "manifest.json"));
    CHECK(slurp(out_b / "ensemble" / "path_0.csv") == path0);
    CHECK(slurp(out_b / "ensemble" / "path_499.csv") ==
          slurp(out_a / "ensemble" / "path_499.csv"));
}

TEST_CASE("command-line overrides rewrite config values") {
    const fs::path dir = work_dir("override");
    const fs::path model = write_ou_model(dir);
    json cfg = ou_base_config(model);
    cfg["simulate"]["horizon"] = 0.1;
    const fs::path cfg_file = write_config(dir, cfg);

    const fs::path out = dir / "out";
    const CliResult r = run_cli("simulate -c \"" + cfg_file.string() + "\" -o \"" +
                                    out.string() + "\" --set simulate.n_paths=3",
                                dir);
    CHECK(r.exit_code == 0);
    const json manifest = json::parse(slurp(out / "ensemble" / "manifest.json"));
    CHECK(manifest.at("n_paths") == 3);
}

TEST_CASE("a horizon that is not a whole number of steps names the field") {
    const fs::path dir = work_dir("badhorizon");
    json cfg;
    cfg["system"] = "duffing_sdof";
    cfg["simulate"] = {{"dt", 0.001}, {"horizon", 0.0015}, {"n_paths", 5}, {"seed", 1}};
    const fs::path cfg_file = write_config(dir, cfg);
    const CliResult r = run_cli("simulate -c \"" + cfg_file.string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("simulate.horizon") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
    const fs::path dir = work_dir("unknownkey");
    json cfg;
    cfg["system"] = "duffing_sdof";
    cfg["simulat"] = {{"dt", 0.001}};
    const fs::path cfg_file = write_config(dir, cfg);
    const CliResult r = run_cli("simulate -c \"" + cfg_file.string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("simulat") != std::string::npos);
}

TEST_CASE("discover rejects an empty ensemble directory") {
    const fs::path dir = work_dir("emptyens");
    const fs::path model = write_ou_model(dir);
    const fs::path cfg_file = write_config(dir, ou_base_config(model));
    const fs::path empty = dir / "ensemble_empty";
    fs::create_directories(empty);
    const CliResult r = run_cli("discover -c \"" + cfg_file.string() + "\" --ensemble \"" +
                                    empty.string() + "\"",
                                dir);
    CHECK(r.exit_code == 2);
}

TEST_CASE("discover fits a scalar model and writes the posterior artifacts") {
    const fs::path dir = work_dir("discover");
    const fs::path model = write_ou_model(dir);
    const fs::path cfg_file = write_config(dir, ou_base_config(model));
    const fs::path out = dir / "out";
    const CliResult r =
        run_cli("discover -c \"" + cfg_file.string() + "\" -o \"" + out.string() + "\"", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("discovered model:") != std::string::npos);

    CHECK(fs::exists(out / "discovered.json"));
    CHECK(fs::exists(out / "pip_drift_x1.csv"));
    CHECK(fs::exists(out / "elbo_drift_x1.csv"));
    CHECK(fs::exists(out / "pip_diffusion_x1.csv"));
    CHECK(fs::exists(out / "elbo_diffusion_x1.csv"));

    // The discovery document is loadable as a model, and records provenance.
    const sdekit::SdeModel loaded = sdekit::load_model(out / "discovered.json");
    CHECK(loaded.dim == 1);
    const json doc = json::parse(slurp(out / "discovered.json"));
    CHECK(doc.at("format") == "sde-discovery-v1");
    CHECK(doc.at("provenance").contains("config_hash"));
}

TEST_CASE("reliability without a threshold is a config error") {
    const fs::path dir = work_dir("nothreshold");
    const fs::path model = write_ou_model(dir);
    json cfg = ou_base_config(model);
    cfg["reliability"] = {{"T", 1.0}, {"n_paths", 200}};
    const fs::path cfg_file = write_config(dir, cfg);
    const CliResult r = run_cli("reliability -c \"" + cfg_file.string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("reliability.threshold") != std::string::npos);
}

TEST_CASE("reliability writes one row per report stride") {
    const fs::path dir = work_dir("relgrid");
    const fs::path model = write_ou_model(dir);
    json cfg = ou_base_config(model);
    cfg["reliability"] = {{"threshold", 0.2}, {"state_index", 1},    {"T", 30.0},
                          {"dt", 0.01},       {"n_paths", 100},      {"seed", 7},
                          {"report_stride", 0.1}};
    const fs::path cfg_file = write_config(dir, cfg);
    const fs::path out = dir / "out";
    const CliResult r =
        run_cli("reliability -c \"" + cfg_file.string() + "\" -o \"" + out.string() + "\"", dir);
    CHECK(r.exit_code == 0);

    const std::string curve = slurp(out / "curve_true.csv");
    const auto total = count_lines(curve);
    CHECK(total == 303); // comment + header + 301 grid rows (t = 0, 0.1, ..., 30)
    CHECK(curve.rfind("# seed=7", 0) == 0);
    CHECK(curve.find("\nt,pf,ci_lo,ci_hi\n") != std::string::npos);
    CHECK(curve.find("\n30,") != std::string::npos);
}

TEST_CASE("the pipeline chains every stage and stamps one config hash") {
    const fs::path dir = work_dir("pipeline");
    const fs::path model = write_ou_model(dir);
    json cfg = ou_base_config(model);
    cfg["simulate"]["horizon"] = 2.0;
    cfg["simulate"]["n_paths"] = 40;
    cfg["reliability"] = {{"threshold", 0.2}, {"state_index", 1}, {"T", 5.0},
                          {"dt", 0.01},       {"n_paths", 200},   {"seed", 7},
                          {"report_stride", 0.5}};
    const fs::path cfg_file = write_config(dir, cfg);
    const fs::path out = dir / "out";
    const CliResult r =
        run_cli("pipeline -c \"" + cfg_file.string() + "\" -o \"" + out.string() + "\"", dir);
    CHECK(r.exit_code == 0);

    CHECK(fs::exists(out / "ensemble" / "manifest.json"));
    CHECK(fs::exists(out / "discovered.json"));
    CHECK(fs::exists(out / "curve_true.csv"));
    CHECK(fs::exists(out / "curve_discovered.csv"));
    CHECK(fs::exists(out / "comparison.json"));

    // One hash everywhere: manifest, discovery provenance, both curve headers.
    const json manifest = json::parse(slurp(out / "ensemble" / "manifest.json"));
    const std::string expected = manifest.at("config_hash").get<std::string>();
    const json doc = json::parse(slurp(out / "discovered.json"));
    CHECK(doc.at("provenance").at("config_hash").get<std::string>() == expected);
    const std::string tcurve = slurp(out / "curve_true.csv");
    CHECK(hash_from_comment(tcurve.substr(0, tcurve.find('\n'))) == expected);
    const std::string dcurve = slurp(out / "curve_discovered.csv");
    CHECK(hash_from_comment(dcurve.substr(0, dcurve.find('\n'))) == expected);
    const json cmp = json::parse(slurp(out / "comparison.json"));
    CHECK(cmp.at("format") == "curve-comparison-v1");
    CHECK(cmp.at("curve_a").at("config_hash").get<std::string>() == expected);
}

TEST_CASE("a failure after the first stage keeps its artifacts") {
    const fs::path dir = work_dir("midfail");
    const fs::path model = write_ou_model(dir);
    json cfg = ou_base_config(model);
    cfg["simulate"]["horizon"] = 0.2;
    cfg["simulate"]["n_paths"] = 10;
    // An explicit dictionary with a duplicated column: simulation succeeds,
    // discovery then rejects the dictionary.
    const json lin = {{"kind", "monomial"}, {"indices", {{0, 1}}}, {"weight", 0.0}};
    cfg["dictionary"] = json::array({lin, lin});
    const fs::path cfg_file = write_config(dir, cfg);
    const fs::path out = dir / "out";
    const CliResult r =
        run_cli("pipeline -c \"" + cfg_file.string() + "\" -o \"" + out.string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK(fs::exists(out / "ensemble" / "manifest.json")); // stage 1 retained
    CHECK_FALSE(fs::exists(out / "discovered.json"));      // stage 2 never completed
}
