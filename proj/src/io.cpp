#include "sdekit/io.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sdekit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const json& j) {
    const std::uint64_t h = fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json term_to_json(const BasisTerm& term, double weight) {
    json rec;
    rec["kind"] = to_string(term.kind);
    if (term.kind == BasisKind::Monomial) {
        json idx = json::array();
        for (const auto& [c, e] : term.powers) idx.push_back(json::array({c, e}));
        rec["indices"] = idx;
    } else if (term.kind == BasisKind::Constant) {
        rec["indices"] = json::array();
    } else {
        rec["indices"] = json::array({term.component});
    }
    rec["degree"] = term.degree();
    rec["weight"] = weight;
    return rec;
}

std::pair<BasisTerm, double> term_from_json(const json& j) {
    try {
        const BasisKind kind = basis_kind_from_string(j.at("kind").get<std::string>());
        const double weight = j.at("weight").get<double>();
        BasisTerm term;
        switch (kind) {
        case BasisKind::Constant:
            term = BasisTerm::constant();
            break;
        case BasisKind::Monomial: {
            std::vector<std::pair<int, int>> powers;
            for (const auto& p : j.at("indices"))
                powers.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
            term = BasisTerm::monomial(std::move(powers));
            break;
        }
        default: {
            const auto& idx = j.at("indices");
            if (!idx.is_array() || idx.size() != 1)
                throw FormatError("single-component term needs exactly one index");
            const int c = idx.at(0).get<int>();
            switch (kind) {
            case BasisKind::Signum: term = BasisTerm::signum(c); break;
            case BasisKind::Absolute: term = BasisTerm::absolute(c); break;
            case BasisKind::XAbsX: term = BasisTerm::x_abs_x(c); break;
            case BasisKind::Sine: term = BasisTerm::sine(c); break;
            case BasisKind::Cosine: term = BasisTerm::cosine(c); break;
            default: break;
            }
        }
        }
        if (j.contains("degree") && j.at("degree").get<int>() != term.degree())
            throw FormatError("term degree does not match its definition");
        return {term, weight};
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed term record: ") + e.what());
    }
}

namespace {
json expansion_to_json(const BasisExpansion& e) {
    json arr = json::array();
    for (const auto& [term, weight] : e.terms) arr.push_back(term_to_json(term, weight));
    return arr;
}

BasisExpansion expansion_from_json(const json& arr, int dim) {
    BasisExpansion e;
    e.dim = dim;
    for (const auto& rec : arr) {
        auto [term, weight] = term_from_json(rec);
        e.terms.emplace_back(std::move(term), weight);
    }
    return e;
}
} // namespace

json model_to_json(const SdeModel& model) {
    json j;
    j["format"] = "sde-model-v1";
    j["dim"] = model.dim;
    j["label"] = model.label;
    json drift = json::array();
    for (const auto& e : model.drift) drift.push_back(expansion_to_json(e));
    j["drift"] = drift;
    json diffusion = json::array();
    for (const auto& d : model.diffusion) {
        json entry;
        entry["sqrt_form"] = d.sqrt_form;
        entry["terms"] = expansion_to_json(d.expansion);
        diffusion.push_back(entry);
    }
    j["diffusion"] = diffusion;
    return j;
}

SdeModel model_from_json(const json& j) {
    try {
        if (j.value("format", "") != "sde-model-v1")
            throw FormatError("not a model document (missing format tag)");
        SdeModel model;
        model.dim = j.at("dim").get<int>();
        model.label = j.value("label", "");
        for (const auto& arr : j.at("drift"))
            model.drift.push_back(expansion_from_json(arr, model.dim));
        for (const auto& entry : j.at("diffusion")) {
            DiffusionTerm d;
            d.sqrt_form = entry.value("sqrt_form", false);
            d.expansion = expansion_from_json(entry.at("terms"), model.dim);
            model.diffusion.push_back(std::move(d));
        }
        model.validate();
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    }
}

namespace {
json load_json_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in)
        throw FormatError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("cannot parse " + file.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& file, const std::string& text) {
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw FormatError("cannot write " + file.string());
    out << text;
}
} // namespace

void save_model(const SdeModel& model, const fs::path& file) {
    write_text_file(file, model_to_json(model).dump(2) + "\n");
}

SdeModel load_model(const fs::path& file) {
    json j = load_json_file(file);
    if (j.contains("model")) return model_from_json(j.at("model"));
    return model_from_json(j);
}

std::string equation_slug(const EquationRecord& record) {
    return std::string(record.kind == TargetKind::Drift ? "drift" : "diffusion") + "_x" +
           std::to_string(record.state_index + 1);
}

json discovered_to_json(const DiscoveredSde& discovered, const json& provenance) {
    json j;
    j["format"] = "sde-discovery-v1";
    j["model"] = model_to_json(discovered.model);
    json posteriors = json::array();
    for (const auto& rec : discovered.equations) {
        json p;
        p["kind"] = rec.kind == TargetKind::Drift ? "drift" : "diffusion";
        p["state_index"] = rec.state_index;
        p["equation"] = std::string(rec.kind == TargetKind::Drift ? "drift" : "diffusion") +
                        " of x" + std::to_string(rec.state_index + 1);
        p["kinematic"] = rec.kinematic;
        if (!rec.kinematic) {
            p["converged"] = rec.summary.converged;
            p["sbl_fallback"] = rec.summary.sbl_fallback;
            p["iterations"] = rec.summary.iterations;
            json cols = json::array(), pip = json::array(), selected = json::array();
            for (std::size_t k = 0; k < rec.stats.columns.size(); ++k) {
                cols.push_back(rec.stats.columns[k].name());
                pip.push_back(rec.summary.pip[static_cast<Eigen::Index>(k)]);
            }
            for (int s : rec.summary.selected)
                selected.push_back(rec.stats.columns[static_cast<std::size_t>(s)].name());
            p["columns"] = cols;
            p["pip"] = pip;
            p["selected"] = selected;
            if (rec.kind == TargetKind::Diffusion)
                p["negative_clipped"] = rec.negative_clipped;
        }
        posteriors.push_back(p);
    }
    j["posteriors"] = posteriors;
    j["provenance"] = provenance;
    return j;
}

void save_discovered(const DiscoveredSde& discovered, const json& provenance,
                     const fs::path& file) {
    write_text_file(file, discovered_to_json(discovered, provenance).dump(2) + "\n");
}

void write_trajectory_csv(const fs::path& file, const Trajectory& traj) {
    std::ostringstream os;
    os << "t";
    for (Eigen::Index c = 0; c < traj.dim(); ++c) os << ",x" << (c + 1);
    os << "\n";
    for (Eigen::Index r = 0; r < traj.rows(); ++r) {
        os << format_double(traj.time_at(r));
        for (Eigen::Index c = 0; c < traj.dim(); ++c)
            os << "," << format_double(traj.states(r, c));
        os << "\n";
    }
    write_text_file(file, os.str());
}

namespace {
std::vector<double> parse_csv_row(const std::string& line, const fs::path& file) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string cell = line.substr(pos, comma - pos);
        try {
            row.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw FormatError("bad numeric cell '" + cell + "' in " + file.string());
        }
        pos = comma + 1;
        if (comma == line.size()) break;
    }
    return row;
}
} // namespace

Trajectory read_trajectory_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in)
        throw FormatError("cannot open " + file.string());
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("t,", 0) != 0)
                throw FormatError("missing 't,x1,...' header in " + file.string());
            header_seen = true;
            continue;
        }
        rows.push_back(parse_csv_row(line, file));
    }
    if (rows.size() < 2)
        throw FormatError("trajectory file " + file.string() + " has fewer than 2 rows");
    const std::size_t width = rows.front().size();
    if (width < 2)
        throw FormatError("trajectory file " + file.string() + " has no state columns");
    Trajectory traj;
    traj.t0 = rows.front()[0];
    traj.dt = rows[1][0] - rows[0][0];
    traj.states.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw FormatError("ragged row in " + file.string());
        for (std::size_t c = 1; c < width; ++c)
            traj.states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) =
                rows[r][c];
    }
    return traj;
}

void write_ensemble(const fs::path& dir, const Ensemble& ens, const std::string& config_hash) {
    ens.validate();
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "sde-ensemble-v1";
    manifest["dt"] = ens.dt();
    manifest["t0"] = ens.paths.front().t0;
    manifest["rows_per_path"] = ens.rows_per_path();
    manifest["dim"] = ens.dim();
    manifest["n_paths"] = ens.n_paths();
    manifest["seed"] = ens.seed;
    if (!config_hash.empty()) manifest["config_hash"] = config_hash;
    json files = json::array();
    for (std::size_t j = 0; j < ens.n_paths(); ++j) {
        const std::string name = "path_" + std::to_string(j) + ".csv";
        write_trajectory_csv(dir / name, ens.paths[j]);
        files.push_back(name);
    }
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Ensemble read_ensemble(const fs::path& dir) {
    const json manifest = load_json_file(dir / "manifest.json");
    try {
        if (manifest.value("format", "") != "sde-ensemble-v1")
            throw FormatError("not an ensemble manifest");
        Ensemble ens;
        ens.seed = manifest.at("seed").get<std::uint64_t>();
        for (const auto& name : manifest.at("files"))
            ens.paths.push_back(read_trajectory_csv(dir / name.get<std::string>()));
        ens.validate();
        if (ens.n_paths() != manifest.at("n_paths").get<std::size_t>() ||
            ens.dim() != manifest.at("dim").get<Eigen::Index>())
            throw FormatError("ensemble files disagree with manifest");
        return ens;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed ensemble manifest: ") + e.what());
    }
}

void write_curve_csv(const fs::path& file, const FailureCurve& curve,
                     const std::string& config_hash) {
    std::ostringstream os;
    os << "# seed=" << curve.seed << " n_paths=" << curve.n_paths
       << " diverged=" << curve.diverged_paths;
    if (!config_hash.empty()) os << " config_hash=" << config_hash;
    os << "\n";
    os << "t,pf,ci_lo,ci_hi\n";
    for (Eigen::Index r = 0; r < curve.times.size(); ++r) {
        const double p = curve.pf[r];
        const double h = curve.ci_halfwidth[r];
        os << format_double(curve.times[r]) << "," << format_double(p) << ","
           << format_double(std::max(0.0, p - h)) << "," << format_double(std::min(1.0, p + h))
           << "\n";
    }
    write_text_file(file, os.str());
}

void write_pip_csv(const fs::path& file, const EquationRecord& record,
                   const std::string& config_hash) {
    std::ostringstream os;
    os << "# equation=" << equation_slug(record);
    if (!config_hash.empty()) os << " config_hash=" << config_hash;
    os << "\n";
    os << "column_name,pip,weight_mean,weight_std,selected\n";
    if (record.kinematic) {
        write_text_file(file, os.str());
        return;
    }
    const DestandardizedWeights dw = destandardize_weights(
        record.summary.mu_theta_hat, record.summary.Sigma_theta_hat, record.stats);
    for (std::size_t k = 0; k < record.stats.columns.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const bool selected = std::find(record.summary.selected.begin(),
                                        record.summary.selected.end(),
                                        static_cast<int>(k)) != record.summary.selected.end();
        os << record.stats.columns[k].name() << "," << format_double(record.summary.pip[ki])
           << "," << format_double(dw.mu[ki]) << ","
           << format_double(std::sqrt(std::max(0.0, dw.Sigma(ki, ki)))) << ","
           << (selected ? 1 : 0) << "\n";
    }
    write_text_file(file, os.str());
}

void write_elbo_csv(const fs::path& file, const std::vector<double>& trace,
                    const std::string& config_hash) {
    std::ostringstream os;
    if (!config_hash.empty()) os << "# config_hash=" << config_hash << "\n";
    os << "iter,elbo\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        os << (i + 1) << "," << format_double(trace[i]) << "\n";
    write_text_file(file, os.str());
}

void write_targets_csv(const fs::path& file, const TargetSet& targets,
                       const std::string& config_hash) {
    std::ostringstream os;
    if (!config_hash.empty()) os << "# config_hash=" << config_hash << "\n";
    os << "path,step,y\n";
    for (Eigen::Index r = 0; r < targets.y.size(); ++r) {
        const auto& [path, step] = targets.row_index[static_cast<std::size_t>(r)];
        os << path << "," << step << "," << format_double(targets.y[r]) << "\n";
    }
    write_text_file(file, os.str());
}

json comparison_to_json(const CurveComparison& cmp, const json& provenance_a,
                        const json& provenance_b) {
    json j;
    j["format"] = "curve-comparison-v1";
    j["sup_diff"] = cmp.sup_diff;
    j["mean_abs_diff"] = cmp.mean_abs_diff;
    j["curve_a"] = provenance_a;
    j["curve_b"] = provenance_b;
    return j;
}

} // namespace sdekit
