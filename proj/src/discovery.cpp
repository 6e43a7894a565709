#include "sdekit/discovery.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sdekit {

namespace {

void check_state_index(int s, int dim, const char* what) {
    if (s < 0 || s >= dim)
        throw ConfigError(std::string(what) + " state index " + std::to_string(s + 1) +
                          " out of range for dimension " + std::to_string(dim));
}

std::vector<BasisTerm> resolve_columns(const DiscoveryConfig& cfg, int dim) {
    if (!cfg.explicit_columns.empty())
        return cfg.explicit_columns;
    return dictionary_columns(dim, cfg.dict_cfg);
}

/// Weighted-sum expansion from a posterior: selected columns carry their
/// destandardized means, the constant carries the intercept.
BasisExpansion expansion_from_posterior(const PosteriorSummary& summary,
                                        const StandardizationStats& stats, int dim) {
    DestandardizedWeights dw =
        destandardize_weights(summary.mu_theta_hat, summary.Sigma_theta_hat, stats);
    BasisExpansion e;
    e.dim = dim;
    e.terms.emplace_back(BasisTerm::constant(), dw.intercept);
    for (int k : summary.selected)
        e.terms.emplace_back(stats.columns[static_cast<std::size_t>(k)], dw.mu[k]);
    return e;
}

BasisExpansion kinematic_expansion(int velocity_state, int dim) {
    BasisExpansion e;
    e.dim = dim;
    e.terms.emplace_back(BasisTerm::monomial(velocity_state, 1), 1.0);
    return e;
}

/// Drift-corrected quadratic-variation targets:
/// y(k) = (dx - f(x_k) dt)^2 / dt on the shared row layout.
Eigen::VectorXd corrected_diffusion_targets(const Ensemble& ens, int state_index,
                                            const BasisExpansion& drift, const KmOptions& km) {
    const auto steps = ens.rows_per_path() - 1;
    const double dt = ens.dt();
    const double scale = (km.half_factor ? 0.5 : 1.0) / dt;
    Eigen::VectorXd y(static_cast<Eigen::Index>(ens.n_paths()) * steps);
    Eigen::Index r = 0;
    for (const auto& path : ens.paths) {
        for (Eigen::Index k = 0; k < steps; ++k) {
            const double dx = path.states(k + 1, state_index) - path.states(k, state_index);
            const double f = drift.evaluate(path.states.row(k).transpose());
            const double resid = dx - f * dt;
            y[r++] = resid * resid * scale;
        }
    }
    return y;
}

struct FittedEquation {
    BasisExpansion expansion;
    PosteriorSummary summary;
    StandardizationStats stats;
};

FittedEquation fit_equation(const GramCache& cache, const TargetStats& ts,
                            const SsHyperparams& hyper, int dim) {
    VbProblem problem;
    problem.G = cache.G;
    problem.c = ts.c;
    problem.yy = ts.yy;
    problem.n = cache.n;

    FittedEquation fit;
    fit.summary = run_vb(problem, hyper);
    fit.stats = cache.stats;
    fit.stats.mu_Y = ts.mu_Y;
    fit.expansion = expansion_from_posterior(fit.summary, fit.stats, dim);
    return fit;
}

template <typename Fn>
auto with_equation_label(const std::string& label, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(label + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(label + ": " + e.what());
    } catch (const Error& e) {
        throw DiscoveryError(label + ": " + e.what());
    }
}

int count_negative_fit(const Eigen::MatrixXd& states, const BasisExpansion& variance) {
    int count = 0;
    for (Eigen::Index r = 0; r < states.rows(); ++r)
        if (variance.evaluate(states.row(r).transpose()) < 0.0)
            ++count;
    return count;
}

} // namespace

void DiscoveryConfig::validate(int dim) const {
    if (explicit_columns.empty())
        dict_cfg.validate();
    hyper.validate();
    for (int s : drift_states) check_state_index(s, dim, "drift");
    for (int s : diffusion_states) check_state_index(s, dim, "diffusion");
    for (const auto& [disp, vel] : kinematic_pairs) {
        check_state_index(disp, dim, "kinematic displacement");
        check_state_index(vel, dim, "kinematic velocity");
        if (std::find(drift_states.begin(), drift_states.end(), disp) != drift_states.end())
            throw ConfigError("state " + std::to_string(disp + 1) +
                              " is both kinematic and drift-regressed");
    }
}

std::pair<BasisExpansion, PosteriorSummary> discover_drift(const Ensemble& ens, int state_index,
                                                           const DiscoveryConfig& cfg) {
    ens.validate();
    const int dim = static_cast<int>(ens.dim());
    cfg.validate(dim);
    check_state_index(state_index, dim, "drift");

    if (auto it = cfg.kinematic_pairs.find(state_index); it != cfg.kinematic_pairs.end())
        return {kinematic_expansion(it->second, dim), PosteriorSummary{}};

    if (std::find(cfg.drift_states.begin(), cfg.drift_states.end(), state_index) ==
        cfg.drift_states.end())
        throw ConfigError("state " + std::to_string(state_index + 1) +
                          " is neither kinematic nor listed in drift_states");

    return with_equation_label("drift equation of state " + std::to_string(state_index + 1),
                               [&]() -> std::pair<BasisExpansion, PosteriorSummary> {
        const Eigen::MatrixXd states = stacked_states(ens);
        const auto columns = resolve_columns(cfg, dim);
        GramCache cache = build_gram_cache(states, columns, cfg.chunk);
        TargetSet targets = drift_targets(ens, state_index);
        auto ts = target_stats(states, cache, targets.y);
        FittedEquation fit = fit_equation(cache, ts[0], cfg.hyper, dim);
        return {std::move(fit.expansion), std::move(fit.summary)};
    });
}

DiffusionFit discover_diffusion(const Ensemble& ens, int state_index, const DiscoveryConfig& cfg,
                                const BasisExpansion* fitted_drift) {
    ens.validate();
    const int dim = static_cast<int>(ens.dim());
    cfg.validate(dim);
    check_state_index(state_index, dim, "diffusion");
    if (std::find(cfg.diffusion_states.begin(), cfg.diffusion_states.end(), state_index) ==
        cfg.diffusion_states.end())
        throw ConfigError("state " + std::to_string(state_index + 1) +
                          " is not listed in diffusion_states");

    BasisExpansion drift_local;
    if (cfg.diffusion_drift_correction && fitted_drift == nullptr) {
        auto [expansion, summary] = discover_drift(ens, state_index, cfg);
        drift_local = std::move(expansion);
        fitted_drift = &drift_local;
    }

    return with_equation_label(
        "diffusion equation of state " + std::to_string(state_index + 1),
        [&]() -> DiffusionFit {
            const Eigen::MatrixXd states = stacked_states(ens);
            const auto columns = resolve_columns(cfg, dim);
            GramCache cache = build_gram_cache(states, columns, cfg.chunk);

            Eigen::VectorXd y;
            if (cfg.diffusion_drift_correction)
                y = corrected_diffusion_targets(ens, state_index, *fitted_drift, cfg.km);
            else
                y = diffusion_targets(ens, state_index, state_index, cfg.km).y;

            auto ts = target_stats(states, cache, y);
            FittedEquation fit = fit_equation(cache, ts[0], cfg.hyper, dim);

            DiffusionFit out;
            out.variance = std::move(fit.expansion);
            out.summary = std::move(fit.summary);
            out.negative_clipped = count_negative_fit(states, out.variance);
            if (out.negative_clipped == states.rows())
                throw DiscoveryError("fitted variance is negative at every training state");
            return out;
        });
}

DiscoveredSde assemble_model(int dim, const DiscoveryConfig& cfg,
                             const std::map<int, BasisExpansion>& drift_parts,
                             const std::map<int, DiffusionFit>& diffusion_parts) {
    DiscoveredSde out;
    out.model.dim = dim;
    out.model.label = "discovered";
    out.model.drift.resize(dim);
    out.model.diffusion.resize(dim);

    for (int s = 0; s < dim; ++s) {
        if (auto kin = cfg.kinematic_pairs.find(s); kin != cfg.kinematic_pairs.end()) {
            out.model.drift[s] = kinematic_expansion(kin->second, dim);
        } else if (auto it = drift_parts.find(s); it != drift_parts.end()) {
            out.model.drift[s] = it->second;
        } else {
            throw DiscoveryError("state " + std::to_string(s + 1) +
                                 " has neither a kinematic pairing nor a drift part");
        }

        auto fit = diffusion_parts.find(s);
        if (fit == diffusion_parts.end()) {
            out.model.diffusion[s].expansion.dim = dim;
            continue;
        }
        const BasisExpansion& variance = fit->second.variance;
        if (variance.is_constant_only()) {
            BasisExpansion g;
            g.dim = dim;
            g.terms.emplace_back(BasisTerm::constant(),
                                 std::sqrt(std::max(variance.constant_weight(), 0.0)));
            out.model.diffusion[s] = {std::move(g), false};
        } else {
            out.model.diffusion[s] = {variance, true};
        }
    }
    out.model.validate();
    return out;
}

DiscoveredSde discover_sde(const Ensemble& ens, const DiscoveryConfig& cfg) {
    ens.validate();
    const int dim = static_cast<int>(ens.dim());
    cfg.validate(dim);

    for (int s = 0; s < dim; ++s) {
        const bool kinematic = cfg.kinematic_pairs.count(s) > 0;
        const bool regressed =
            std::find(cfg.drift_states.begin(), cfg.drift_states.end(), s) !=
            cfg.drift_states.end();
        if (!kinematic && !regressed)
            throw ConfigError("state " + std::to_string(s + 1) +
                              " is neither kinematic nor listed in drift_states");
    }

    const Eigen::MatrixXd states = stacked_states(ens);
    const auto columns = resolve_columns(cfg, dim);
    const GramCache cache = with_equation_label(
        "dictionary statistics", [&] { return build_gram_cache(states, columns, cfg.chunk); });

    std::map<int, BasisExpansion> drift_parts;
    std::map<int, DiffusionFit> diffusion_parts;
    std::vector<EquationRecord> records;

    // Drift equations share one multi-target statistics pass.
    if (!cfg.drift_states.empty()) {
        Eigen::MatrixXd drift_y(states.rows(), static_cast<Eigen::Index>(cfg.drift_states.size()));
        for (std::size_t t = 0; t < cfg.drift_states.size(); ++t)
            drift_y.col(static_cast<Eigen::Index>(t)) = drift_targets(ens, cfg.drift_states[t]).y;
        const auto stats_per_target = target_stats(states, cache, drift_y);

        for (std::size_t t = 0; t < cfg.drift_states.size(); ++t) {
            const int s = cfg.drift_states[t];
            FittedEquation fit = with_equation_label(
                "drift equation of state " + std::to_string(s + 1),
                [&] { return fit_equation(cache, stats_per_target[t], cfg.hyper, dim); });
            EquationRecord rec;
            rec.kind = TargetKind::Drift;
            rec.state_index = s;
            rec.expansion = fit.expansion;
            rec.summary = std::move(fit.summary);
            rec.stats = std::move(fit.stats);
            records.push_back(std::move(rec));
            drift_parts[s] = std::move(fit.expansion);
        }
    }

    for (const auto& [disp, vel] : cfg.kinematic_pairs) {
        EquationRecord rec;
        rec.kind = TargetKind::Drift;
        rec.state_index = disp;
        rec.kinematic = true;
        rec.expansion = kinematic_expansion(vel, dim);
        records.push_back(std::move(rec));
    }

    // Diffusion equations, corrected by the fitted drift where available
    // (regressed part, or the exact pairing for kinematic rows).
    if (!cfg.diffusion_states.empty()) {
        Eigen::MatrixXd diff_y(states.rows(),
                               static_cast<Eigen::Index>(cfg.diffusion_states.size()));
        for (std::size_t t = 0; t < cfg.diffusion_states.size(); ++t) {
            const int s = cfg.diffusion_states[t];
            auto col = diff_y.col(static_cast<Eigen::Index>(t));
            if (!cfg.diffusion_drift_correction) {
                col = diffusion_targets(ens, s, s, cfg.km).y;
            } else if (auto it = drift_parts.find(s); it != drift_parts.end()) {
                col = corrected_diffusion_targets(ens, s, it->second, cfg.km);
            } else if (auto kin = cfg.kinematic_pairs.find(s); kin != cfg.kinematic_pairs.end()) {
                col = corrected_diffusion_targets(ens, s,
                                                  kinematic_expansion(kin->second, dim), cfg.km);
            } else {
                col = diffusion_targets(ens, s, s, cfg.km).y;
            }
        }
        const auto stats_per_target = target_stats(states, cache, diff_y);

        for (std::size_t t = 0; t < cfg.diffusion_states.size(); ++t) {
            const int s = cfg.diffusion_states[t];
            EquationRecord rec = with_equation_label(
                "diffusion equation of state " + std::to_string(s + 1), [&] {
                    FittedEquation fit = fit_equation(cache, stats_per_target[t], cfg.hyper, dim);
                    EquationRecord r;
                    r.kind = TargetKind::Diffusion;
                    r.state_index = s;
                    r.expansion = fit.expansion;
                    r.summary = std::move(fit.summary);
                    r.stats = std::move(fit.stats);
                    r.negative_clipped = count_negative_fit(states, r.expansion);
                    if (r.negative_clipped == states.rows())
                        throw DiscoveryError(
                            "fitted variance is negative at every training state");
                    return r;
                });
            DiffusionFit fit;
            fit.variance = rec.expansion;
            fit.negative_clipped = rec.negative_clipped;
            diffusion_parts[s] = std::move(fit);
            records.push_back(std::move(rec));
        }
    }

    DiscoveredSde result = assemble_model(dim, cfg, drift_parts, diffusion_parts);
    result.equations = std::move(records);
    return result;
}

} // namespace sdekit
