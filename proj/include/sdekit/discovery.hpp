#pragma once

#include "sdekit/dictionary.hpp"
#include "sdekit/km.hpp"
#include "sdekit/model.hpp"
#include "sdekit/vb.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace sdekit {

struct DiscoveryConfig {
    DictionaryConfig dict_cfg;
    /// When non-empty, used verbatim instead of dict_cfg's families.
    std::vector<BasisTerm> explicit_columns;
    SsHyperparams hyper;
    std::vector<int> drift_states;     ///< States whose drift is regressed.
    std::vector<int> diffusion_states; ///< States carrying noise (diagonal).
    std::map<int, int> kinematic_pairs; ///< displacement state -> velocity state.
    KmOptions km;
    /// Subtract the fitted drift increment from dx before squaring, removing
    /// the O(dt) drift bias from the quadratic-variation targets.
    bool diffusion_drift_correction = true;
    Eigen::Index chunk = 8192;

    void validate(int dim) const;
};

/// Everything recorded about one fitted (or kinematic) equation.
struct EquationRecord {
    TargetKind kind = TargetKind::Drift;
    int state_index = 0;
    bool kinematic = false;
    BasisExpansion expansion; ///< Destandardized; for diffusion this is the variance fit.
    PosteriorSummary summary; ///< Standardized-space posterior (empty if kinematic).
    StandardizationStats stats;
    int negative_clipped = 0; ///< Diffusion only: training states with negative fit.
};

struct DiscoveredSde {
    SdeModel model;
    std::vector<EquationRecord> equations;
};

/// Drift regression for one state: targets -> dictionary -> standardize ->
/// variational inference -> destandardized expansion (selected weights plus
/// intercept). For a declared kinematic state returns the exact pairing
/// expansion and an empty summary.
std::pair<BasisExpansion, PosteriorSummary> discover_drift(const Ensemble& ens, int state_index,
                                                           const DiscoveryConfig& cfg);

struct DiffusionFit {
    BasisExpansion variance; ///< Fitted expansion for g_ii^2.
    PosteriorSummary summary;
    int negative_clipped = 0;
};

/// Diffusion regression for one state on quadratic-variation targets. The
/// fitted expansion models the variance g_ii^2; taking its pointwise square
/// root (at assembly) yields the coefficient. `fitted_drift`, when given,
/// enables the drift correction without re-running drift discovery.
DiffusionFit discover_diffusion(const Ensemble& ens, int state_index, const DiscoveryConfig& cfg,
                                const BasisExpansion* fitted_drift = nullptr);

/// Builds the final model from per-state parts. Every state must be covered
/// by a kinematic pair or a drift part; diffusion defaults to zero where
/// unlisted. Constant-only variance fits become constant sqrt coefficients;
/// anything else is kept in variance form and square-rooted pointwise during
/// evaluation.
DiscoveredSde assemble_model(int dim, const DiscoveryConfig& cfg,
                             const std::map<int, BasisExpansion>& drift_parts,
                             const std::map<int, DiffusionFit>& diffusion_parts);

/// Full per-equation discovery over one ensemble: shared Gram statistics,
/// drift equations first, then drift-corrected diffusion equations.
DiscoveredSde discover_sde(const Ensemble& ens, const DiscoveryConfig& cfg);

} // namespace sdekit
