#include "sdekit/km.hpp"

#include "sdekit/errors.hpp"

namespace sdekit {

namespace {
void check_targets_input(const Ensemble& ens, int state_i, int state_j) {
    ens.validate();
    if (ens.rows_per_path() < 2)
        throw InsufficientDataError("target extraction needs at least 2 samples per path");
    if (ens.dt() <= 0.0)
        throw ConfigError("ensemble dt must be positive");
    for (int s : {state_i, state_j})
        if (s < 0 || s >= ens.dim())
            throw DimensionError("target state index " + std::to_string(s) +
                                 " out of range for dimension " + std::to_string(ens.dim()));
}

std::vector<std::pair<int, int>> make_row_index(const Ensemble& ens) {
    const auto steps = static_cast<int>(ens.rows_per_path()) - 1;
    std::vector<std::pair<int, int>> idx;
    idx.reserve(ens.n_paths() * static_cast<std::size_t>(steps));
    for (std::size_t j = 0; j < ens.n_paths(); ++j)
        for (int k = 0; k < steps; ++k)
            idx.emplace_back(static_cast<int>(j), k);
    return idx;
}
} // namespace

TargetSet drift_targets(const Ensemble& ens, int state_i) {
    check_targets_input(ens, state_i, state_i);
    const auto steps = ens.rows_per_path() - 1;
    const double inv_dt = 1.0 / ens.dt();

    TargetSet out;
    out.kind = TargetKind::Drift;
    out.state_i = out.state_j = state_i;
    out.y.resize(static_cast<Eigen::Index>(ens.n_paths()) * steps);
    Eigen::Index r = 0;
    for (const auto& path : ens.paths) {
        const auto col = path.states.col(state_i);
        out.y.segment(r, steps) = (col.tail(steps) - col.head(steps)) * inv_dt;
        r += steps;
    }
    out.row_index = make_row_index(ens);
    return out;
}

TargetSet diffusion_targets(const Ensemble& ens, int state_i, int state_j,
                            const KmOptions& options) {
    check_targets_input(ens, state_i, state_j);
    const auto steps = ens.rows_per_path() - 1;
    const double scale = (options.half_factor ? 0.5 : 1.0) / ens.dt();

    TargetSet out;
    out.kind = TargetKind::Diffusion;
    out.state_i = state_i;
    out.state_j = state_j;
    out.y.resize(static_cast<Eigen::Index>(ens.n_paths()) * steps);
    Eigen::Index r = 0;
    for (const auto& path : ens.paths) {
        const auto ci = path.states.col(state_i);
        const auto cj = path.states.col(state_j);
        out.y.segment(r, steps) = (ci.tail(steps) - ci.head(steps))
                                      .cwiseProduct(cj.tail(steps) - cj.head(steps)) *
                                  scale;
        r += steps;
    }
    out.row_index = make_row_index(ens);
    return out;
}

Eigen::MatrixXd stacked_states(const Ensemble& ens) {
    ens.validate();
    if (ens.rows_per_path() < 2)
        throw InsufficientDataError("stacked states need at least 2 samples per path");
    const auto steps = ens.rows_per_path() - 1;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ens.n_paths()) * steps, ens.dim());
    Eigen::Index r = 0;
    for (const auto& path : ens.paths) {
        out.middleRows(r, steps) = path.states.topRows(steps);
        r += steps;
    }
    return out;
}

Eigen::VectorXd velocity_from_displacement(const Eigen::VectorXd& displacement, double dt) {
    const auto n = displacement.size();
    if (n < 3)
        throw InsufficientDataError("velocity reconstruction needs at least 3 samples");
    if (dt <= 0.0)
        throw ConfigError("dt must be positive");
    Eigen::VectorXd v(n);
    v[0] = (displacement[1] - displacement[0]) / dt;
    v[n - 1] = (displacement[n - 1] - displacement[n - 2]) / dt;
    for (Eigen::Index k = 1; k + 1 < n; ++k)
        v[k] = (displacement[k + 1] - displacement[k - 1]) / (2.0 * dt);
    return v;
}

} // namespace sdekit
