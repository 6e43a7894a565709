#pragma once

#include "sdekit/model.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace sdekit {

enum class TargetKind { Drift, Diffusion };

/// Per-sample regression targets stacked over all paths (path-major,
/// time-minor). Row r of y corresponds to the transition starting at
/// row_index[r] = (path, step).
struct TargetSet {
    Eigen::VectorXd y;
    std::vector<std::pair<int, int>> row_index;
    TargetKind kind = TargetKind::Drift;
    int state_i = 0;
    int state_j = 0; ///< Diffusion only; equals state_i on the diagonal.
};

struct KmOptions {
    /// Emit (1/2) dx_i dx_j / dt instead of dx_i dx_j / dt. With the factor
    /// the regression mean estimates R/2 rather than R = g g^T.
    bool half_factor = false;
};

/// Forward-difference drift targets (x_i(k+1) - x_i(k)) / dt, one row per
/// consecutive sample pair per path. The last sample of each path has no
/// forward difference and is dropped.
TargetSet drift_targets(const Ensemble& ens, int state_i);

/// Quadratic-variation targets dx_i dx_j / dt on the same row layout.
TargetSet diffusion_targets(const Ensemble& ens, int state_i, int state_j,
                            const KmOptions& options = {});

/// Left-endpoint states aligned with the target rows: row r holds the state
/// at row_index[r], giving the regression inputs for every TargetSet of the
/// same ensemble.
Eigen::MatrixXd stacked_states(const Ensemble& ens);

/// Numerical differentiation: central differences on interior samples,
/// one-sided differences at both ends. Output length equals input length.
Eigen::VectorXd velocity_from_displacement(const Eigen::VectorXd& displacement, double dt);

} // namespace sdekit
