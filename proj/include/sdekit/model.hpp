#pragma once

#include "sdekit/basis.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace sdekit {

/// Diagonal diffusion entry g_ii(x).
///
/// When `sqrt_form` is set the stored expansion models the variance g_ii^2
/// (how diffusion is regressed) and evaluation returns
/// sqrt(max(expansion(x), 0)). Plain form evaluates the expansion directly.
struct DiffusionTerm {
    BasisExpansion expansion;
    bool sqrt_form = false;

    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    bool is_zero() const;
};

/// Interpretable Ito SDE dX = f(X) dt + g(X) dB with diagonal g.
struct SdeModel {
    int dim = 0;
    std::vector<BasisExpansion> drift;     ///< One expansion per state.
    std::vector<DiffusionTerm> diffusion;  ///< One diagonal entry per state.
    std::string label;

    /// Throws DimensionError when the per-state vectors disagree with dim or
    /// a term references a component outside [0, dim).
    void validate() const;

    void eval_drift(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const;
    void eval_diffusion(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const;
};

/// One sampled path on a uniform time grid; row k is the state at t0 + k*dt.
struct Trajectory {
    double dt = 0.0;
    double t0 = 0.0;
    Eigen::MatrixXd states; ///< (n_steps + 1) x dim

    Eigen::Index rows() const { return states.rows(); }
    Eigen::Index dim() const { return states.cols(); }
    double time_at(Eigen::Index k) const { return t0 + static_cast<double>(k) * dt; }
};

/// Independent realizations of one process on a shared grid.
struct Ensemble {
    std::vector<Trajectory> paths;
    std::uint64_t seed = 0;

    std::size_t n_paths() const { return paths.size(); }
    Eigen::Index rows_per_path() const { return paths.empty() ? 0 : paths.front().rows(); }
    Eigen::Index dim() const { return paths.empty() ? 0 : paths.front().dim(); }
    double dt() const { return paths.empty() ? 0.0 : paths.front().dt; }

    /// Throws DimensionError unless every path shares dt, t0, row count and
    /// state dimension.
    void validate() const;
};

} // namespace sdekit
