#pragma once

#include "sdekit/model.hpp"
#include "sdekit/rng.hpp"

#include <cstdint>
#include <vector>

namespace sdekit {

/// One Euler-Maruyama step x <- x + f(x) dt + g(x) sqrt(dt) xi, with
/// independent standard normals per state. `fx`/`gx` are caller-provided
/// scratch to avoid per-step allocation.
void em_step(const SdeModel& model, Eigen::VectorXd& x, double dt, double sqrt_dt,
             GaussianRng& rng, Eigen::VectorXd& fx, Eigen::VectorXd& gx);

/// Integrates one path from x0 over n_steps steps of size dt.
/// Throws DivergenceError at the first non-finite state.
Trajectory euler_maruyama(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                          std::size_t n_steps, std::uint64_t seed);

/// Simulates n_paths independent trajectories over [0, horizon]. Path j uses
/// a child seed derived from (seed, j), so results are identical for any
/// thread count. threads == 0 uses the hardware concurrency.
Ensemble simulate_ensemble(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                           double horizon, std::size_t n_paths, std::uint64_t seed,
                           unsigned threads = 0);

/// Adds zero-mean Gaussian noise with std = percent/100 * column std to every
/// state column. Column stds are computed over all rows of all paths.
Ensemble add_measurement_noise(const Ensemble& ensemble, double percent, std::uint64_t seed);

/// Same, but only the listed state columns are perturbed.
Ensemble add_measurement_noise(const Ensemble& ensemble, double percent, std::uint64_t seed,
                               const std::vector<int>& columns);

} // namespace sdekit
