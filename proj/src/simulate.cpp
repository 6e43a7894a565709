#include "sdekit/simulate.hpp"

#include "sdekit/errors.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace sdekit {

void em_step(const SdeModel& model, Eigen::VectorXd& x, double dt, double sqrt_dt,
             GaussianRng& rng, Eigen::VectorXd& fx, Eigen::VectorXd& gx) {
    model.eval_drift(x, fx);
    model.eval_diffusion(x, gx);
    for (int i = 0; i < model.dim; ++i) {
        double noise = gx[i] != 0.0 ? gx[i] * sqrt_dt * rng() : 0.0;
        x[i] += fx[i] * dt + noise;
    }
}

Trajectory euler_maruyama(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                          std::size_t n_steps, std::uint64_t seed) {
    model.validate();
    if (x0.size() != model.dim)
        throw DimensionError("initial state has " + std::to_string(x0.size()) +
                             " entries for model dimension " + std::to_string(model.dim));
    if (dt <= 0.0)
        throw ConfigError("dt must be positive");

    Trajectory traj;
    traj.dt = dt;
    traj.states.resize(static_cast<Eigen::Index>(n_steps) + 1, model.dim);
    traj.states.row(0) = x0.transpose();

    GaussianRng rng(seed);
    Eigen::VectorXd x = x0, fx(model.dim), gx(model.dim);
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        em_step(model, x, dt, sqrt_dt, rng, fx, gx);
        if (!x.allFinite())
            throw DivergenceError("state became non-finite at step " + std::to_string(k), k);
        traj.states.row(static_cast<Eigen::Index>(k)) = x.transpose();
    }
    return traj;
}

Ensemble simulate_ensemble(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                           double horizon, std::size_t n_paths, std::uint64_t seed,
                           unsigned threads) {
    if (horizon <= 0.0)
        throw ConfigError("horizon must be positive");
    if (n_paths == 0)
        throw ConfigError("n_paths must be positive");
    const auto n_steps = static_cast<std::size_t>(std::llround(horizon / dt));
    if (n_steps == 0)
        throw ConfigError("horizon shorter than one step");

    Ensemble ens;
    ens.seed = seed;
    ens.paths.resize(n_paths);

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_paths));

    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            try {
                ens.paths[j] = euler_maruyama(model, x0, dt, n_steps, child_seed(seed, j));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    try {
                        throw;
                    } catch (const DivergenceError& e) {
                        first_error = std::make_exception_ptr(
                            DivergenceError(std::string(e.what()) + " (path " +
                                                std::to_string(j) + ")",
                                            e.step, j));
                    } catch (...) {
                        first_error = std::current_exception();
                    }
                }
                return;
            }
        }
    };

    if (threads <= 1) {
        worker(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            std::size_t begin = static_cast<std::size_t>(t) * chunk;
            std::size_t end = std::min(n_paths, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);
    return ens;
}

namespace {
Eigen::VectorXd column_stds(const Ensemble& ens) {
    const auto m = ens.dim();
    const double total =
        static_cast<double>(ens.n_paths()) * static_cast<double>(ens.rows_per_path());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m), sumsq = Eigen::VectorXd::Zero(m);
    for (const auto& p : ens.paths) {
        sum += p.states.colwise().sum().transpose();
        sumsq += p.states.array().square().colwise().sum().matrix().transpose();
    }
    Eigen::VectorXd var = (sumsq / total - (sum / total).array().square().matrix()).cwiseMax(0.0);
    return var.cwiseSqrt();
}
} // namespace

Ensemble add_measurement_noise(const Ensemble& ensemble, double percent, std::uint64_t seed) {
    std::vector<int> all(static_cast<std::size_t>(ensemble.dim()));
    std::iota(all.begin(), all.end(), 0);
    return add_measurement_noise(ensemble, percent, seed, all);
}

Ensemble add_measurement_noise(const Ensemble& ensemble, double percent, std::uint64_t seed,
                               const std::vector<int>& columns) {
    ensemble.validate();
    if (percent < 0.0)
        throw ConfigError("noise percent must be non-negative");
    Ensemble out = ensemble;
    if (percent == 0.0 || columns.empty())
        return out;

    const Eigen::VectorXd stds = column_stds(ensemble);
    for (int col : columns) {
        if (col < 0 || col >= ensemble.dim())
            throw DimensionError("noise column " + std::to_string(col) + " out of range");
        const double sd = percent / 100.0 * stds[col];
        if (sd == 0.0) continue;
        GaussianRng rng(child_seed(seed, static_cast<std::uint64_t>(col)));
        for (auto& path : out.paths)
            for (Eigen::Index r = 0; r < path.rows(); ++r)
                path.states(r, col) += sd * rng();
    }
    return out;
}

} // namespace sdekit
