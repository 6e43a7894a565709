#include "sdekit/reliability.hpp"

#include "sdekit/errors.hpp"
#include "sdekit/rng.hpp"
#include "sdekit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace sdekit {

namespace {
bool exceeds(const Eigen::VectorXd& x, const LimitState& ls) {
    const double v = ls.use_abs ? std::abs(x[ls.state_index]) : x[ls.state_index];
    return v > ls.threshold;
}
} // namespace

FailureCurve failure_probability(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                                 double horizon, std::size_t n_paths, const LimitState& ls,
                                 std::uint64_t seed, double report_stride, unsigned threads) {
    model.validate();
    if (x0.size() != model.dim)
        throw DimensionError("initial state does not match model dimension");
    if (ls.state_index < 0 || ls.state_index >= model.dim)
        throw DimensionError("limit-state index out of range");
    if (dt <= 0.0 || horizon <= 0.0)
        throw ConfigError("dt and horizon must be positive");
    if (n_paths < 100)
        throw ConfigError("reliability estimation needs at least 100 paths");
    if (report_stride <= 0.0)
        throw ConfigError("report_stride must be positive");

    const auto n_steps = static_cast<std::size_t>(std::llround(horizon / dt));
    if (n_steps == 0)
        throw ConfigError("horizon is shorter than one step");
    auto steps_per_report = static_cast<std::size_t>(std::llround(report_stride / dt));
    steps_per_report = std::max<std::size_t>(1, std::min(steps_per_report, n_steps));
    const std::size_t n_report = n_steps / steps_per_report;

    FailureCurve curve;
    curve.n_paths = n_paths;
    curve.seed = seed;
    curve.times.resize(static_cast<Eigen::Index>(n_report) + 1);
    for (std::size_t r = 0; r <= n_report; ++r)
        curve.times[static_cast<Eigen::Index>(r)] =
            static_cast<double>(r * steps_per_report) * dt;

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_paths));

    struct Tally {
        std::vector<std::size_t> first_crossings;
        std::size_t diverged = 0;
    };
    std::vector<Tally> tallies(threads);
    for (auto& t : tallies) t.first_crossings.assign(n_report + 2, 0);

    auto worker = [&](unsigned tid, std::size_t begin, std::size_t end) {
        auto& tally = tallies[tid];
        Eigen::VectorXd x(model.dim), fx(model.dim), gx(model.dim);
        const double sqrt_dt = std::sqrt(dt);
        for (std::size_t j = begin; j < end; ++j) {
            GaussianRng rng(child_seed(seed, j));
            x = x0;
            // Grid slot of the first crossing; n_report + 1 means "never".
            std::size_t slot = n_report + 1;
            if (exceeds(x, ls)) {
                slot = 0;
            } else {
                for (std::size_t k = 1; k <= n_steps; ++k) {
                    em_step(model, x, dt, sqrt_dt, rng, fx, gx);
                    const bool finite = x.allFinite();
                    if (!finite) ++tally.diverged;
                    if (!finite || exceeds(x, ls)) {
                        slot = (k + steps_per_report - 1) / steps_per_report;
                        break;
                    }
                }
            }
            if (slot <= n_report)
                ++tally.first_crossings[slot];
        }
    };

    if (threads <= 1) {
        worker(0, 0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            const std::size_t end = std::min(n_paths, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, t, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    curve.pf.resize(static_cast<Eigen::Index>(n_report) + 1);
    curve.ci_halfwidth.resize(curve.pf.size());
    std::size_t cumulative = 0;
    const double inv_n = 1.0 / static_cast<double>(n_paths);
    for (std::size_t r = 0; r <= n_report; ++r) {
        for (const auto& t : tallies) cumulative += t.first_crossings[r];
        const double p = static_cast<double>(cumulative) * inv_n;
        curve.pf[static_cast<Eigen::Index>(r)] = p;
        curve.ci_halfwidth[static_cast<Eigen::Index>(r)] =
            1.96 * std::sqrt(p * (1.0 - p) * inv_n);
    }
    for (const auto& t : tallies) curve.diverged_paths += t.diverged;
    return curve;
}

CurveComparison compare_curves(const FailureCurve& a, const FailureCurve& b) {
    if (a.times.size() != b.times.size())
        throw DimensionError("failure curves have different grid lengths");
    if ((a.times - b.times).cwiseAbs().maxCoeff() > 1e-9)
        throw DimensionError("failure curves are on different time grids");
    CurveComparison cmp;
    const Eigen::VectorXd diff = (a.pf - b.pf).cwiseAbs();
    cmp.sup_diff = diff.maxCoeff();
    cmp.mean_abs_diff = diff.mean();
    return cmp;
}

} // namespace sdekit
