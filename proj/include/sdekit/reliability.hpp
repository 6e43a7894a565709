#pragma once

#include "sdekit/model.hpp"

#include <cstdint>

namespace sdekit {

/// Failure is declared when the monitored state first exceeds the threshold
/// (signed by default; `use_abs` switches to |x| > threshold).
struct LimitState {
    int state_index = 0;
    double threshold = 0.0;
    bool use_abs = false;
};

struct FailureCurve {
    Eigen::VectorXd times;         ///< Report grid, starting at t = 0.
    Eigen::VectorXd pf;            ///< First-passage probability, non-decreasing.
    Eigen::VectorXd ci_halfwidth;  ///< 1.96 sqrt(pf(1-pf)/n), normal approximation.
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::size_t diverged_paths = 0; ///< Counted as failed from the divergence step.
};

/// Monte Carlo first-passage estimate: pf(t) = fraction of paths whose
/// monitored state exceeded the threshold at any step up to t. Paths stop at
/// their first crossing; a path that turns non-finite counts as failed from
/// that step. Per-path child seeds keep the curve identical for any thread
/// count. threads == 0 uses the hardware concurrency.
FailureCurve failure_probability(const SdeModel& model, const Eigen::VectorXd& x0, double dt,
                                 double horizon, std::size_t n_paths, const LimitState& ls,
                                 std::uint64_t seed, double report_stride = 0.1,
                                 unsigned threads = 0);

struct CurveComparison {
    double sup_diff = 0.0;
    double mean_abs_diff = 0.0;
};

/// Sup-norm and mean absolute gap between two curves on identical grids.
CurveComparison compare_curves(const FailureCurve& a, const FailureCurve& b);

} // namespace sdekit
