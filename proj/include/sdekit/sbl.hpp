#pragma once

#include <Eigen/Dense>

namespace sdekit {

struct SblResult {
    Eigen::VectorXd w0;    ///< Relevance diagnostic per column, in [0.01, 0.99].
    bool converged = true; ///< False when the iteration cap was hit; w0 is then
                           ///< the uniform fallback.
    int iterations = 0;
    Eigen::VectorXd alpha; ///< Final per-weight precisions (pruned = +inf).
    double beta = 0.0;     ///< Final noise precision.
};

/// Relevance-vector-machine style evidence maximization with per-weight
/// precisions alpha_k. Columns whose alpha exceeds the pruning threshold
/// (1e12) are removed from the active set and reported with w0 = 0.01. The
/// diagnostic gamma_k = 1 - alpha_k * Sigma_kk of the converged posterior is
/// the returned inclusion estimate.
SblResult sbl_initialize(const Eigen::MatrixXd& L, const Eigen::VectorXd& y,
                         double fallback_w = 0.1);

/// Same, from precomputed Gram statistics G = L^T L, c = L^T y, yy = y^T y
/// and row count n.
SblResult sbl_initialize_stats(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double yy,
                               std::size_t n, double fallback_w = 0.1);

} // namespace sdekit
