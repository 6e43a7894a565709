#pragma once

#include "sdekit/basis.hpp"
#include "sdekit/km.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sdekit {

struct DictionaryConfig {
    int poly_order = 0;
    bool include_signum = false;
    bool include_abs = false;
    bool include_x_abs_x = false;
    bool include_sin = false;
    bool include_cos = false;

    /// Throws ConfigError unless at least one family is enabled (poly_order
    /// >= 1 counts as the polynomial family).
    void validate() const;

    int extra_family_count() const;
};

/// Column order contract: constant, then monomials of total degree 1..P in
/// graded-lexicographic order (x1 before x2), then the enabled nonpolynomial
/// families component-major (all families of x1, then of x2, ...) with family
/// order sgn, abs, x|x|, sin, cos.
std::vector<BasisTerm> dictionary_columns(int dim, const DictionaryConfig& cfg);

struct Dictionary {
    std::vector<BasisTerm> columns;
    Eigen::MatrixXd matrix; ///< N x K, matrix(n, k) = columns[k](states row n)

    int k() const { return static_cast<int>(columns.size()); }
};

/// Materializes the design matrix over the given states.
/// Throws NumericalError naming the column if any entry is non-finite.
Dictionary build_dictionary(const Eigen::MatrixXd& states, const DictionaryConfig& cfg);
Dictionary build_dictionary(const Eigen::MatrixXd& states, std::vector<BasisTerm> columns);

struct StandardizationStats {
    Eigen::VectorXd mu_D; ///< Means of the retained (regressed) columns.
    Eigen::VectorXd s_D;  ///< Population stds of the retained columns.
    double mu_Y = 0.0;    ///< Target mean.
    int dropped_constant = -1; ///< Original index of the removed intercept column.
    std::vector<BasisTerm> columns; ///< Retained columns, in regression order.
};

/// Centers and scales every non-constant column to mean 0 / std 1
/// (population convention, divisor N) and centers the target. The constant
/// column is removed; its effect returns as the intercept at
/// destandardization. Throws DegenerateColumnError for a zero-variance
/// non-constant column.
std::tuple<Eigen::MatrixXd, Eigen::VectorXd, StandardizationStats>
standardize(const Dictionary& dict, const TargetSet& targets);

struct DestandardizedWeights {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Sigma;
    double intercept = 0.0;
};

/// Maps standardized-space posterior moments back to the original column
/// scale: mu = S^-1 mu_s, Sigma = S^-1 Sigma_s S^-1,
/// intercept = mu_Y - mu_D . mu.
DestandardizedWeights destandardize_weights(const Eigen::VectorXd& mu_s,
                                            const Eigen::MatrixXd& Sigma_s,
                                            const StandardizationStats& stats);

/// Sufficient statistics of the standardized regression: G = L^T L,
/// c = L^T y, yy = y^T y over the standardized matrix L and centered target
/// y. Everything downstream (sparse Bayesian init, variational inference)
/// needs only these, so the design matrix never has to be materialized.
struct RegressionStats {
    Eigen::MatrixXd G;
    Eigen::VectorXd c;
    double yy = 0.0;
    std::size_t n = 0;
    StandardizationStats stats;
};

/// Streams the dictionary over `states` in row chunks and accumulates the
/// standardized Gram statistics in two passes (means first, then centered
/// products), keeping memory at O(chunk x K + K^2).
RegressionStats regression_stats(const Eigen::MatrixXd& states,
                                 const std::vector<BasisTerm>& columns,
                                 const Eigen::VectorXd& y, Eigen::Index chunk = 8192);

/// Target-independent part of the streamed statistics. One cache serves
/// every regression over the same states and columns (all equations of one
/// discovery run share it).
struct GramCache {
    Eigen::MatrixXd G; ///< Standardized Gram, constant column dropped.
    StandardizationStats stats; ///< mu_Y left at 0; filled per target.
    std::size_t n = 0;
    Eigen::Index chunk = 8192;
};

GramCache build_gram_cache(const Eigen::MatrixXd& states, const std::vector<BasisTerm>& columns,
                           Eigen::Index chunk = 8192);

/// Per-target statistics against the cached standardized columns; column t
/// of `targets` yields element t of the result.
struct TargetStats {
    Eigen::VectorXd c; ///< L^T y over standardized columns and centered y.
    double yy = 0.0;
    double mu_Y = 0.0;
};

std::vector<TargetStats> target_stats(const Eigen::MatrixXd& states, const GramCache& cache,
                                      const Eigen::MatrixXd& targets);

} // namespace sdekit
