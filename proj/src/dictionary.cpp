#include "sdekit/dictionary.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sdekit {

void DictionaryConfig::validate() const {
    if (poly_order < 0)
        throw ConfigError("poly_order must be >= 0");
    if (poly_order == 0 && extra_family_count() == 0)
        throw ConfigError("dictionary config enables no basis family");
}

int DictionaryConfig::extra_family_count() const {
    return int(include_signum) + int(include_abs) + int(include_x_abs_x) + int(include_sin) +
           int(include_cos);
}

namespace {
void enumerate_monomials(int dim, int degree, int next_component,
                         std::vector<std::pair<int, int>>& partial,
                         std::vector<BasisTerm>& out) {
    if (degree == 0) {
        out.push_back(BasisTerm::monomial(partial));
        return;
    }
    if (next_component == dim - 1) {
        partial.emplace_back(next_component, degree);
        out.push_back(BasisTerm::monomial(partial));
        partial.pop_back();
        return;
    }
    for (int e = degree; e >= 0; --e) {
        if (e > 0) partial.emplace_back(next_component, e);
        enumerate_monomials(dim, degree - e, next_component + 1, partial, out);
        if (e > 0) partial.pop_back();
    }
}
} // namespace

std::vector<BasisTerm> dictionary_columns(int dim, const DictionaryConfig& cfg) {
    if (dim < 1)
        throw DimensionError("dictionary dimension must be >= 1");
    cfg.validate();
    std::vector<BasisTerm> cols;
    cols.push_back(BasisTerm::constant());
    std::vector<std::pair<int, int>> partial;
    for (int d = 1; d <= cfg.poly_order; ++d)
        enumerate_monomials(dim, d, 0, partial, cols);
    for (int i = 0; i < dim; ++i) {
        if (cfg.include_signum) cols.push_back(BasisTerm::signum(i));
        if (cfg.include_abs) cols.push_back(BasisTerm::absolute(i));
        if (cfg.include_x_abs_x) cols.push_back(BasisTerm::x_abs_x(i));
        if (cfg.include_sin) cols.push_back(BasisTerm::sine(i));
        if (cfg.include_cos) cols.push_back(BasisTerm::cosine(i));
    }
    return cols;
}

namespace {
void evaluate_block(const Eigen::MatrixXd& states, const std::vector<BasisTerm>& columns,
                    Eigen::Index row0, Eigen::Index nrows, Eigen::MatrixXd& out) {
    const auto k = static_cast<Eigen::Index>(columns.size());
    out.resize(nrows, k);
    for (Eigen::Index r = 0; r < nrows; ++r) {
        const auto state = states.row(row0 + r).transpose();
        for (Eigen::Index c = 0; c < k; ++c)
            out(r, c) = evaluate_basis(columns[c], state);
    }
    if (!out.allFinite()) {
        for (Eigen::Index c = 0; c < k; ++c)
            if (!out.col(c).allFinite())
                throw NumericalError("dictionary column '" + columns[c].name() +
                                     "' evaluated to a non-finite value");
    }
}

int find_constant_column(const std::vector<BasisTerm>& columns) {
    int found = -1;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].kind == BasisKind::Constant) {
            if (found >= 0)
                throw ConfigError("dictionary has more than one constant column");
            found = static_cast<int>(i);
        }
    }
    return found;
}

bool is_degenerate(double sd, double mean) {
    return sd < 1e-12 * std::max(1.0, std::abs(mean));
}
} // namespace

Dictionary build_dictionary(const Eigen::MatrixXd& states, const DictionaryConfig& cfg) {
    return build_dictionary(states, dictionary_columns(static_cast<int>(states.cols()), cfg));
}

Dictionary build_dictionary(const Eigen::MatrixXd& states, std::vector<BasisTerm> columns) {
    if (states.rows() < 1 || states.cols() < 1)
        throw DimensionError("dictionary needs at least one row and one state");
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t j = i + 1; j < columns.size(); ++j)
            if (columns[i] == columns[j])
                throw ConfigError("duplicate dictionary column '" + columns[i].name() + "'");
    Dictionary dict;
    dict.columns = std::move(columns);
    evaluate_block(states, dict.columns, 0, states.rows(), dict.matrix);
    return dict;
}

std::tuple<Eigen::MatrixXd, Eigen::VectorXd, StandardizationStats>
standardize(const Dictionary& dict, const TargetSet& targets) {
    const auto n = dict.matrix.rows();
    if (n < 2)
        throw InsufficientDataError("standardization needs at least 2 rows");
    if (targets.y.size() != n)
        throw DimensionError("target length does not match dictionary rows");

    const int constant_idx = find_constant_column(dict.columns);
    const double inv_n = 1.0 / static_cast<double>(n);

    StandardizationStats stats;
    stats.mu_Y = targets.y.mean();
    stats.dropped_constant = constant_idx;

    const int k_out = dict.k() - (constant_idx >= 0 ? 1 : 0);
    Eigen::MatrixXd ls(n, k_out);
    stats.mu_D.resize(k_out);
    stats.s_D.resize(k_out);
    stats.columns.reserve(k_out);

    int out = 0;
    for (int c = 0; c < dict.k(); ++c) {
        if (c == constant_idx) continue;
        const auto col = dict.matrix.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() * inv_n;
        const double sd = std::sqrt(var);
        if (is_degenerate(sd, mean))
            throw DegenerateColumnError("dictionary column '" + dict.columns[c].name() +
                                            "' has zero variance and cannot be standardized",
                                        c);
        ls.col(out) = (col.array() - mean) / sd;
        stats.mu_D[out] = mean;
        stats.s_D[out] = sd;
        stats.columns.push_back(dict.columns[c]);
        ++out;
    }
    Eigen::VectorXd yc = targets.y.array() - stats.mu_Y;
    return {std::move(ls), std::move(yc), std::move(stats)};
}

DestandardizedWeights destandardize_weights(const Eigen::VectorXd& mu_s,
                                            const Eigen::MatrixXd& Sigma_s,
                                            const StandardizationStats& stats) {
    const auto k = stats.s_D.size();
    if (mu_s.size() != k || Sigma_s.rows() != k || Sigma_s.cols() != k)
        throw DimensionError("posterior moments do not match standardization stats");
    DestandardizedWeights w;
    Eigen::VectorXd inv_s = stats.s_D.cwiseInverse();
    w.mu = inv_s.cwiseProduct(mu_s);
    w.Sigma = inv_s.asDiagonal() * Sigma_s * inv_s.asDiagonal();
    w.Sigma = ((w.Sigma + w.Sigma.transpose()) * 0.5).eval();
    w.intercept = stats.mu_Y - stats.mu_D.dot(w.mu);
    return w;
}

GramCache build_gram_cache(const Eigen::MatrixXd& states, const std::vector<BasisTerm>& columns,
                           Eigen::Index chunk) {
    const auto n = states.rows();
    if (n < 2)
        throw InsufficientDataError("regression needs at least 2 rows");
    if (chunk < 1) chunk = n;
    const auto k_all = static_cast<Eigen::Index>(columns.size());
    const int constant_idx = find_constant_column(columns);
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::MatrixXd block;

    // Pass 1: column means.
    Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(k_all);
    for (Eigen::Index r0 = 0; r0 < n; r0 += chunk) {
        const auto nr = std::min(chunk, n - r0);
        evaluate_block(states, columns, r0, nr, block);
        col_sum += block.colwise().sum().transpose();
    }
    const Eigen::VectorXd mu = col_sum * inv_n;

    // Pass 2: centered Gram.
    Eigen::MatrixXd gc = Eigen::MatrixXd::Zero(k_all, k_all);
    for (Eigen::Index r0 = 0; r0 < n; r0 += chunk) {
        const auto nr = std::min(chunk, n - r0);
        evaluate_block(states, columns, r0, nr, block);
        block.rowwise() -= mu.transpose();
        gc.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    }
    gc = Eigen::MatrixXd(gc.selfadjointView<Eigen::Lower>());

    GramCache cache;
    cache.n = static_cast<std::size_t>(n);
    cache.chunk = chunk;
    cache.stats.dropped_constant = constant_idx;

    const auto k_out = k_all - (constant_idx >= 0 ? 1 : 0);
    cache.stats.mu_D.resize(k_out);
    cache.stats.s_D.resize(k_out);
    cache.stats.columns.reserve(k_out);
    std::vector<Eigen::Index> keep;
    keep.reserve(k_out);
    Eigen::Index out = 0;
    for (Eigen::Index c = 0; c < k_all; ++c) {
        if (static_cast<int>(c) == constant_idx) continue;
        const double sd = std::sqrt(std::max(0.0, gc(c, c) * inv_n));
        if (is_degenerate(sd, mu[c]))
            throw DegenerateColumnError("dictionary column '" + columns[c].name() +
                                            "' has zero variance and cannot be standardized",
                                        static_cast<int>(c));
        cache.stats.mu_D[out] = mu[c];
        cache.stats.s_D[out] = sd;
        cache.stats.columns.push_back(columns[c]);
        keep.push_back(c);
        ++out;
    }

    cache.G.resize(k_out, k_out);
    for (Eigen::Index a = 0; a < k_out; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) {
            const double v = gc(keep[a], keep[b]) / (cache.stats.s_D[a] * cache.stats.s_D[b]);
            cache.G(a, b) = v;
            cache.G(b, a) = v;
        }
    }
    return cache;
}

std::vector<TargetStats> target_stats(const Eigen::MatrixXd& states, const GramCache& cache,
                                      const Eigen::MatrixXd& targets) {
    const auto n = states.rows();
    if (targets.rows() != n)
        throw DimensionError("target rows do not match state rows");
    const auto n_targets = targets.cols();
    const auto k_out = static_cast<Eigen::Index>(cache.stats.columns.size());

    const Eigen::RowVectorXd y_means = targets.colwise().mean();

    Eigen::MatrixXd block;
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(k_out, n_targets);
    for (Eigen::Index r0 = 0; r0 < n; r0 += cache.chunk) {
        const auto nr = std::min(cache.chunk, n - r0);
        evaluate_block(states, cache.stats.columns, r0, nr, block);
        block.rowwise() -= cache.stats.mu_D.transpose();
        cross.noalias() +=
            block.transpose() * (targets.middleRows(r0, nr).rowwise() - y_means);
    }

    std::vector<TargetStats> out(static_cast<std::size_t>(n_targets));
    for (Eigen::Index t = 0; t < n_targets; ++t) {
        auto& ts = out[static_cast<std::size_t>(t)];
        ts.mu_Y = y_means[t];
        ts.yy = (targets.col(t).array() - y_means[t]).square().sum();
        ts.c = cross.col(t).cwiseQuotient(cache.stats.s_D);
    }
    return out;
}

RegressionStats regression_stats(const Eigen::MatrixXd& states,
                                 const std::vector<BasisTerm>& columns,
                                 const Eigen::VectorXd& y, Eigen::Index chunk) {
    if (y.size() != states.rows())
        throw DimensionError("target length does not match state rows");
    GramCache cache = build_gram_cache(states, columns, chunk);
    auto per_target = target_stats(states, cache, y);

    RegressionStats rs;
    rs.G = std::move(cache.G);
    rs.c = std::move(per_target[0].c);
    rs.yy = per_target[0].yy;
    rs.n = cache.n;
    rs.stats = std::move(cache.stats);
    rs.stats.mu_Y = per_target[0].mu_Y;
    return rs;
}

} // namespace sdekit
