#include "sdekit/sbl.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sdekit {

namespace {
constexpr double kPruneThreshold = 1e12;
constexpr double kMaxIters = 1000;
constexpr double kWFloor = 0.01;
constexpr double kWCeil = 0.99;
constexpr double kLogAlphaTol = 1e-4;

/// Active-set posterior of the relevance model: Sigma = (diag(alpha) + beta
/// G_AA)^-1, mu = beta Sigma c_A, plus the sparsity/quality statistics S, Q
/// of every column against that posterior.
struct ActivePosterior {
    Eigen::MatrixXd sigma;
    Eigen::VectorXd mu;
    Eigen::VectorXd S;
    Eigen::VectorXd Q;
    double rss = 0.0;
    double gamma_sum = 0.0;
};

ActivePosterior evaluate_active(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double yy,
                                double beta, const std::vector<Eigen::Index>& active,
                                const Eigen::VectorXd& alpha) {
    const auto k = c.size();
    const auto ka = static_cast<Eigen::Index>(active.size());
    ActivePosterior post;
    post.S = beta * G.diagonal();
    post.Q = beta * c;
    post.rss = yy;
    if (ka == 0) return post;

    Eigen::MatrixXd g_aa(ka, ka);
    Eigen::MatrixXd g_ak(ka, k);
    Eigen::VectorXd c_a(ka);
    for (Eigen::Index a = 0; a < ka; ++a) {
        c_a[a] = c[active[static_cast<std::size_t>(a)]];
        g_ak.row(a) = G.row(active[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < ka; ++b)
            g_aa(a, b) = G(active[static_cast<std::size_t>(a)],
                           active[static_cast<std::size_t>(b)]);
    }

    Eigen::MatrixXd prec = beta * g_aa;
    for (Eigen::Index a = 0; a < ka; ++a)
        prec(a, a) += alpha[active[static_cast<std::size_t>(a)]];
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
        throw NumericalError("sparse Bayesian init: posterior precision not positive-definite");

    post.sigma = llt.solve(Eigen::MatrixXd::Identity(ka, ka));
    post.mu = beta * llt.solve(c_a);

    // S_m = beta G_mm - beta^2 g_m^T Sigma g_m ; Q_m = beta c_m - beta g_m^T mu.
    const Eigen::MatrixXd solved = llt.solve(g_ak); // ka x k
    for (Eigen::Index m = 0; m < k; ++m) {
        post.S[m] -= beta * beta * g_ak.col(m).dot(solved.col(m));
        post.Q[m] -= beta * g_ak.col(m).dot(post.mu);
    }

    post.rss = yy - 2.0 * post.mu.dot(c_a) + post.mu.dot(g_aa * post.mu);
    for (Eigen::Index a = 0; a < ka; ++a)
        post.gamma_sum += 1.0 - alpha[active[static_cast<std::size_t>(a)]] * post.sigma(a, a);
    return post;
}

} // namespace

SblResult sbl_initialize(const Eigen::MatrixXd& L, const Eigen::VectorXd& y, double fallback_w) {
    if (L.rows() != y.size())
        throw DimensionError("design matrix rows do not match target length");
    Eigen::MatrixXd g = L.transpose() * L;
    Eigen::VectorXd c = L.transpose() * y;
    return sbl_initialize_stats(g, c, y.squaredNorm(), static_cast<std::size_t>(L.rows()),
                                fallback_w);
}

/// Sequential evidence maximization: starting from an empty relevance set,
/// repeatedly apply the single add / delete / re-estimate action with the
/// best marginal-likelihood gain until no action helps. All statistics come
/// from (G, c, yy, n), so the design matrix itself is never needed.
SblResult sbl_initialize_stats(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double yy,
                               std::size_t n, double fallback_w) {
    const auto k = c.size();
    if (G.rows() != k || G.cols() != k)
        throw DimensionError("Gram matrix does not match coefficient count");

    SblResult result;
    result.alpha = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    result.w0 = Eigen::VectorXd::Constant(k, kWFloor);

    const double var_y = std::max(yy / static_cast<double>(std::max<std::size_t>(n, 1)), 1e-300);
    const double beta_cap = 1e8 / var_y;
    double beta = 1.0 / (0.1 * var_y);

    std::vector<Eigen::Index> active;
    const double tol = std::max(1e-6, 1e-10 * static_cast<double>(n));

    int iter = 0;
    bool converged = false;
    ActivePosterior post;
    for (; iter < kMaxIters; ++iter) {
        post = evaluate_active(G, c, yy, beta, active, result.alpha);

        std::vector<char> is_active(static_cast<std::size_t>(k), 0);
        for (Eigen::Index a : active) is_active[static_cast<std::size_t>(a)] = 1;

        // Best single action on the relevance precisions.
        double best_gain = 0.0;
        Eigen::Index best_col = -1;
        double best_alpha = 0.0;
        int best_kind = -1; // 0 add, 1 delete, 2 re-estimate
        for (Eigen::Index m = 0; m < k; ++m) {
            const double S = post.S[m], Q = post.Q[m];
            if (!std::isfinite(S) || !std::isfinite(Q) || S <= 1e-300) continue;
            if (!is_active[static_cast<std::size_t>(m)]) {
                const double theta = Q * Q - S;
                if (theta <= 0.0) continue;
                const double alpha_new = S * S / theta;
                if (!(alpha_new > 0.0) || alpha_new > kPruneThreshold) continue;
                const double gain = 0.5 * ((Q * Q - S) / S + std::log(S / (Q * Q)));
                if (gain > best_gain) {
                    best_gain = gain;
                    best_col = m;
                    best_alpha = alpha_new;
                    best_kind = 0;
                }
            } else {
                const double alpha_old = result.alpha[m];
                // Exclusive (leave-m-out) statistics of an active column.
                const double denom = alpha_old - S;
                if (std::abs(denom) < 1e-300) continue;
                const double s = alpha_old * S / denom;
                const double q = alpha_old * Q / denom;
                const double theta = q * q - s;
                if (theta > 0.0) {
                    const double alpha_new = s * s / theta;
                    if (!(alpha_new > 0.0) || !std::isfinite(alpha_new)) continue;
                    if (std::abs(std::log(alpha_new) - std::log(alpha_old)) < kLogAlphaTol)
                        continue;
                    const double d = 1.0 / alpha_new - 1.0 / alpha_old;
                    const double one_plus = 1.0 + S * d;
                    if (one_plus <= 0.0) continue;
                    const double gain = 0.5 * (Q * Q * d / one_plus - std::log(one_plus));
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_col = m;
                        best_alpha = alpha_new;
                        best_kind = 2;
                    }
                } else if (active.size() > 1) {
                    const double one_minus = 1.0 - S / alpha_old;
                    if (one_minus <= 0.0) continue;
                    const double gain = 0.5 * (Q * Q / (S - alpha_old) - std::log(one_minus));
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_col = m;
                        best_alpha = std::numeric_limits<double>::infinity();
                        best_kind = 1;
                    }
                }
            }
        }

        // Noise precision re-estimate from the current posterior.
        const double beta_new = std::min(
            std::max(static_cast<double>(n) - post.gamma_sum, 1e-6) / std::max(post.rss, 1e-300),
            beta_cap);
        const double dlog_beta = std::abs(std::log(beta_new) - std::log(beta));
        beta = beta_new;

        if (best_kind < 0 || best_gain < tol) {
            if (dlog_beta < kLogAlphaTol) {
                converged = true;
                ++iter;
                break;
            }
            continue; // only beta moved; re-evaluate with the new noise level
        }

        if (best_kind == 0) {
            result.alpha[best_col] = best_alpha;
            active.push_back(best_col);
        } else if (best_kind == 1) {
            result.alpha[best_col] = std::numeric_limits<double>::infinity();
            active.erase(std::find(active.begin(), active.end(), best_col));
        } else {
            result.alpha[best_col] = best_alpha;
        }
    }

    result.iterations = iter;
    result.converged = converged;
    result.beta = beta;
    if (!result.converged) {
        result.w0.setConstant(std::clamp(fallback_w, kWFloor, kWCeil));
        return result;
    }

    // Relevance diagnostic gamma = 1 - alpha * Sigma_kk of the converged
    // posterior; pruned columns stay at the floor.
    post = evaluate_active(G, c, yy, beta, active, result.alpha);
    for (std::size_t a = 0; a < active.size(); ++a) {
        const auto col = active[a];
        const double gamma =
            1.0 - result.alpha[col] * post.sigma(static_cast<Eigen::Index>(a),
                                                 static_cast<Eigen::Index>(a));
        result.w0[col] = std::clamp(gamma, kWFloor, kWCeil);
    }
    return result;
}

} // namespace sdekit
