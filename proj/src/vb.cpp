#include "sdekit/vb.hpp"

#include "sdekit/errors.hpp"
#include "sdekit/sbl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdekit {

namespace {
constexpr double kWClamp = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double clamp_w(double w) { return std::clamp(w, kWClamp, 1.0 - kWClamp); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

double expit(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Simplified bound expression shared by vb_iteration and compute_elbo.
double elbo_expression(double log_det_sigma, const Eigen::VectorXd& w, double a_q, double b_q,
                       const SsHyperparams& h, std::size_t n, Eigen::Index k) {
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    double bern = 0.0;
    const double log_p0 = std::log(h.p0);
    const double log_1mp0 = std::log1p(-h.p0);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double wi = clamp_w(w[i]);
        bern += wi * (log_p0 - std::log(wi)) + (1.0 - wi) * (log_1mp0 - std::log1p(-wi));
    }
    return 0.5 * kd - 0.5 * nd * std::log(kTwoPi) - 0.5 * kd * std::log(h.v_s) +
           h.a_sigma * std::log(h.b_sigma) - std::lgamma(h.a_sigma) + std::lgamma(a_q) -
           a_q * std::log(b_q) + 0.5 * log_det_sigma + bern;
}
} // namespace

void SsHyperparams::validate() const {
    if (v_s <= 0.0) throw ConfigError("v_s must be positive");
    if (a_sigma <= 0.0 || b_sigma <= 0.0) throw ConfigError("a_sigma/b_sigma must be positive");
    if (p0 <= 0.0 || p0 >= 1.0) throw ConfigError("p0 must lie in (0,1)");
    if (rho <= 0.0) throw ConfigError("rho must be positive");
    if (tau_init <= 0.0) throw ConfigError("tau_init must be positive");
    if (pip_threshold <= 0.0 || pip_threshold >= 1.0)
        throw ConfigError("pip_threshold must lie in (0,1)");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
}

VbProblem VbProblem::from_data(const Eigen::MatrixXd& L, const Eigen::VectorXd& y) {
    if (L.rows() != y.size())
        throw DimensionError("design matrix rows do not match target length");
    if (L.rows() < 2)
        throw InsufficientDataError("regression needs at least 2 rows");
    const Eigen::VectorXd means = L.colwise().mean();
    if (means.size() > 0 && means.cwiseAbs().maxCoeff() > 1e-8)
        throw ConfigError("design matrix columns are not centered; standardize first");
    if (std::abs(y.mean()) > 1e-8 * std::max(1.0, y.cwiseAbs().maxCoeff()))
        throw ConfigError("target is not centered; standardize first");
    VbProblem p;
    p.G = L.transpose() * L;
    p.c = L.transpose() * y;
    p.yy = y.squaredNorm();
    p.n = static_cast<std::size_t>(L.rows());
    return p;
}

VbState vb_initial_state(const VbProblem& problem, const SsHyperparams& h,
                         const Eigen::VectorXd& w0) {
    h.validate();
    const auto k = problem.k();
    if (w0.size() != k)
        throw DimensionError("w0 length does not match column count");
    VbState s;
    s.mu_q = Eigen::VectorXd::Zero(k);
    s.Sigma_q = Eigen::MatrixXd::Identity(k, k);
    s.w_q.resize(k);
    for (Eigen::Index i = 0; i < k; ++i)
        s.w_q[i] = clamp_w(w0[i]);
    s.a_q = h.a_sigma + 0.5 * static_cast<double>(problem.n) + 0.5 * static_cast<double>(k);
    s.tau = h.tau_init;
    s.b_q = s.a_q / s.tau;
    s.elbo = -std::numeric_limits<double>::infinity();
    s.iter = 0;
    return s;
}

VbState vb_iteration(const VbState& state, const VbProblem& problem, const SsHyperparams& h) {
    const auto k = problem.k();
    if (state.w_q.size() != k || state.mu_q.size() != k)
        throw DimensionError("state does not match problem dimensions");

    VbState next = state;
    next.iter = state.iter + 1;

    // Omega = w w^T + W(I - W); its diagonal reduces to w.
    Eigen::MatrixXd omega = state.w_q * state.w_q.transpose();
    omega.diagonal() = state.w_q;
    Eigen::MatrixXd a_mat = problem.G.cwiseProduct(omega);
    a_mat.diagonal().array() += 1.0 / h.v_s;

    Eigen::LLT<Eigen::MatrixXd> llt(a_mat);
    if (llt.info() != Eigen::Success)
        throw NumericalError("weight covariance factorization failed at iteration " +
                             std::to_string(next.iter));

    // Sigma = (tau A)^-1 with the pre-update tau; mu = tau Sigma W c = A^-1 (w . c).
    const double tau_prev = state.tau;
    next.Sigma_q = llt.solve(Eigen::MatrixXd::Identity(k, k)) / tau_prev;
    next.mu_q = llt.solve(state.w_q.cwiseProduct(problem.c).eval());

    double log_det_sigma = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
        log_det_sigma -= 2.0 * std::log(llt.matrixLLT()(i, i));
    log_det_sigma -= static_cast<double>(k) * std::log(tau_prev);

    // Noise posterior: a_q is constant; b_q uses the freshly updated (mu, Sigma)
    // and the same w/Omega as the Sigma update, so tr{A (mu mu^T + Sigma)} is
    // evaluated with a consistent A.
    next.a_q = h.a_sigma + 0.5 * static_cast<double>(problem.n) + 0.5 * static_cast<double>(k);
    const Eigen::MatrixXd second_moment =
        next.Sigma_q + next.mu_q * next.mu_q.transpose();
    const double trace_term = a_mat.cwiseProduct(second_moment).sum();
    const double fit_term = problem.c.cwiseProduct(state.w_q).dot(next.mu_q);
    next.b_q = h.b_sigma + 0.5 * (problem.yy - 2.0 * fit_term + trace_term);
    if (!(next.b_q > 0.0) || !std::isfinite(next.b_q))
        throw NumericalError("noise posterior rate became non-positive at iteration " +
                             std::to_string(next.iter));
    next.tau = next.a_q / next.b_q;

    // The simplified bound is exact at this point (b_q consistent with the
    // current mu, Sigma, w), which keeps the reported trace non-decreasing.
    next.elbo = elbo_expression(log_det_sigma, state.w_q, next.a_q, next.b_q, h, problem.n, k);

    // Gauss-Seidel pass over inclusion probabilities, ascending k.
    next.w_q = state.w_q;
    const double bias = logit(h.p0);
    for (Eigen::Index i = 0; i < k; ++i) {
        double cross = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (j == i) continue;
            cross += problem.G(i, j) * next.w_q[j] * second_moment(i, j);
        }
        const double eta = bias -
                           0.5 * next.tau * second_moment(i, i) * problem.G(i, i) +
                           next.tau * (problem.c[i] * next.mu_q[i] - cross);
        next.w_q[i] = clamp_w(expit(eta));
    }
    return next;
}

VbState vb_iteration(const VbState& state, const Eigen::MatrixXd& L, const Eigen::VectorXd& y,
                     const SsHyperparams& h) {
    return vb_iteration(state, VbProblem::from_data(L, y), h);
}

double compute_elbo(const VbState& state, const SsHyperparams& h, std::size_t n,
                    Eigen::Index k) {
    if (state.Sigma_q.rows() != k || state.w_q.size() != k)
        throw DimensionError("state does not match the given column count");
    Eigen::LLT<Eigen::MatrixXd> llt(state.Sigma_q);
    if (llt.info() != Eigen::Success)
        throw NumericalError("weight covariance is not positive-definite in bound evaluation");
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
        log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    return elbo_expression(log_det, state.w_q, state.a_q, state.b_q, h, n, k);
}

PosteriorSummary run_vb(const Eigen::MatrixXd& L, const Eigen::VectorXd& y,
                        const SsHyperparams& h) {
    return run_vb(VbProblem::from_data(L, y), h);
}

PosteriorSummary run_vb(const VbProblem& problem, const SsHyperparams& h) {
    h.validate();
    const auto k = problem.k();
    if (k == 0)
        throw DimensionError("regression problem has no columns");

    SblResult init = sbl_initialize_stats(problem.G, problem.c, problem.yy, problem.n, h.p0);

    PosteriorSummary summary;
    summary.sbl_fallback = !init.converged;

    VbState state = vb_initial_state(problem, h, init.w0);
    summary.elbo_trace.reserve(static_cast<std::size_t>(h.max_iters));
    for (int t = 0; t < h.max_iters; ++t) {
        VbState next = vb_iteration(state, problem, h);
        summary.elbo_trace.push_back(next.elbo);
        const bool done = std::isfinite(state.elbo) && std::abs(next.elbo - state.elbo) < h.rho;
        state = std::move(next);
        if (done) {
            summary.converged = true;
            break;
        }
    }
    summary.iterations = state.iter;

    summary.pip = state.w_q;
    for (Eigen::Index i = 0; i < k; ++i)
        if (state.w_q[i] > h.pip_threshold)
            summary.selected.push_back(static_cast<int>(i));
    summary.mu_theta_hat = Eigen::VectorXd::Zero(k);
    summary.Sigma_theta_hat = Eigen::MatrixXd::Zero(k, k);
    for (int i : summary.selected) {
        summary.mu_theta_hat[i] = state.mu_q[i];
        for (int j : summary.selected)
            summary.Sigma_theta_hat(i, j) = state.Sigma_q(i, j);
    }
    summary.a_star = state.a_q;
    summary.b_star = state.b_q;
    return summary;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict(const Eigen::MatrixXd& L_star,
                                                    const PosteriorSummary& post) {
    if (L_star.cols() != post.mu_theta_hat.size())
        throw DimensionError("prediction rows do not match posterior dimension");
    Eigen::VectorXd mean = L_star * post.mu_theta_hat;
    Eigen::MatrixXd cov = L_star * post.Sigma_theta_hat * L_star.transpose();
    if (post.a_star > 0.0)
        cov.diagonal().array() += post.b_star / post.a_star;
    cov = ((cov + cov.transpose()) * 0.5).eval();
    return {std::move(mean), std::move(cov)};
}

} // namespace sdekit
