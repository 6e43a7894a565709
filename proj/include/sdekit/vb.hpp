#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace sdekit {

/// Spike-and-slab model hyperparameters and solver controls.
struct SsHyperparams {
    double v_s = 10.0;       ///< Slab variance (relative to noise variance).
    double a_sigma = 1e-4;   ///< Inverse-gamma shape of the noise variance prior.
    double b_sigma = 1e-4;   ///< Inverse-gamma rate.
    double p0 = 0.1;         ///< Prior inclusion probability.
    double rho = 1e-6;       ///< ELBO convergence tolerance.
    double tau_init = 1000.0;///< Initial noise precision E[1/sigma^2].
    double pip_threshold = 0.5;
    int max_iters = 500;

    void validate() const;
};

/// Sufficient statistics of a standardized regression problem: G = L^T L,
/// c = L^T y, yy = y^T y over n rows. All inference runs on these, so the
/// design matrix itself is only needed once.
struct VbProblem {
    Eigen::MatrixXd G;
    Eigen::VectorXd c;
    double yy = 0.0;
    std::size_t n = 0;

    Eigen::Index k() const { return c.size(); }

    /// Builds the statistics from data after checking that columns are
    /// centered (|mean| < 1e-8) and y has zero mean.
    static VbProblem from_data(const Eigen::MatrixXd& L, const Eigen::VectorXd& y);
};

/// Variational posterior factors: q(theta) = N(mu_q, Sigma_q),
/// q(sigma^2) = InvGamma(a_q, b_q) with tau = a_q/b_q, q(Z_k) = Bern(w_q_k).
struct VbState {
    Eigen::VectorXd mu_q;
    Eigen::MatrixXd Sigma_q;
    double a_q = 0.0;
    double b_q = 0.0;
    double tau = 0.0;
    Eigen::VectorXd w_q;
    double elbo = 0.0;
    int iter = 0;
};

/// Initial state from an inclusion-probability start vector w0.
VbState vb_initial_state(const VbProblem& problem, const SsHyperparams& h,
                         const Eigen::VectorXd& w0);

/// One full coordinate-ascent sweep: Sigma, mu, a, b, tau updates, then a
/// Gauss-Seidel pass over the inclusion probabilities (ascending k, most
/// recent values). The returned state's `elbo` is evaluated after the
/// (a, b, tau) update and before the w pass, where the simplified bound
/// expression is exact; the sequence of these values is non-decreasing.
VbState vb_iteration(const VbState& state, const VbProblem& problem, const SsHyperparams& h);
VbState vb_iteration(const VbState& state, const Eigen::MatrixXd& L, const Eigen::VectorXd& y,
                     const SsHyperparams& h);

/// Evidence lower bound of a state:
///   K/2 - (N/2) ln 2pi - (K/2) ln v_s + a ln b - ln G(a) + ln G(a_q)
///   - a_q ln b_q + (1/2) ln|Sigma_q| + sum_k [w ln(p0/w) + (1-w) ln((1-p0)/(1-w))]
/// with w clamped to [1e-12, 1 - 1e-12] inside the logs.
double compute_elbo(const VbState& state, const SsHyperparams& h, std::size_t n, Eigen::Index k);

struct PosteriorSummary {
    Eigen::VectorXd pip;             ///< Converged inclusion probabilities.
    std::vector<int> selected;       ///< {k : pip_k > pip_threshold}, ascending.
    Eigen::VectorXd mu_theta_hat;    ///< Posterior mean, zero off-support.
    Eigen::MatrixXd Sigma_theta_hat; ///< Posterior covariance, zero off-support.
    double a_star = 0.0;
    double b_star = 0.0;
    std::vector<double> elbo_trace;
    bool converged = false;
    bool sbl_fallback = false; ///< Initializer hit its iteration cap.
    int iterations = 0;
};

/// Full solver: SBL-initialized w0, coordinate ascent until the ELBO moves
/// less than rho or max_iters is reached (then flagged non-converged).
PosteriorSummary run_vb(const Eigen::MatrixXd& L, const Eigen::VectorXd& y,
                        const SsHyperparams& h);
PosteriorSummary run_vb(const VbProblem& problem, const SsHyperparams& h);

/// Posterior predictive at new dictionary rows:
/// mean = L* mu_hat, cov = L* Sigma_hat L*^T + (b*/a*) I.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict(const Eigen::MatrixXd& L_star,
                                                    const PosteriorSummary& post);

} // namespace sdekit
