#include <doctest.h>

#include <sdekit/builtin.hpp>
#include <sdekit/errors.hpp>
#include <sdekit/reliability.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>

using namespace sdekit;

namespace {

SdeModel scalar_model(double drift_const, double drift_linear, double drift_cubic,
                      double noise_const) {
    SdeModel m;
    m.dim = 1;
    m.drift.resize(1);
    m.drift[0].dim = 1;
    if (drift_const != 0.0) m.drift[0].terms.push_back({BasisTerm::constant(), drift_const});
    if (drift_linear != 0.0)
        m.drift[0].terms.push_back({BasisTerm::monomial(0, 1), drift_linear});
    if (drift_cubic != 0.0) m.drift[0].terms.push_back({BasisTerm::monomial(0, 3), drift_cubic});
    m.diffusion.resize(1);
    m.diffusion[0].expansion.dim = 1;
    if (noise_const != 0.0)
        m.diffusion[0].expansion.terms.push_back({BasisTerm::constant(), noise_const});
    return m;
}

const Eigen::VectorXd kZero1 = Eigen::VectorXd::Zero(1);

} // namespace

TEST_CASE("a deterministic ramp crosses the threshold at a known report slot") {
    // dx/dt = 1 from 0: state passes 0.55 at step 56, i.e. report slot t = 0.6.
    const SdeModel m = scalar_model(1.0, 0.0, 0.0, 0.0);
    const FailureCurve c =
        failure_probability(m, kZero1, 0.01, 1.0, 100, {0, 0.55, false}, 42, 0.1);
    REQUIRE(c.times.size() == 11);
    CHECK(c.times(0) == doctest::Approx(0.0));
    CHECK(c.times(10) == doctest::Approx(1.0));
    for (int i = 0; i <= 5; ++i) CHECK(c.pf(i) == doctest::Approx(0.0));
    for (int i = 6; i <= 10; ++i) CHECK(c.pf(i) == doctest::Approx(1.0));
    CHECK(c.diverged_paths == 0);
    CHECK(c.n_paths == 100);
}

TEST_CASE("an initial state beyond the threshold fails at time zero") {
    const SdeModel m = scalar_model(0.0, 0.0, 0.0, 0.0);
    Eigen::VectorXd x0(1);
    x0 << 2.0;
    const FailureCurve c = failure_probability(m, x0, 0.01, 0.5, 100, {0, 1.0, false}, 1, 0.1);
    for (Eigen::Index i = 0; i < c.pf.size(); ++i) CHECK(c.pf(i) == doctest::Approx(1.0));
    CHECK(c.ci_halfwidth(0) == doctest::Approx(0.0));
}

TEST_CASE("an unreachable threshold keeps the curve at zero") {
    const SdeModel m = scalar_model(0.0, -1.0, 0.0, 0.0); // decay toward 0
    Eigen::VectorXd x0(1);
    x0 << 0.5;
    const FailureCurve c = failure_probability(m, x0, 0.01, 1.0, 120, {0, 1.0, false}, 1, 0.1);
    for (Eigen::Index i = 0; i < c.pf.size(); ++i) CHECK(c.pf(i) == doctest::Approx(0.0));
}

TEST_CASE("signed versus absolute exceedance") {
    // Drift pushes down; the signed test on x > -0.5 fails immediately
    // (0 > -0.5), while |x| > 0.5 fails only once the state has moved.
    const SdeModel m = scalar_model(-1.0, 0.0, 0.0, 0.0);
    const FailureCurve signed_c =
        failure_probability(m, kZero1, 0.01, 1.0, 100, {0, -0.5, false}, 9, 0.1);
    CHECK(signed_c.pf(0) == doctest::Approx(1.0));

    const FailureCurve abs_c =
        failure_probability(m, kZero1, 0.01, 1.0, 100, {0, 0.5, true}, 9, 0.1);
    CHECK(abs_c.pf(0) == doctest::Approx(0.0));
    CHECK(abs_c.pf(4) == doctest::Approx(0.0)); // |x(0.4)| = 0.4
    CHECK(abs_c.pf(6) == doctest::Approx(1.0)); // |x(0.6)| = 0.6
}

TEST_CASE("brownian first-passage probability matches the reflection value") {
    // For standard Brownian motion and barrier b, P(sup_{s<=T} W_s > b)
    // = 2(1 - Phi(b/sqrt(T))); at b = 1, T = 1 that is 0.3173. The Euler
    // scheme misses intra-step excursions, so the estimate sits slightly low.
    const SdeModel m = scalar_model(0.0, 0.0, 0.0, 1.0);
    const FailureCurve c =
        failure_probability(m, kZero1, 0.001, 1.0, 4000, {0, 1.0, false}, 2024, 0.1);
    const double analytic = 2.0 * (1.0 - 0.5 * std::erfc(-1.0 / std::sqrt(2.0)));
    const double est = c.pf(c.pf.size() - 1);
    CHECK(est > 0.24);
    CHECK(est < analytic + 0.02);

    // Monotone non-decreasing, and the reported half-width matches the formula.
    for (Eigen::Index i = 1; i < c.pf.size(); ++i) CHECK(c.pf(i) >= c.pf(i - 1));
    for (Eigen::Index i = 0; i < c.pf.size(); ++i) {
        const double p = c.pf(i);
        CHECK(c.ci_halfwidth(i) ==
              doctest::Approx(1.96 * std::sqrt(p * (1.0 - p) / 4000.0)).epsilon(1e-12));
    }
}

TEST_CASE("curves are deterministic in the seed and invariant to thread count") {
    const SdeModel m = scalar_model(0.0, -2.0, 0.0, 1.0);
    const FailureCurve a =
        failure_probability(m, kZero1, 0.01, 1.0, 300, {0, 0.8, false}, 77, 0.1, 1);
    const FailureCurve b =
        failure_probability(m, kZero1, 0.01, 1.0, 300, {0, 0.8, false}, 77, 0.1, 4);
    const FailureCurve other =
        failure_probability(m, kZero1, 0.01, 1.0, 300, {0, 0.8, false}, 78, 0.1, 1);
    REQUIRE(a.pf.size() == b.pf.size());
    for (Eigen::Index i = 0; i < a.pf.size(); ++i) CHECK(a.pf(i) == b.pf(i));
    bool identical = true;
    for (Eigen::Index i = 0; i < a.pf.size(); ++i)
        if (a.pf(i) != other.pf(i)) identical = false;
    CHECK_FALSE(identical);
}

TEST_CASE("paths that blow up count as failures from the divergence step") {
    // x' = x^3 from 2 with no noise explodes in finite time; an infinite
    // threshold is never exceeded by finite values, so every failure recorded
    // comes from the divergence accounting.
    const SdeModel m = scalar_model(0.0, 0.0, 1.0, 0.0);
    Eigen::VectorXd x0(1);
    x0 << 2.0;
    const FailureCurve c = failure_probability(
        m, x0, 0.01, 2.0, 100, {0, std::numeric_limits<double>::infinity(), false}, 5, 0.1);
    CHECK(c.diverged_paths == 100);
    CHECK(c.pf(c.pf.size() - 1) == doctest::Approx(1.0));
    CHECK(c.pf(0) == doctest::Approx(0.0));
}

TEST_CASE("curve comparison reports sup and mean gaps, and insists on one grid") {
    const SdeModel ramp = scalar_model(1.0, 0.0, 0.0, 0.0);
    const FailureCurve a =
        failure_probability(ramp, kZero1, 0.01, 1.0, 100, {0, 0.55, false}, 1, 0.1);
    const FailureCurve b =
        failure_probability(ramp, kZero1, 0.01, 1.0, 100, {0, 0.35, false}, 1, 0.1);
    // a fails from slot 6, b from slot 4: they differ on exactly two slots.
    const CurveComparison cmp = compare_curves(a, b);
    CHECK(cmp.sup_diff == doctest::Approx(1.0));
    CHECK(cmp.mean_abs_diff == doctest::Approx(2.0 / 11.0));

    const FailureCurve shorter =
        failure_probability(ramp, kZero1, 0.01, 0.5, 100, {0, 0.55, false}, 1, 0.1);
    CHECK_THROWS_AS(compare_curves(a, shorter), DimensionError);
}

TEST_CASE("argument validation") {
    const SdeModel m = scalar_model(0.0, -1.0, 0.0, 1.0);
    CHECK_THROWS_AS(
        failure_probability(m, kZero1, 0.01, 1.0, 50, {0, 1.0, false}, 1, 0.1),
        ConfigError); // fewer than 100 paths
    CHECK_THROWS_AS(
        failure_probability(m, kZero1, -0.01, 1.0, 100, {0, 1.0, false}, 1, 0.1),
        ConfigError); // negative dt
    CHECK_THROWS_AS(
        failure_probability(m, kZero1, 0.01, 1.0, 100, {3, 1.0, false}, 1, 0.1),
        DimensionError); // monitored state out of range
    Eigen::VectorXd bad_x0(2);
    bad_x0 << 0.0, 0.0;
    CHECK_THROWS_AS(
        failure_probability(m, bad_x0, 0.01, 1.0, 100, {0, 1.0, false}, 1, 0.1),
        DimensionError); // x0 dimension mismatch
}
