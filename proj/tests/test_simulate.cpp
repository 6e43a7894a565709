#include <doctest.h>

#include <sdekit/builtin.hpp>
#include <sdekit/errors.hpp>
#include <sdekit/simulate.hpp>

#include <Eigen/Dense>

#include <cmath>

using namespace sdekit;

namespace {

SdeModel brownian_1d(double sigma) {
    SdeModel m;
    m.dim = 1;
    m.drift.resize(1);
    m.drift[0].dim = 1;
    m.diffusion.resize(1);
    m.diffusion[0].expansion.dim = 1;
    m.diffusion[0].expansion.terms = {{BasisTerm::constant(), sigma}};
    m.label = "brownian";
    return m;
}

SdeModel ou_1d(double theta, double sigma) {
    SdeModel m = brownian_1d(sigma);
    m.drift[0].terms = {{BasisTerm::monomial(0, 1), -theta}};
    m.label = "ou";
    return m;
}

SdeModel exploding_1d() {
    SdeModel m = brownian_1d(0.0);
    m.drift[0].terms = {{BasisTerm::monomial(0, 3), 1.0}}; // x' = x^3 blows up
    return m;
}

} // namespace

TEST_CASE("single-path integration is deterministic in the seed") {
    const auto model = ou_1d(1.0, 0.5);
    Eigen::VectorXd x0(1);
    x0 << 0.3;
    const Trajectory a = euler_maruyama(model, x0, 0.01, 100, 42);
    const Trajectory b = euler_maruyama(model, x0, 0.01, 100, 42);
    const Trajectory c = euler_maruyama(model, x0, 0.01, 100, 43);
    CHECK(a.states == b.states);
    CHECK(a.states.rows() == 101);
    CHECK((a.states - c.states).norm() > 0.0);
    CHECK(a.states(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("drift-only integration reproduces the ODE solution") {
    // x' = -x from 1: x(t) = e^-t; explicit Euler converges at O(dt).
    const auto model = ou_1d(1.0, 0.0);
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    const Trajectory t = euler_maruyama(model, x0, 1e-4, 10000, 7);
    CHECK(t.states(10000, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("ensemble simulation is reproducible and thread-count invariant") {
    const auto model = ou_1d(2.0, 1.0);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    const Ensemble one = simulate_ensemble(model, x0, 0.01, 0.5, 8, 99, 1);
    const Ensemble four = simulate_ensemble(model, x0, 0.01, 0.5, 8, 99, 4);
    REQUIRE(one.n_paths() == 8);
    REQUIRE(four.n_paths() == 8);
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(one.paths[j].states == four.paths[j].states);

    // Paths are mutually distinct realizations.
    CHECK((one.paths[0].states - one.paths[1].states).norm() > 0.0);
}

TEST_CASE("pure diffusion accumulates variance t") {
    const auto model = brownian_1d(1.0);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    const double T = 1.0;
    const std::size_t n = 4000;
    const Ensemble ens = simulate_ensemble(model, x0, 0.01, T, n, 2024);

    double sum = 0.0, sumsq = 0.0;
    for (const auto& p : ens.paths) {
        const double xT = p.states(p.rows() - 1, 0);
        sum += xT;
        sumsq += xT * xT;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    // se(var) ~ T sqrt(2/n) ~ 0.022; allow 4 sigma.
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(T).epsilon(0.09));
}

TEST_CASE("mean-reverting process approaches its stationary variance") {
    const double theta = 2.0, sigma = 1.0;
    const auto model = ou_1d(theta, sigma);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    // Burn-in 5/theta time units, then pool the tail across paths.
    const Ensemble ens = simulate_ensemble(model, x0, 0.001, 5.0, 200, 11);
    double sumsq = 0.0;
    std::size_t count = 0;
    for (const auto& p : ens.paths) {
        for (Eigen::Index r = p.rows() / 2; r < p.rows(); ++r) {
            sumsq += p.states(r, 0) * p.states(r, 0);
            ++count;
        }
    }
    const double var = sumsq / static_cast<double>(count);
    CHECK(var == doctest::Approx(sigma * sigma / (2.0 * theta)).epsilon(0.05));
}

TEST_CASE("diverging paths raise a divergence error with the step") {
    const auto model = exploding_1d();
    Eigen::VectorXd x0(1);
    x0 << 10.0;
    try {
        euler_maruyama(model, x0, 0.1, 1000, 1);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.step > 0);
    }
}

TEST_CASE("measurement noise matches the requested relative level") {
    const auto model = ou_1d(1.0, 1.0);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    const Ensemble clean = simulate_ensemble(model, x0, 0.01, 2.0, 50, 5);
    const Ensemble noisy = add_measurement_noise(clean, 10.0, 77);

    // Pool the added noise and the clean signal over everything.
    double clean_sq = 0.0, clean_sum = 0.0, diff_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < clean.n_paths(); ++j) {
        for (Eigen::Index r = 0; r < clean.paths[j].rows(); ++r) {
            const double v = clean.paths[j].states(r, 0);
            clean_sum += v;
            clean_sq += v * v;
            const double d = noisy.paths[j].states(r, 0) - v;
            diff_sq += d * d;
            ++count;
        }
    }
    const double nn = static_cast<double>(count);
    const double col_std = std::sqrt(clean_sq / nn - (clean_sum / nn) * (clean_sum / nn));
    const double noise_std = std::sqrt(diff_sq / nn);
    CHECK(noise_std == doctest::Approx(0.10 * col_std).epsilon(0.05));

    // Zero percent is the identity.
    const Ensemble same = add_measurement_noise(clean, 0.0, 77);
    CHECK(same.paths[0].states == clean.paths[0].states);
}

TEST_CASE("column-restricted noise leaves other states untouched") {
    const auto [model, x0] = builtin_system(BuiltinSystem::DuffingSdof);
    const Ensemble clean = simulate_ensemble(model, x0, 0.001, 0.2, 5, 3);
    const Ensemble noisy = add_measurement_noise(clean, 5.0, 9, {0});
    for (std::size_t j = 0; j < clean.n_paths(); ++j) {
        CHECK(noisy.paths[j].states.col(1) == clean.paths[j].states.col(1));
        CHECK((noisy.paths[j].states.col(0) - clean.paths[j].states.col(0)).norm() > 0.0);
    }
}

TEST_CASE("noise application is deterministic in its seed") {
    const auto model = brownian_1d(1.0);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    const Ensemble clean = simulate_ensemble(model, x0, 0.01, 0.5, 4, 21);
    const Ensemble n1 = add_measurement_noise(clean, 5.0, 100);
    const Ensemble n2 = add_measurement_noise(clean, 5.0, 100);
    const Ensemble n3 = add_measurement_noise(clean, 5.0, 101);
    CHECK(n1.paths[0].states == n2.paths[0].states);
    CHECK((n1.paths[0].states - n3.paths[0].states).norm() > 0.0);
}
