#include "sdekit/builtin.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <map>

namespace sdekit {

namespace {

/// Accumulates monomial coefficients so algebraically expanded expressions
/// end up with one entry per distinct term.
class ExpansionBuilder {
public:
    explicit ExpansionBuilder(int dim) : dim_(dim) {}

    void add_constant(double w) {
        if (w != 0.0) constant_ += w;
    }

    void add_linear(int comp, double w) { add_monomial({{comp, 1}}, w); }

    void add_monomial(std::vector<std::pair<int, int>> powers, double w) {
        if (w == 0.0) return;
        std::sort(powers.begin(), powers.end());
        coeffs_[powers] += w;
    }

    /// w * (x_b - x_a)^3 expanded into monomials.
    void add_relative_cubic(int b, int a, double w) {
        add_monomial({{b, 3}}, w);
        add_monomial({{a, 1}, {b, 2}}, -3.0 * w);
        add_monomial({{a, 2}, {b, 1}}, 3.0 * w);
        add_monomial({{a, 3}}, -w);
    }

    BasisExpansion build() const {
        BasisExpansion e;
        e.dim = dim_;
        if (constant_ != 0.0)
            e.terms.emplace_back(BasisTerm::constant(), constant_);
        for (const auto& [powers, w] : coeffs_)
            if (w != 0.0)
                e.terms.emplace_back(BasisTerm::monomial(powers), w);
        return e;
    }

private:
    int dim_;
    double constant_ = 0.0;
    std::map<std::vector<std::pair<int, int>>, double> coeffs_;
};

BasisExpansion constant_expansion(int dim, double w) {
    BasisExpansion e;
    e.dim = dim;
    e.terms.emplace_back(BasisTerm::constant(), w);
    return e;
}

BasisExpansion zero_expansion(int dim) {
    BasisExpansion e;
    e.dim = dim;
    return e;
}

BasisExpansion velocity_identity(int dim, int velocity_index) {
    BasisExpansion e;
    e.dim = dim;
    e.terms.emplace_back(BasisTerm::monomial(velocity_index, 1), 1.0);
    return e;
}

std::pair<SdeModel, Eigen::VectorXd> make_duffing() {
    const double k = 1000.0, c = 2.0, alpha = 100000.0, sigma = 1.0;
    SdeModel model;
    model.dim = 2;
    model.label = "duffing_sdof";
    model.drift.push_back(velocity_identity(2, 1));
    ExpansionBuilder f2(2);
    f2.add_linear(0, -k);
    f2.add_linear(1, -c);
    f2.add_monomial({{0, 3}}, -alpha);
    model.drift.push_back(f2.build());
    model.diffusion.push_back({zero_expansion(2), false});
    model.diffusion.push_back({constant_expansion(2, sigma), false});
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
    return {std::move(model), std::move(x0)};
}

/// Shear chain: story spring i (1-based) connects floor i-1 to floor i, with
/// linear stiffness k[i], viscous damping c[i] and, optionally, a cubic
/// coefficient alpha[i] acting on the same relative displacement. States are
/// interleaved [u1, v1, u2, v2, ...]; a trailing appendage (the damper mass)
/// is just one more link in the chain. Unit masses throughout.
std::pair<SdeModel, Eigen::VectorXd> make_chain(const std::string& label,
                                                const std::vector<double>& k,
                                                const std::vector<double>& c,
                                                const std::vector<double>& alpha,
                                                const std::vector<double>& sigma,
                                                const Eigen::VectorXd& x0) {
    const int n = static_cast<int>(sigma.size()); // number of masses
    const int dim = 2 * n;
    const int links = static_cast<int>(k.size());
    SdeModel model;
    model.dim = dim;
    model.label = label;
    auto u = [](int i) { return 2 * i; };     // displacement index of mass i (0-based)
    auto v = [](int i) { return 2 * i + 1; }; // velocity index of mass i

    for (int i = 0; i < n; ++i) {
        model.drift.push_back(velocity_identity(dim, v(i)));

        ExpansionBuilder f(dim);
        // Link below (connects mass i-1, or the ground when i == 0).
        f.add_linear(u(i), -k[i]);
        f.add_linear(v(i), -c[i]);
        if (i > 0) {
            f.add_linear(u(i - 1), k[i]);
            f.add_linear(v(i - 1), c[i]);
        }
        if (alpha[i] != 0.0) {
            if (i > 0)
                f.add_relative_cubic(u(i), u(i - 1), -alpha[i]);
            else
                f.add_monomial({{u(0), 3}}, -alpha[0]);
        }
        // Link above (absent for the top mass).
        if (i + 1 < links) {
            f.add_linear(u(i + 1), k[i + 1]);
            f.add_linear(v(i + 1), c[i + 1]);
            f.add_linear(u(i), -k[i + 1]);
            f.add_linear(v(i), -c[i + 1]);
            if (alpha[i + 1] != 0.0)
                f.add_relative_cubic(u(i + 1), u(i), alpha[i + 1]);
        }
        model.drift.push_back(f.build());

        model.diffusion.push_back({zero_expansion(dim), false});
        model.diffusion.push_back(sigma[i] != 0.0
                                      ? DiffusionTerm{constant_expansion(dim, sigma[i]), false}
                                      : DiffusionTerm{zero_expansion(dim), false});
    }
    return {std::move(model), x0};
}

std::pair<SdeModel, Eigen::VectorXd> make_cubic3dof() {
    Eigen::VectorXd x0(6);
    x0 << 0.05, 0.0, 0.01, 0.0, 0.01, 0.0;
    return make_chain("cubic_3dof",
                      {1000.0, 2000.0, 3000.0},
                      {2.0, 2.0, 2.0},
                      {100000.0, 100000.0, 100000.0},
                      {1.0, 1.0, 1.0},
                      x0);
}

std::pair<SdeModel, Eigen::VectorXd> make_tmd5dof() {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(12);
    return make_chain("tmd_5dof",
                      {1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 300.0},
                      {2.0, 2.0, 2.0, 2.0, 2.0, 2.0},
                      {0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
                      {1.0, 1.0, 1.0, 1.0, 1.0, 0.0},
                      x0);
}

} // namespace

BuiltinSystem builtin_from_string(const std::string& name) {
    if (name == "duffing_sdof") return BuiltinSystem::DuffingSdof;
    if (name == "cubic_3dof") return BuiltinSystem::Cubic3Dof;
    if (name == "tmd_5dof") return BuiltinSystem::Tmd5Dof;
    throw ConfigError("unknown built-in system: " + name);
}

const char* to_string(BuiltinSystem s) {
    switch (s) {
    case BuiltinSystem::DuffingSdof: return "duffing_sdof";
    case BuiltinSystem::Cubic3Dof: return "cubic_3dof";
    case BuiltinSystem::Tmd5Dof: return "tmd_5dof";
    }
    return "unknown";
}

std::pair<SdeModel, Eigen::VectorXd> builtin_system(BuiltinSystem which) {
    switch (which) {
    case BuiltinSystem::DuffingSdof: return make_duffing();
    case BuiltinSystem::Cubic3Dof: return make_cubic3dof();
    case BuiltinSystem::Tmd5Dof: return make_tmd5dof();
    }
    throw ConfigError("unknown built-in system id");
}

} // namespace sdekit
