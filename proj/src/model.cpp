#include "sdekit/model.hpp"

#include "sdekit/errors.hpp"

#include <cmath>

namespace sdekit {

double DiffusionTerm::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double v = expansion.evaluate(x);
    if (!sqrt_form) return v;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

bool DiffusionTerm::is_zero() const {
    for (const auto& [term, weight] : expansion.terms)
        if (weight != 0.0)
            return false;
    return true;
}

void SdeModel::validate() const {
    if (dim <= 0)
        throw DimensionError("model dimension must be positive");
    if (static_cast<int>(drift.size()) != dim)
        throw DimensionError("model has " + std::to_string(drift.size()) +
                             " drift expansions for dimension " + std::to_string(dim));
    if (static_cast<int>(diffusion.size()) != dim)
        throw DimensionError("model has " + std::to_string(diffusion.size()) +
                             " diffusion entries for dimension " + std::to_string(dim));
    auto check_expansion = [&](const BasisExpansion& e, const char* what, int i) {
        for (const auto& [term, weight] : e.terms) {
            (void)weight;
            if (term.max_component() >= dim)
                throw DimensionError(std::string(what) + " expansion " + std::to_string(i + 1) +
                                     " references component " +
                                     std::to_string(term.max_component() + 1) +
                                     " outside dimension " + std::to_string(dim));
        }
    };
    for (int i = 0; i < dim; ++i) {
        check_expansion(drift[i], "drift", i);
        check_expansion(diffusion[i].expansion, "diffusion", i);
    }
}

void SdeModel::eval_drift(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const {
    out.resize(dim);
    for (int i = 0; i < dim; ++i)
        out[i] = drift[i].evaluate(x);
}

void SdeModel::eval_diffusion(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const {
    out.resize(dim);
    for (int i = 0; i < dim; ++i)
        out[i] = diffusion[i].evaluate(x);
}

void Ensemble::validate() const {
    if (paths.empty())
        throw DimensionError("ensemble has no paths");
    const auto& first = paths.front();
    for (std::size_t j = 1; j < paths.size(); ++j) {
        const auto& p = paths[j];
        if (p.dt != first.dt || p.t0 != first.t0 || p.rows() != first.rows() ||
            p.dim() != first.dim())
            throw DimensionError("ensemble path " + std::to_string(j) +
                                 " does not share the common grid/shape");
    }
}

} // namespace sdekit
