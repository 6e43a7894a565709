#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sdekit {

enum class BasisKind : std::uint8_t {
    Constant,  ///< 1
    Monomial,  ///< prod_i x_i^{e_i}, total degree >= 1
    Signum,    ///< sgn(x_i), sgn(0) = 0
    Absolute,  ///< |x_i|
    XAbsX,     ///< x_i * |x_i|
    Sine,      ///< sin(x_i)
    Cosine,    ///< cos(x_i)
};

const char* to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

/// One scalar-valued library function of the state vector.
///
/// Monomials carry a sparse exponent list (component, exponent>=1) sorted by
/// component; the other non-constant kinds act on a single component.
struct BasisTerm {
    BasisKind kind = BasisKind::Constant;
    std::vector<std::pair<int, int>> powers; ///< Monomial only.
    int component = -1;                      ///< Single-component kinds only.

    static BasisTerm constant();
    static BasisTerm monomial(std::vector<std::pair<int, int>> powers);
    /// Convenience: x_i^degree.
    static BasisTerm monomial(int component, int degree);
    static BasisTerm signum(int component);
    static BasisTerm absolute(int component);
    static BasisTerm x_abs_x(int component);
    static BasisTerm sine(int component);
    static BasisTerm cosine(int component);

    /// Total polynomial degree (monomial), 0 for constant, 1 otherwise
    /// (nonpolynomial kinds are reported as degree 1 for ordering purposes).
    int degree() const;

    /// Largest state index referenced; -1 for the constant.
    int max_component() const;

    /// Human-readable name, e.g. "x1^2*x3", "sgn(x2)", "x1|x1|".
    std::string name() const;

    bool operator==(const BasisTerm& other) const;
    bool operator!=(const BasisTerm& other) const { return !(*this == other); }
};

/// Evaluate a single term at state x. Throws DimensionError if the term
/// references a component outside x.
double evaluate_basis(const BasisTerm& term, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Weighted sum of basis terms over a fixed state dimension.
struct BasisExpansion {
    int dim = 0;
    std::vector<std::pair<BasisTerm, double>> terms;

    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    bool empty() const { return terms.empty(); }

    /// True when every term with nonzero weight is the constant.
    bool is_constant_only() const;

    /// Weight attached to the constant term (0 if absent).
    double constant_weight() const;

    /// Weight attached to an exact term match (0 if absent).
    double weight_of(const BasisTerm& term) const;

    std::string to_pretty_string() const;
};

} // namespace sdekit
