#include "sdekit/basis.hpp"

#include "sdekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdekit {

const char* to_string(BasisKind kind) {
    switch (kind) {
    case BasisKind::Constant: return "constant";
    case BasisKind::Monomial: return "monomial";
    case BasisKind::Signum: return "signum";
    case BasisKind::Absolute: return "absolute";
    case BasisKind::XAbsX: return "x_abs_x";
    case BasisKind::Sine: return "sine";
    case BasisKind::Cosine: return "cosine";
    }
    return "unknown";
}

BasisKind basis_kind_from_string(const std::string& s) {
    if (s == "constant") return BasisKind::Constant;
    if (s == "monomial") return BasisKind::Monomial;
    if (s == "signum") return BasisKind::Signum;
    if (s == "absolute") return BasisKind::Absolute;
    if (s == "x_abs_x") return BasisKind::XAbsX;
    if (s == "sine") return BasisKind::Sine;
    if (s == "cosine") return BasisKind::Cosine;
    throw ConfigError("unknown basis kind: " + s);
}

BasisTerm BasisTerm::constant() {
    return BasisTerm{};
}

BasisTerm BasisTerm::monomial(std::vector<std::pair<int, int>> powers) {
    if (powers.empty())
        throw ConfigError("monomial requires at least one (component, exponent) pair");
    std::sort(powers.begin(), powers.end());
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (powers[i].first < 0)
            throw ConfigError("monomial component index must be >= 0");
        if (powers[i].second < 1)
            throw ConfigError("monomial exponent must be >= 1");
        if (i > 0 && powers[i].first == powers[i - 1].first)
            throw ConfigError("monomial has a repeated component index");
    }
    BasisTerm t;
    t.kind = BasisKind::Monomial;
    t.powers = std::move(powers);
    return t;
}

BasisTerm BasisTerm::monomial(int component, int degree) {
    return monomial(std::vector<std::pair<int, int>>{{component, degree}});
}

namespace {
BasisTerm single(BasisKind kind, int component) {
    if (component < 0)
        throw ConfigError("basis component index must be >= 0");
    BasisTerm t;
    t.kind = kind;
    t.component = component;
    return t;
}
} // namespace

BasisTerm BasisTerm::signum(int component) { return single(BasisKind::Signum, component); }
BasisTerm BasisTerm::absolute(int component) { return single(BasisKind::Absolute, component); }
BasisTerm BasisTerm::x_abs_x(int component) { return single(BasisKind::XAbsX, component); }
BasisTerm BasisTerm::sine(int component) { return single(BasisKind::Sine, component); }
BasisTerm BasisTerm::cosine(int component) { return single(BasisKind::Cosine, component); }

int BasisTerm::degree() const {
    switch (kind) {
    case BasisKind::Constant:
        return 0;
    case BasisKind::Monomial: {
        int d = 0;
        for (const auto& [c, e] : powers) {
            (void)c;
            d += e;
        }
        return d;
    }
    default:
        return 1;
    }
}

int BasisTerm::max_component() const {
    switch (kind) {
    case BasisKind::Constant:
        return -1;
    case BasisKind::Monomial: {
        int m = -1;
        for (const auto& [c, e] : powers) {
            (void)e;
            m = std::max(m, c);
        }
        return m;
    }
    default:
        return component;
    }
}

std::string BasisTerm::name() const {
    std::ostringstream os;
    auto var = [](int c) { return "x" + std::to_string(c + 1); };
    switch (kind) {
    case BasisKind::Constant:
        return "1";
    case BasisKind::Monomial:
        for (std::size_t i = 0; i < powers.size(); ++i) {
            if (i > 0) os << "*";
            os << var(powers[i].first);
            if (powers[i].second > 1) os << "^" << powers[i].second;
        }
        return os.str();
    case BasisKind::Signum:
        return "sgn(" + var(component) + ")";
    case BasisKind::Absolute:
        return "|" + var(component) + "|";
    case BasisKind::XAbsX:
        return var(component) + "|" + var(component) + "|";
    case BasisKind::Sine:
        return "sin(" + var(component) + ")";
    case BasisKind::Cosine:
        return "cos(" + var(component) + ")";
    }
    return "?";
}

bool BasisTerm::operator==(const BasisTerm& other) const {
    if (kind != other.kind) return false;
    if (kind == BasisKind::Monomial) return powers == other.powers;
    if (kind == BasisKind::Constant) return true;
    return component == other.component;
}

namespace {
double ipow(double x, int e) {
    double r = 1.0;
    while (e > 0) {
        if (e & 1) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}
} // namespace

double evaluate_basis(const BasisTerm& term, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (term.max_component() >= x.size())
        throw DimensionError("basis term '" + term.name() + "' references component " +
                             std::to_string(term.max_component() + 1) + " but state has " +
                             std::to_string(x.size()) + " entries");
    switch (term.kind) {
    case BasisKind::Constant:
        return 1.0;
    case BasisKind::Monomial: {
        double r = 1.0;
        for (const auto& [c, e] : term.powers)
            r *= ipow(x[c], e);
        return r;
    }
    case BasisKind::Signum: {
        double v = x[term.component];
        return (v > 0.0) - (v < 0.0);
    }
    case BasisKind::Absolute:
        return std::abs(x[term.component]);
    case BasisKind::XAbsX: {
        double v = x[term.component];
        return v * std::abs(v);
    }
    case BasisKind::Sine:
        return std::sin(x[term.component]);
    case BasisKind::Cosine:
        return std::cos(x[term.component]);
    }
    return 0.0;
}

double BasisExpansion::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double acc = 0.0;
    for (const auto& [term, weight] : terms)
        acc += weight * evaluate_basis(term, x);
    return acc;
}

bool BasisExpansion::is_constant_only() const {
    for (const auto& [term, weight] : terms)
        if (term.kind != BasisKind::Constant && weight != 0.0)
            return false;
    return true;
}

double BasisExpansion::constant_weight() const {
    double acc = 0.0;
    for (const auto& [term, weight] : terms)
        if (term.kind == BasisKind::Constant)
            acc += weight;
    return acc;
}

double BasisExpansion::weight_of(const BasisTerm& query) const {
    double acc = 0.0;
    for (const auto& [term, weight] : terms)
        if (term == query)
            acc += weight;
    return acc;
}

std::string BasisExpansion::to_pretty_string() const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [term, weight] : terms) {
        if (!first) os << (weight < 0 ? " - " : " + ");
        else if (weight < 0) os << "-";
        first = false;
        os << std::abs(weight);
        if (term.kind != BasisKind::Constant) os << "*" << term.name();
    }
    return os.str();
}

} // namespace sdekit
