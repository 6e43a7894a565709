#pragma once

#include "sdekit/model.hpp"

#include <string>
#include <utility>

namespace sdekit {

/// Reference systems used by the tests, presets and CLI.
enum class BuiltinSystem {
    DuffingSdof, ///< 2 states: hardening oscillator, unit-mass parameters.
    Cubic3Dof,   ///< 6 states: 3-story shear chain with cubic story springs.
    Tmd5Dof,     ///< 12 states: 5-story linear chain plus a tuned mass damper.
};

BuiltinSystem builtin_from_string(const std::string& name);
const char* to_string(BuiltinSystem s);

/// Returns the exact model and its default initial state.
std::pair<SdeModel, Eigen::VectorXd> builtin_system(BuiltinSystem which);

} // namespace sdekit
