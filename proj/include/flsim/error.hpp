#pragma once

#include <stdexcept>
#include <string>

namespace flsim {

/// Invalid experiment or fleet configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    static constexpr int kExitCode = 2;
};

/// Violated precondition or failed simulation step. Maps to CLI exit code 3.
class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    static constexpr int kExitCode = 3;
};

}  // namespace flsim
