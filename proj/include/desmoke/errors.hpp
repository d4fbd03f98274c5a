#pragma once

#include <stdexcept>
#include <string>

namespace desmoke {

// CLI exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CLI exit code 3
struct MissingPrerequisiteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CLI exit code 4
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace desmoke
