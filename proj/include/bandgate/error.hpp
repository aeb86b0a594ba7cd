#pragma once

#include <stdexcept>
#include <string>

namespace bandgate {

/// Bad arguments, malformed configuration, or malformed input files.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace bandgate
