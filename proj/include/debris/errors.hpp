#pragma once

#include <stdexcept>
#include <string>

namespace debris {

// Malformed or invariant-violating input data (exit code 2 in the CLI).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and serialization failures (exit code 3 in the CLI).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace debris
