#pragma once

#include <stdexcept>
#include <string>

namespace docres {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParam : std::runtime_error {
    explicit InvalidParam(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyTaskError : std::runtime_error {
    explicit EmptyTaskError(const std::string& msg) : std::runtime_error(msg) {}
};

// CLI validation problems map to exit code 2, everything else to 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace docres
