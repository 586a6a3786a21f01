#pragma once

#include <stdexcept>
#include <string>

namespace timebridge {

// Error taxonomy shared by the core and mirrored by the C API status codes.

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct dimension_error : std::runtime_error {
    explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rank-deficient design matrix in a regression.
struct singular_error : std::runtime_error {
    explicit singular_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Statistically degenerate input (constant series, zero residuals, ...).
struct degenerate_error : std::runtime_error {
    explicit degenerate_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct contract_error : std::runtime_error {
    explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace timebridge
