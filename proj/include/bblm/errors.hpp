#ifndef BBLM_ERRORS_HPP
#define BBLM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bblm {

// Bad flags, bad config values, missing input paths. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent data files. CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss went non-finite. CLI exit code 4.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bblm

#endif
