#ifndef TISSUESCALE_COMMON_HPP
#define TISSUESCALE_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ts {

inline constexpr const char* kVersion = "1.0.0";

/// Configuration / input errors (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometry construction errors (inclusion touching the cell boundary etc.).
struct GeometryError : ConfigError {
    using ConfigError::ConfigError;
};

/// Precondition violations on operation inputs (negative coefficients, ...).
struct ValidationError : ConfigError {
    using ConfigError::ConfigError;
};

/// Linear solver failures (CLI exit code 3). Carries the residual trace.
struct SolverError : std::runtime_error {
    std::vector<double> residual_trace;
    SolverError(const std::string& what, std::vector<double> trace = {})
        : std::runtime_error(what), residual_trace(std::move(trace)) {}
};

/// Runtime monitor trips: nonnegativity, compatibility defects (exit code 4).
struct MonitorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// FNV-1a, used for config and cache keys. Stable across platforms.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t v);

} // namespace ts

#endif
