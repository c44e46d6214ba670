#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace salvage {

/// Latency value meaning "demand beyond peak sustainable bandwidth": queuing
/// is unbounded there, so the optimizer treats the whole candidate as +inf.
inline constexpr double kInfeasibleLatency = std::numeric_limits<double>::infinity();

inline bool is_feasible(double latency_ns) { return std::isfinite(latency_ns); }

/// Malformed CSV/JSON input. Messages name the offending row or field.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a schema or invariant.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A request that no provisioned capacity can satisfy (grid refusals,
/// availability below the smallest quantization point).
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline double parse_double(std::string_view text, bool& ok) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    ok = (ec == std::errc{} && ptr == last);
    return v;
}

} // namespace salvage
