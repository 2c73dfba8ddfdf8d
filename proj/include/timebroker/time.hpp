#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace timebroker {

// Integer microseconds everywhere. Millisecond-scale step sizes and
// microsecond-scale profiling share one exact unit; no floating-point time.

struct Duration {
    std::int64_t micros = 0;

    constexpr auto operator<=>(const Duration&) const = default;
};

struct SimTime {
    std::int64_t micros = 0;

    constexpr auto operator<=>(const SimTime&) const = default;
};

constexpr Duration usec(std::int64_t n)
{
    if (n < 0) {
        throw std::invalid_argument("Duration must be non-negative");
    }
    return Duration{n};
}

constexpr Duration msec(std::int64_t n) { return usec(n * 1000); }
constexpr Duration sec(std::int64_t n) { return usec(n * 1000000); }

constexpr SimTime at_usec(std::int64_t n)
{
    if (n < 0) {
        throw std::invalid_argument("SimTime must be non-negative");
    }
    return SimTime{n};
}

constexpr SimTime at_msec(std::int64_t n) { return at_usec(n * 1000); }
constexpr SimTime at_sec(std::int64_t n) { return at_usec(n * 1000000); }

constexpr SimTime operator+(SimTime t, Duration d) { return SimTime{t.micros + d.micros}; }
constexpr Duration operator+(Duration a, Duration b) { return Duration{a.micros + b.micros}; }
constexpr Duration operator*(Duration d, std::int64_t k) { return Duration{d.micros * k}; }

// Elapsed time between two instants; negative spans are a caller bug.
constexpr Duration operator-(SimTime a, SimTime b)
{
    if (a < b) {
        throw std::invalid_argument("SimTime difference would be negative");
    }
    return Duration{a.micros - b.micros};
}

inline std::string to_string(SimTime t) { return std::to_string(t.micros) + "us"; }
inline std::string to_string(Duration d) { return std::to_string(d.micros) + "us"; }

} // namespace timebroker
