#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

#include "rtvsim/error.hpp"

namespace rtvsim {

/// Span of simulated time in integer nanoseconds.
struct Duration {
    std::uint64_t ns = 0;

    constexpr Duration() = default;
    constexpr explicit Duration(std::uint64_t v) : ns(v) {}

    friend constexpr auto operator<=>(Duration, Duration) = default;

    Duration operator+(Duration o) const {
        if (ns > std::numeric_limits<std::uint64_t>::max() - o.ns)
            throw OverflowError("duration addition overflows 64-bit nanoseconds");
        return Duration{ns + o.ns};
    }
    Duration& operator+=(Duration o) { return *this = *this + o; }

    Duration operator-(Duration o) const {
        if (o.ns > ns)
            throw OverflowError("duration subtraction underflows");
        return Duration{ns - o.ns};
    }

    Duration operator*(std::uint64_t k) const {
        if (k != 0 && ns > std::numeric_limits<std::uint64_t>::max() / k)
            throw OverflowError("duration multiplication overflows");
        return Duration{ns * k};
    }
};

/// Instant on the simulation clock, nanoseconds since start.
struct SimTime {
    std::uint64_t ns = 0;

    constexpr SimTime() = default;
    constexpr explicit SimTime(std::uint64_t v) : ns(v) {}

    static constexpr SimTime max() { return SimTime{std::numeric_limits<std::uint64_t>::max()}; }

    friend constexpr auto operator<=>(SimTime, SimTime) = default;

    SimTime operator+(Duration d) const {
        if (ns > std::numeric_limits<std::uint64_t>::max() - d.ns)
            throw OverflowError("simulation time overflows 64-bit nanoseconds");
        return SimTime{ns + d.ns};
    }
    SimTime& operator+=(Duration d) { return *this = *this + d; }

    /// Elapsed time from `earlier` to this instant; throws if `earlier` is later.
    Duration operator-(SimTime earlier) const {
        if (earlier.ns > ns)
            throw OverflowError("negative time difference");
        return Duration{ns - earlier.ns};
    }
};

/// Saturating difference: zero when `to` is not after `from`.
inline Duration until(SimTime from, SimTime to) {
    return to > from ? to - from : Duration{0};
}

constexpr Duration nanoseconds(std::uint64_t v) { return Duration{v}; }
constexpr Duration microseconds(std::uint64_t v) { return Duration{v * 1000}; }
constexpr Duration milliseconds(std::uint64_t v) { return Duration{v * 1000 * 1000}; }

inline std::string to_string(SimTime t) { return std::to_string(t.ns); }
inline std::string to_string(Duration d) { return std::to_string(d.ns); }

} // namespace rtvsim
