#pragma once

#include <string_view>
#include <vector>

#include "rtvsim/config.hpp"

namespace rtvsim {

class Machine;

/// Checks the profile and cyclictest invariants; throws ConfigError naming the field.
void validate(const LoadProfile& profile, const CyclictestSpec& spec);

/// Creates the guest tasks and schedules the load-arrival process.
/// Must run before the simulation starts.
void install(const LoadProfile& profile, const CyclictestSpec& spec, Machine& m);

/// Parses `time_ns,vector` lines. Times must strictly increase. An optional
/// `time_ns,vector` header, blank lines and `#` comments are skipped.
std::vector<Arrival> parse_arrivals(std::string_view text);
std::vector<Arrival> trace_arrivals(const std::string& path);

/// Poisson arrival times in [0, end) for the given seed.
std::vector<SimTime> poisson_arrivals(std::uint64_t seed, double rate_hz, SimTime end);

} // namespace rtvsim
