#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtvsim/hw.hpp"
#include "rtvsim/time.hpp"

namespace rtvsim {

enum class InjectionPolicy { Fifo, PrioritySorted };

/// Exact positive rational multiplier.
struct Rational {
    std::uint64_t num = 10;
    std::uint64_t den = 1;
    /// floor(d * num / den), overflow-checked.
    Duration apply(Duration d) const { return Duration{(d * num).ns / den}; }
};

struct VmmConfig {
    InjectionPolicy injection_policy = InjectionPolicy::PrioritySorted;
    bool holdback_enabled = false;
    bool kernel_suppress_enabled = false;
    bool tpr_mask_enabled = false;
    bool deferred_timer_enabled = false;
    /// Unset: exit + world switch + dispatch + timer program + entry of the active profile.
    std::optional<Duration> soft_trigger_threshold;
    Rational emergency_factor{10, 1};
    IrqVector rt_priority_floor{100};
    IrqVector timer_vector{240};
    /// Legacy mode: the VMM main loop blocks on external IPC.
    bool blocking_ipc = false;

    Duration soft_threshold(const CostModel& c) const {
        return soft_trigger_threshold ? *soft_trigger_threshold : c.timer_round_trip();
    }
};

struct GuestConfig {
    Duration min_program_delta = microseconds(1);
    Duration cache_penalty{0};
};

struct CyclictestSpec {
    Duration interval = milliseconds(1);
    std::optional<std::uint64_t> loops;
    int priority = 99;
    Duration body_cost = microseconds(10);
    Duration declared_wcet = microseconds(50);
    /// First expected wakeup.
    SimTime first_wakeup{1000000};
};

struct Arrival {
    SimTime time;
    IrqVector vector;
    friend bool operator==(const Arrival&, const Arrival&) = default;
};

enum class LoadKind { None, DeviceIrqPoisson, DeviceIrqTrace, SecondVm };

struct LoadProfile {
    LoadKind kind = LoadKind::None;
    double rate_hz = 1000.0;
    IrqVector vector{40};
    /// CPU work the load task performs per device interrupt (same-VM kinds).
    Duration work_per_irq = microseconds(100);
    /// Trace kind: source file and the parsed arrivals.
    std::string file;
    std::vector<Arrival> arrivals;
    /// SecondVm kind: penalty applied to every task switch in the RT guest.
    Duration cache_penalty{0};
    /// Nonzero: every finished load work item issues an external-service request.
    Duration external_service{0};
};

struct Scenario {
    std::string name = "scenario";
    CostModel cost;
    bool native = false;
    VmmConfig vmm;
    GuestConfig guest;
    Duration timer_granularity{1};
    CyclictestSpec cyclictest;
    LoadProfile load;
    Duration duration = milliseconds(1000);
    std::uint64_t seed = 1;
    bool trace = false;
    std::string out_dir;

    /// Cost model actually used by the run (transition costs zeroed when native).
    CostModel effective_cost() const { return native ? cost.native() : cost; }
};

} // namespace rtvsim
