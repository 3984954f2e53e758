#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rtvsim/config.hpp"
#include "rtvsim/des.hpp"
#include "rtvsim/guest.hpp"
#include "rtvsim/hw.hpp"
#include "rtvsim/hypervisor.hpp"
#include "rtvsim/metrics.hpp"
#include "rtvsim/vmm.hpp"

namespace rtvsim {

/// Attributes every nanosecond of simulated time to exactly one activity.
class Cpu {
public:
    void begin(Activity a, SimTime t);
    Duration end(SimTime t);
    std::optional<Activity> current() const { return current_; }
    Duration total(Activity a) const { return totals_[static_cast<std::size_t>(a)]; }
    Duration total() const;

private:
    std::optional<Activity> current_;
    SimTime since_{};
    std::array<Duration, kActivityCount> totals_{};
};

struct RunResult {
    std::vector<LatencySample> samples;
    LatencyHistogram histogram;
    std::vector<TraceRecord> trace;
    VmmStats vmm;
    GuestStats guest;
    std::array<Duration, kActivityCount> cpu_time{};
    std::uint64_t timer_arms = 0;
    std::uint64_t timer_expiries = 0;
    std::uint64_t events = 0;
    SimTime end{};
};

/// One simulated machine: the physical CPU, its interrupt controller and
/// timer, the hypervisor, the VMM and the real-time guest.
class Machine {
public:
    explicit Machine(const Scenario& s);
    Machine(const Machine&) = delete;
    Machine& operator=(const Machine&) = delete;

    /// Runs a non-preemptible host-side step costing `cost.of(a)`, then `then`.
    void host_step(Activity a, Action then);
    void host_step(Activity a, Duration d, Action then);

    void record_sample(const LatencySample& s);

    /// Boots the guest and installs the workload. Idempotent.
    void start();
    /// Advances to `limit`; CPU time still in flight is attributed up to it.
    void run_until(SimTime limit);
    /// start() + run_until(duration) + result extraction.
    RunResult run();

    bool native() const { return scenario_.native; }
    const Scenario& scenario() const { return scenario_; }

    Scenario scenario_;
    CostModel cost;
    Simulator sim;
    Cpu cpu;
    InterruptController ic;
    TimerDevice hpet;
    Hypervisor hv;
    Vmm vmm;
    GuestKernel guest;
    LatencyHistogram histogram;
    std::vector<LatencySample> samples;

private:
    bool started_ = false;
};

/// Convenience wrapper: one complete run of a scenario.
RunResult simulate(const Scenario& s);

} // namespace rtvsim
