#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "rtvsim/des.hpp"
#include "rtvsim/time.hpp"

namespace rtvsim {

/// Interrupt vector 0-255. The value doubles as priority: larger is more urgent.
struct IrqVector {
    std::uint8_t value = 0;
    friend constexpr auto operator<=>(IrqVector, IrqVector) = default;
};

/// Where simulated CPU time goes. The first nine map 1:1 onto CostModel fields.
enum class Activity : std::uint8_t {
    VmExit,
    VmEntry,
    WorldSwitch,
    VmmDispatch,
    TimerProgram,
    Injection,
    GuestIrqEntry,
    GuestSched,
    Ipc,
    CachePenalty,
    RtBody,
    LoadWork,
    GuestSpin,
    Idle,
    SecondVm,
};
inline constexpr std::size_t kActivityCount = 15;

std::string_view to_string(Activity a);

/// Cost of every privileged transition, in integer nanoseconds.
struct CostModel {
    std::string name;
    Duration vm_exit;
    Duration vm_entry;
    Duration world_switch;
    Duration vmm_dispatch;
    Duration timer_program;
    Duration injection;
    Duration guest_irq_entry;
    Duration guest_sched;
    Duration ipc;

    Duration of(Activity a) const;

    /// Zeroes every virtualization transition; guest-side and device costs stay.
    CostModel native() const;

    /// exit + switch + dispatch + program + entry: one timer-programming hypercall.
    Duration timer_round_trip() const {
        return vm_exit + world_switch + vmm_dispatch + timer_program + vm_entry;
    }
};

/// Physical interrupt controller: pending set plus a task-priority threshold.
///
/// A vector v is deliverable iff it is pending and v > tpr. Deliverable vectors
/// are handed to the sink through a HwIrqRaised event; masked ones wait on the
/// controller until the threshold drops.
class InterruptController {
public:
    using Sink = std::function<void(IrqVector)>;

    InterruptController(Simulator& sim, Sink sink) : sim_(sim), sink_(std::move(sink)) {}

    void raise_irq(IrqVector v, SimTime at);
    void set_tpr(int threshold);
    int tpr() const { return tpr_; }
    std::optional<IrqVector> highest_deliverable() const;
    bool is_pending(IrqVector v) const { return pending_.contains(v.value); }
    const std::set<std::uint8_t>& pending() const { return pending_; }

private:
    void schedule_delivery(IrqVector v, SimTime at);
    void deliver(IrqVector v);

    Simulator& sim_;
    Sink sink_;
    int tpr_ = 0;
    std::set<std::uint8_t> pending_;
    std::set<std::uint8_t> in_flight_; // pending vectors with a delivery event queued
};

/// Single-shot high-resolution timer. Re-arming replaces the previous deadline.
/// The caller charges timer_program for the register write.
class TimerDevice {
public:
    using Sink = std::function<void()>;

    TimerDevice(Simulator& sim, Duration granularity, Sink on_expiry);

    void arm(SimTime deadline);
    void disarm();
    std::optional<SimTime> armed_deadline() const { return deadline_; }
    std::optional<SimTime> expiry_time() const { return fire_at_; }
    Duration granularity() const { return granularity_; }
    std::uint64_t arm_count() const { return arms_; }
    std::uint64_t expiry_count() const { return expiries_; }

private:
    Simulator& sim_;
    Duration granularity_;
    Sink on_expiry_;
    std::optional<SimTime> deadline_;
    std::optional<SimTime> fire_at_;
    std::optional<EventHandle> handle_;
    std::uint64_t arms_ = 0;
    std::uint64_t expiries_ = 0;
};

} // namespace rtvsim
