#include "rtvsim/hw.hpp"

#include <vector>

namespace rtvsim {

std::string_view to_string(Activity a) {
    switch (a) {
    case Activity::VmExit: return "vm_exit_ns";
    case Activity::VmEntry: return "vm_entry_ns";
    case Activity::WorldSwitch: return "world_switch_ns";
    case Activity::VmmDispatch: return "vmm_dispatch_ns";
    case Activity::TimerProgram: return "timer_program_ns";
    case Activity::Injection: return "injection_ns";
    case Activity::GuestIrqEntry: return "guest_irq_entry_ns";
    case Activity::GuestSched: return "guest_sched_ns";
    case Activity::Ipc: return "ipc_ns";
    case Activity::CachePenalty: return "cache_penalty_ns";
    case Activity::RtBody: return "rt_body";
    case Activity::LoadWork: return "load_work";
    case Activity::GuestSpin: return "guest_spin";
    case Activity::Idle: return "idle";
    case Activity::SecondVm: return "second_vm";
    }
    return "unknown";
}

Duration CostModel::of(Activity a) const {
    switch (a) {
    case Activity::VmExit: return vm_exit;
    case Activity::VmEntry: return vm_entry;
    case Activity::WorldSwitch: return world_switch;
    case Activity::VmmDispatch: return vmm_dispatch;
    case Activity::TimerProgram: return timer_program;
    case Activity::Injection: return injection;
    case Activity::GuestIrqEntry: return guest_irq_entry;
    case Activity::GuestSched: return guest_sched;
    case Activity::Ipc: return ipc;
    default: return Duration{0};
    }
}

CostModel CostModel::native() const {
    CostModel c = *this;
    c.name = name + "+native";
    c.vm_exit = c.vm_entry = c.world_switch = c.vmm_dispatch = c.injection = c.ipc = Duration{0};
    return c;
}

void InterruptController::raise_irq(IrqVector v, SimTime at) {
    if (!pending_.insert(v.value).second)
        return; // edge-collapsed
    if (v.value > tpr_)
        schedule_delivery(v, at);
}

void InterruptController::schedule_delivery(IrqVector v, SimTime at) {
    if (!in_flight_.insert(v.value).second)
        return;
    sim_.schedule(at, EventKind::HwIrqRaised, Payload{"vector", v.value, 0}, [this, v] { deliver(v); });
}

void InterruptController::deliver(IrqVector v) {
    in_flight_.erase(v.value);
    if (!pending_.contains(v.value) || v.value <= tpr_)
        return; // masked after the event was queued; waits for a lower TPR
    pending_.erase(v.value);
    sink_(v);
}

void InterruptController::set_tpr(int threshold) {
    if (threshold < 0 || threshold > 255)
        throw InvariantViolation("TPR threshold out of range: " + std::to_string(threshold));
    if (threshold == tpr_)
        return;
    const bool lowered = threshold < tpr_;
    tpr_ = threshold;
    sim_.note("set_tpr", threshold);
    if (!lowered)
        return;
    for (auto it = pending_.rbegin(); it != pending_.rend(); ++it)
        if (*it > tpr_)
            schedule_delivery(IrqVector{*it}, sim_.now());
}

std::optional<IrqVector> InterruptController::highest_deliverable() const {
    if (pending_.empty())
        return std::nullopt;
    const auto top = *pending_.rbegin();
    if (top <= tpr_)
        return std::nullopt;
    return IrqVector{top};
}

TimerDevice::TimerDevice(Simulator& sim, Duration granularity, Sink on_expiry)
    : sim_(sim), granularity_(granularity), on_expiry_(std::move(on_expiry)) {
    if (granularity_.ns == 0)
        throw ConfigError("timer.granularity_ns", "must be positive");
}

void TimerDevice::arm(SimTime deadline) {
    disarm();
    const SimTime now = sim_.now();
    SimTime at = deadline < now ? now + Duration{1} : deadline; // past: next tick boundary after now
    if (const auto rem = at.ns % granularity_.ns; rem != 0)
        at += Duration{granularity_.ns - rem};
    deadline_ = deadline;
    fire_at_ = at;
    ++arms_;
    sim_.note("timer_arm", static_cast<std::int64_t>(deadline.ns), static_cast<std::int64_t>(at.ns));
    handle_ = sim_.schedule(at, EventKind::TimerExpiry, Payload{"deadline", static_cast<std::int64_t>(deadline.ns), 0}, [this] {
        handle_.reset();
        deadline_.reset();
        fire_at_.reset();
        ++expiries_;
        on_expiry_();
    });
}

void TimerDevice::disarm() {
    if (handle_) {
        sim_.cancel(*handle_);
        handle_.reset();
    }
    deadline_.reset();
    fire_at_.reset();
}

} // namespace rtvsim
