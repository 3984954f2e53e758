#include "rtvsim/hypervisor.hpp"

#include <algorithm>
#include <vector>

#include "rtvsim/machine.hpp"

namespace rtvsim {

std::string_view to_string(CpuMode m) {
    switch (m) {
    case CpuMode::InVm: return "in_vm";
    case CpuMode::InVmm: return "in_vmm";
    case CpuMode::InKernel: return "in_kernel";
    case CpuMode::Idle: return "idle";
    }
    return "unknown";
}

std::string_view to_string(Hypercall::Kind k) {
    switch (k) {
    case Hypercall::Kind::ProgramTimer: return "program_timer";
    case Hypercall::Kind::Halt: return "halt";
    case Hypercall::Kind::IrqWindow: return "irq_window";
    case Hypercall::Kind::ExternalRequest: return "external_request";
    case Hypercall::Kind::RtComplete: return "rt_complete";
    case Hypercall::Kind::Unknown: return "unknown";
    }
    return "unknown";
}

bool Hypervisor::routed_to_second_vm(IrqVector v) const {
    const auto& load = m_.scenario().load;
    return load.kind == LoadKind::SecondVm && v == load.vector;
}

void Hypervisor::on_hw_interrupt(IrqVector v) {
    if (m_.native()) {
        m_.guest.hw_irq(v);
        return;
    }
    const auto& cfg = m_.vmm.config();
    // Only the kernel's own timer may pass while the RT path runs.
    if (cfg.tpr_mask_enabled && v == cfg.timer_vector && m_.ic.tpr() < cfg.rt_priority_floor.value)
        m_.ic.set_tpr(cfg.rt_priority_floor.value);

    if (routed_to_second_vm(v)) {
        ++vm2_irqs_;
        m_.sim.note("vm2_irq", v.value);
        // Lower-priority VM: the exit still happens, the RT VM resumes right away.
        if (mode_ == CpuMode::InVm && !vm2_running_)
            exit_vm();
        return;
    }
    pending_.push_back(VmmItem{VmmItem::Kind::Irq, v, m_.sim.now(), 0});
    m_.sim.note("kpend_add", static_cast<std::int64_t>(VmmItem::Kind::Irq), v.value);
    kick();
}

void Hypervisor::post_to_vmm(VmmItem item) {
    item.arrival = m_.sim.now();
    pending_.push_back(item);
    m_.sim.note("kpend_add", static_cast<std::int64_t>(item.kind), item.vector.value);
    kick();
}

bool Hypervisor::suppressed(const VmmItem& it) const {
    return it.kind == VmmItem::Kind::Irq && mask_ && static_cast<int>(it.vector.value) <= *mask_;
}

bool Hypervisor::has_deliverable() const {
    return std::any_of(pending_.begin(), pending_.end(), [this](const VmmItem& it) { return !suppressed(it); });
}

std::optional<VmmItem> Hypervisor::take_deliverable() {
    auto it = std::find_if(pending_.begin(), pending_.end(), [this](const VmmItem& i) { return !suppressed(i); });
    if (it == pending_.end())
        return std::nullopt;
    VmmItem item = *it;
    pending_.erase(it);
    m_.sim.note("kpend_take", static_cast<std::int64_t>(item.kind), item.vector.value);
    return item;
}

std::optional<Hypercall> Hypervisor::take_exit_reason() {
    auto r = exit_reason_;
    exit_reason_.reset();
    return r;
}

void Hypervisor::kick() {
    switch (mode_) {
    case CpuMode::InVm:
        exit_vm();
        break;
    case CpuMode::Idle:
        if (vmm_waiting_ && !vmm_blocked_ && has_deliverable())
            leave_idle();
        break;
    case CpuMode::InVmm:
    case CpuMode::InKernel:
        break; // picked up at the next resume attempt
    }
}

void Hypervisor::exit_vm() {
    if (vm2_running_) {
        const auto d = m_.cpu.end(m_.sim.now());
        m_.sim.note(EventKind::Charge, Payload{to_string(Activity::SecondVm), static_cast<std::int64_t>(d.ns), 1});
    } else {
        m_.guest.pause();
    }
    mode_ = CpuMode::InKernel;
    m_.host_step(Activity::VmExit, [this] { after_exit(); });
}

void Hypervisor::guest_exit(const Hypercall& hc) {
    if (mode_ != CpuMode::InVm || vm2_running_)
        throw InvariantViolation("hypercall while the guest is not executing");
    exit_reason_ = hc;
    m_.sim.note("hypercall", static_cast<std::int64_t>(hc.kind), static_cast<std::int64_t>(hc.deadline.ns));
    mode_ = CpuMode::InKernel;
    m_.host_step(Activity::VmExit, [this] { after_exit(); });
}

void Hypervisor::after_exit() {
    const bool to_vmm = exit_reason_ || unblock_then_ || (!vmm_blocked_ && has_deliverable());
    if (!to_vmm) {
        // Suppressed or foreign event: straight back into the VM, no world switch.
        m_.host_step(Activity::VmEntry, [this] { after_entry(std::nullopt); });
        return;
    }
    vm2_running_ = false;
    vmm_waiting_ = false;
    m_.host_step(Activity::WorldSwitch, [this] {
        mode_ = CpuMode::InVmm;
        if (unblock_then_) {
            auto then = std::move(*unblock_then_);
            unblock_then_.reset();
            then();
            return;
        }
        m_.vmm.run();
    });
}

void Hypervisor::after_entry(std::optional<IrqVector> inject) {
    mode_ = CpuMode::InVm;
    if (unblock_then_ || (!vmm_blocked_ && has_deliverable())) {
        // An event arrived during the entry: the guest gets no execution window.
        m_.sim.note("entry_preempted", inject ? inject->value : -1);
        if (inject && !vm2_running_)
            m_.guest.receive(*inject);
        exit_vm();
        return;
    }
    if (vm2_running_) {
        m_.cpu.begin(Activity::SecondVm, m_.sim.now());
        return;
    }
    m_.sim.note("guest_run", inject ? inject->value : -1);
    m_.guest.resume(inject);
}

ResumeOutcome Hypervisor::resume_vm(std::optional<IrqVector> inject) {
    if (has_deliverable()) {
        m_.sim.note("resume_aborted", inject ? inject->value : -1);
        return ResumeOutcome::AbortedPending;
    }
    mode_ = CpuMode::InKernel;
    m_.host_step(Activity::VmEntry, [this, inject] { after_entry(inject); });
    return ResumeOutcome::Entered;
}

bool Hypervisor::vmm_wait() {
    if (has_deliverable())
        return false;
    vmm_waiting_ = true;
    m_.sim.note("vmm_wait");
    go_idle();
    return true;
}

void Hypervisor::go_idle() {
    if (m_.scenario().load.kind == LoadKind::SecondVm) {
        vm2_running_ = true;
        mode_ = CpuMode::InVm;
        m_.cpu.begin(Activity::SecondVm, m_.sim.now());
    } else {
        mode_ = CpuMode::Idle;
        m_.cpu.begin(Activity::Idle, m_.sim.now());
    }
}

void Hypervisor::leave_idle() {
    const auto d = m_.cpu.end(m_.sim.now());
    m_.sim.note(EventKind::Charge, Payload{to_string(Activity::Idle), static_cast<std::int64_t>(d.ns), 1});
    vmm_waiting_ = false;
    mode_ = CpuMode::InKernel;
    m_.host_step(Activity::WorldSwitch, [this] {
        mode_ = CpuMode::InVmm;
        if (unblock_then_) {
            auto then = std::move(*unblock_then_);
            unblock_then_.reset();
            then();
            return;
        }
        m_.vmm.run();
    });
}

void Hypervisor::block_vmm() {
    vmm_blocked_ = true;
    m_.sim.note("vmm_blocked");
    go_idle();
}

void Hypervisor::unblock_vmm(Action then) {
    vmm_blocked_ = false;
    unblock_then_ = std::move(then);
    m_.sim.note("vmm_unblocked");
    if (mode_ == CpuMode::Idle)
        leave_idle();
    else if (mode_ == CpuMode::InVm)
        exit_vm();
    // InKernel: a transition is in flight and after_exit/after_entry picks it up
}

void Hypervisor::set_event_mask(std::optional<int> threshold) {
    if (threshold == mask_)
        return;
    const auto old = mask_;
    mask_ = threshold;
    m_.sim.note("event_mask", threshold ? *threshold : -1);
    if (!old || (threshold && *threshold >= *old))
        return;
    std::vector<VmmItem> released;
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (it->kind == VmmItem::Kind::Irq && it->vector.value <= *old && !suppressed(*it)) {
            released.push_back(*it);
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
    std::stable_sort(released.begin(), released.end(),
                     [](const VmmItem& a, const VmmItem& b) { return a.vector > b.vector; });
    pending_.insert(pending_.begin(), released.begin(), released.end());
    if (!released.empty())
        kick();
}

} // namespace rtvsim
