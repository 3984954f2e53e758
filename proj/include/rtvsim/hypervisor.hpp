#pragma once

#include <deque>
#include <optional>

#include "rtvsim/hw.hpp"
#include "rtvsim/hypercall.hpp"

namespace rtvsim {

class Machine;

enum class CpuMode : std::uint8_t { InVm, InVmm, InKernel, Idle };

std::string_view to_string(CpuMode m);

enum class ResumeOutcome : std::uint8_t { Entered, AbortedPending };

/// The microkernel in its hypervisor role.
///
/// Kernel logic is instantaneous; only the transitions it performs cost time.
/// Events for the VMM queue here until the VMM is current, and a switch into
/// the VM only happens while none of them is deliverable.
class Hypervisor {
public:
    explicit Hypervisor(Machine& m) : m_(m) {}

    /// Sink of the interrupt controller.
    void on_hw_interrupt(IrqVector v);

    /// Kernel-originated event for the VMM (emergency timeout, IPC reply).
    void post_to_vmm(VmmItem item);

    /// Guest-initiated exit; the guest has already stopped executing.
    void guest_exit(const Hypercall& hc);

    /// Called by the VMM. Enters the VM unless a deliverable event is pending.
    ResumeOutcome resume_vm(std::optional<IrqVector> inject);

    /// The VMM has nothing to run: block until the next deliverable event.
    /// Returns false (and does nothing) when an event is already deliverable.
    bool vmm_wait();

    /// Legacy synchronous IPC: the VMM thread is unavailable until `unblock_vmm`.
    void block_vmm();
    void unblock_vmm(Action then);

    /// Vectors <= threshold no longer reach the VMM; clearing flushes them in descending order.
    void set_event_mask(std::optional<int> threshold);
    std::optional<int> event_mask() const { return mask_; }

    bool has_deliverable() const;
    std::optional<VmmItem> take_deliverable();
    std::optional<Hypercall> take_exit_reason();

    CpuMode mode() const { return mode_; }
    void set_mode(CpuMode m) { mode_ = m; }
    bool second_vm_running() const { return vm2_running_; }
    std::uint64_t second_vm_irqs() const { return vm2_irqs_; }
    const std::deque<VmmItem>& pending() const { return pending_; }

private:
    bool suppressed(const VmmItem& it) const;
    void kick();
    void exit_vm();
    void after_exit();
    void after_entry(std::optional<IrqVector> inject);
    void go_idle();
    void leave_idle();
    bool routed_to_second_vm(IrqVector v) const;

    Machine& m_;
    CpuMode mode_ = CpuMode::Idle;
    std::deque<VmmItem> pending_;
    std::optional<Hypercall> exit_reason_;
    std::optional<Action> unblock_then_;
    std::optional<int> mask_;
    bool vm2_running_ = false;
    bool vmm_blocked_ = false;
    bool vmm_waiting_ = false;
    std::uint64_t vm2_irqs_ = 0;
};

} // namespace rtvsim
