#include "rtvsim/vmm.hpp"

#include <algorithm>

#include "rtvsim/machine.hpp"

namespace rtvsim {

bool PendingIrqQueue::contains(IrqVector v) const {
    return std::any_of(entries_.begin(), entries_.end(), [v](const Entry& e) { return e.vector == v; });
}

bool PendingIrqQueue::enqueue(IrqVector v, SimTime arrival) {
    if (contains(v))
        return false; // edge semantics: keep the earliest arrival
    entries_.push_back(Entry{v, arrival, next_order_++});
    return true;
}

void PendingIrqQueue::requeue(const Entry& e) {
    if (!contains(e.vector))
        entries_.push_back(e);
}

namespace {

bool eligible(const PendingIrqQueue::Entry& e, std::optional<IrqVector> floor) {
    return !floor || e.vector > *floor;
}

bool earlier(const PendingIrqQueue::Entry& a, const PendingIrqQueue::Entry& b) {
    return std::tie(a.arrival, a.order) < std::tie(b.arrival, b.order);
}

} // namespace

std::optional<PendingIrqQueue::Entry> PendingIrqQueue::pop(InjectionPolicy policy, std::optional<IrqVector> floor) {
    auto best = entries_.end();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (!eligible(*it, floor))
            continue;
        if (best == entries_.end()) {
            best = it;
            continue;
        }
        const bool better = policy == InjectionPolicy::Fifo
                                ? earlier(*it, *best)
                                : (it->vector > best->vector || (it->vector == best->vector && earlier(*it, *best)));
        if (better)
            best = it;
    }
    if (best == entries_.end())
        return std::nullopt;
    Entry e = *best;
    entries_.erase(best);
    return e;
}

bool PendingIrqQueue::has_eligible(std::optional<IrqVector> floor) const {
    return std::any_of(entries_.begin(), entries_.end(), [floor](const Entry& e) { return eligible(e, floor); });
}

Vmm::Vmm(Machine& m, VmmConfig cfg) : m_(m), cfg_(cfg), soft_threshold_(cfg.soft_threshold(m.cost)) {}

std::optional<IrqVector> Vmm::holdback_floor() const {
    if (section_.active && cfg_.holdback_enabled)
        return cfg_.rt_priority_floor;
    return std::nullopt;
}

bool Vmm::has_injectable() const {
    return queue_.has_eligible(holdback_floor());
}

void Vmm::run() {
    if (auto hc = m_.hv.take_exit_reason()) {
        m_.host_step(Activity::VmmDispatch, [this, hc = *hc] { handle_hypercall(hc, [this] { run(); }); });
        return;
    }
    if (auto item = m_.hv.take_deliverable()) {
        m_.host_step(Activity::VmmDispatch, [this, item = *item] {
            handle_item(item);
            run();
        });
        return;
    }
    inject_next();
}

void Vmm::handle_item(const VmmItem& item) {
    switch (item.kind) {
    case VmmItem::Kind::Irq:
        queue_.enqueue(item.vector, item.arrival);
        m_.sim.note("vmm_enqueue", item.vector.value);
        break;
    case VmmItem::Kind::Emergency:
        m_.sim.note("vmm_emergency");
        break;
    case VmmItem::Kind::ExternalCompletion:
        queue_.enqueue(m_.scenario().load.vector, m_.sim.now());
        m_.sim.note("vmm_enqueue", m_.scenario().load.vector.value);
        break;
    }
}

void Vmm::handle_hypercall(const Hypercall& hc, Action then) {
    switch (hc.kind) {
    case Hypercall::Kind::ProgramTimer:
        program_guest_timer(hc.deadline, hc.issued, std::move(then));
        return;
    case Hypercall::Kind::Halt:
        guest_halted_ = true;
        break;
    case Hypercall::Kind::IrqWindow:
        break;
    case Hypercall::Kind::ExternalRequest:
        external_request(hc.service_latency, std::move(then));
        return;
    case Hypercall::Kind::RtComplete:
        rt_complete();
        break;
    case Hypercall::Kind::Unknown:
        ++stats_.unknown_hypercalls;
        m_.sim.note("unknown_hypercall", hc.code);
        break;
    }
    then();
}

void Vmm::program_guest_timer(SimTime deadline, SimTime issued, Action then) {
    // A reprogram means the real-time job is done with its slice.
    end_section("rt_end_reprogram");
    if (cfg_.tpr_mask_enabled && m_.ic.tpr() != 0)
        m_.ic.set_tpr(0);

    const Duration delay = until(issued, deadline);
    if (delay < soft_threshold_) {
        ++stats_.soft_triggers;
        m_.sim.note("soft_trigger", static_cast<std::int64_t>(delay.ns), static_cast<std::int64_t>(deadline.ns));
        m_.hpet.disarm();
        queue_.enqueue(cfg_.timer_vector, m_.sim.now());
        then();
        return;
    }
    ++stats_.hard_triggers;
    m_.sim.note("hard_trigger", static_cast<std::int64_t>(delay.ns), static_cast<std::int64_t>(deadline.ns));
    m_.host_step(Activity::TimerProgram, [this, deadline, then = std::move(then)] {
        m_.hpet.arm(deadline);
        then();
    });
}

void Vmm::external_request(Duration service_latency, Action then) {
    ++stats_.external_requests;
    const auto id = next_request_++;
    const SimTime done = m_.sim.now() + m_.cost.ipc + service_latency;
    m_.sim.note("external_request", static_cast<std::int64_t>(id), static_cast<std::int64_t>(service_latency.ns));
    const Payload p{"request", static_cast<std::int64_t>(id), 0};
    if (cfg_.blocking_ipc) {
        m_.hv.block_vmm();
        m_.sim.schedule(done, EventKind::ExternalServiceCompletion, p, [this, then = std::move(then)]() mutable {
            m_.hv.unblock_vmm([this, then = std::move(then)] {
                queue_.enqueue(m_.scenario().load.vector, m_.sim.now());
                then();
            });
        });
        return;
    }
    m_.sim.schedule(done, EventKind::ExternalServiceCompletion, p, [this, id] {
        m_.hv.post_to_vmm(VmmItem{VmmItem::Kind::ExternalCompletion, m_.scenario().load.vector, {}, id});
    });
    then();
}

void Vmm::inject_next() {
    auto e = queue_.pop(cfg_.injection_policy, holdback_floor());
    if (!e) {
        if (guest_halted_) {
            if (!m_.hv.vmm_wait())
                run();
            return;
        }
        if (m_.hv.resume_vm(std::nullopt) == ResumeOutcome::AbortedPending)
            run();
        return;
    }
    if (e->vector == cfg_.timer_vector)
        begin_rt_section(m_.scenario().cyclictest.declared_wcet);
    m_.host_step(Activity::Injection, [this, e = *e] {
        if (m_.hv.resume_vm(e.vector) == ResumeOutcome::AbortedPending) {
            queue_.requeue(e);
            run();
            return;
        }
        ++stats_.injections;
        guest_halted_ = false;
        m_.sim.note("inject", e.vector.value, static_cast<std::int64_t>(e.arrival.ns));
    });
}

void Vmm::begin_rt_section(Duration declared_wcet) {
    if (section_.active)
        return;
    const SimTime now = m_.sim.now();
    const Duration budget = cfg_.emergency_factor.apply(declared_wcet);
    section_.active = true;
    section_.declared_wcet = declared_wcet;
    section_.began = now;
    ++stats_.sections;
    section_.emergency = m_.sim.schedule(now + budget, EventKind::EmergencyTimeout,
                                         Payload{"section", static_cast<std::int64_t>(stats_.sections), static_cast<std::int64_t>(now.ns)},
                                         [this] {
                                             section_.emergency.reset();
                                             ++stats_.emergencies;
                                             end_section("rt_end_emergency");
                                             m_.hv.post_to_vmm(VmmItem{VmmItem::Kind::Emergency, {}, {}, 0});
                                         });
    m_.sim.note("rt_begin", static_cast<std::int64_t>(declared_wcet.ns), static_cast<std::int64_t>(budget.ns));
    if (cfg_.kernel_suppress_enabled)
        m_.hv.set_event_mask(cfg_.rt_priority_floor.value);
    if (cfg_.tpr_mask_enabled && m_.ic.tpr() < cfg_.rt_priority_floor.value)
        m_.ic.set_tpr(cfg_.rt_priority_floor.value);
}

void Vmm::rt_complete() {
    end_section("rt_end_complete");
}

void Vmm::end_section(std::string_view tag) {
    if (!section_.active)
        return;
    section_.active = false;
    if (section_.emergency) {
        m_.sim.cancel(*section_.emergency);
        section_.emergency.reset();
    }
    m_.sim.note(tag);
    if (cfg_.kernel_suppress_enabled)
        m_.hv.set_event_mask(std::nullopt);
    if (cfg_.tpr_mask_enabled)
        m_.ic.set_tpr(0);
}

} // namespace rtvsim
