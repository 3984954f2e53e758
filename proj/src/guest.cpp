#include "rtvsim/guest.hpp"

#include <algorithm>

#include "rtvsim/machine.hpp"

namespace rtvsim {

GuestKernel::GuestKernel(Machine& m, GuestConfig cfg) : m_(m), cfg_(cfg) {
    GuestTask idle;
    idle.id = 0;
    idle.priority = 0;
    idle.kind = TaskKind::Idle;
    idle.state = TaskState::Runnable;
    tasks_.push_back(idle);
}

int GuestKernel::add_rt_task(const CyclictestSpec& spec) {
    GuestTask t;
    t.id = static_cast<int>(tasks_.size());
    t.priority = spec.priority;
    t.kind = TaskKind::RtPeriodic;
    t.state = TaskState::Sleeping;
    t.interval = spec.interval;
    t.body_cost = spec.body_cost;
    t.declared_wcet = spec.declared_wcet;
    t.loops = spec.loops;
    tasks_.push_back(t);
    if (!t.loops || *t.loops > 0)
        timer_wheel_.emplace(spec.first_wakeup, t.id);
    return t.id;
}

int GuestKernel::add_load_task() {
    GuestTask t;
    t.id = static_cast<int>(tasks_.size());
    t.priority = 1;
    t.kind = TaskKind::Load;
    t.state = TaskState::Sleeping;
    tasks_.push_back(t);
    return t.id;
}

void GuestKernel::set_cache_penalty(Duration d) {
    cfg_.cache_penalty = d;
}

std::optional<SimTime> GuestKernel::next_timeout() const {
    if (timer_wheel_.empty())
        return std::nullopt;
    return timer_wheel_.begin()->first;
}

bool GuestKernel::runnable(const GuestTask& t) const {
    return t.state == TaskState::Runnable || t.state == TaskState::Running;
}

bool GuestKernel::deferral_active() const {
    return !m_.native() && m_.vmm.config().deferred_timer_enabled;
}

GuestKernel::Step GuestKernel::kernel_step(Activity a, std::function<void()> after) {
    const Duration cost = a == Activity::CachePenalty ? cfg_.cache_penalty : m_.cost.of(a);
    return Step{a, cost, std::move(after), std::nullopt};
}

void GuestKernel::boot() {
    executing_ = true;
    schedule();
    reprogram_if_needed();
    step();
}

void GuestKernel::resume(std::optional<IrqVector> injected) {
    executing_ = true;
    if (injected)
        receive(*injected);
    step();
}

void GuestKernel::receive(IrqVector v) {
    pending_virqs_.insert(v.value);
    halted_ = false;
}

void GuestKernel::pause() {
    if (!executing_)
        return;
    executing_ = false;
    if (!inflight_ || !inflight_->running)
        return;
    const SimTime now = m_.sim.now();
    m_.sim.cancel(inflight_->handle);
    const Duration elapsed = m_.cpu.end(now);
    m_.sim.note(EventKind::Charge, Payload{to_string(inflight_->activity), static_cast<std::int64_t>(elapsed.ns), 1});
    inflight_->remaining = inflight_->remaining - elapsed;
    inflight_->running = false;
    if (inflight_->task_work) {
        tasks_[static_cast<std::size_t>(running_)].remaining = inflight_->remaining;
        inflight_.reset();
    }
}

void GuestKernel::hw_irq(IrqVector v) {
    receive(v);
    if (!executing_) {
        // halted: leave the idle loop
        const auto d = m_.cpu.end(m_.sim.now());
        m_.sim.note(EventKind::Charge, Payload{to_string(Activity::Idle), static_cast<std::int64_t>(d.ns), 1});
        executing_ = true;
        step();
        return;
    }
    if (inflight_ && inflight_->task_work) {
        pause();
        executing_ = true;
        step();
    }
    // kernel chunk in flight: taken once interrupts are enabled again
}

void GuestKernel::step() {
    if (!executing_)
        return;
    if (inflight_) {
        start_inflight();
        return;
    }
    if (!steps_.empty()) {
        Step s = std::move(steps_.front());
        steps_.pop_front();
        if (s.hypercall)
            issue(*s.hypercall);
        else
            start_chunk(s.activity, s.cost, std::move(s.after), false);
        return;
    }
    if (!pending_virqs_.empty()) {
        const IrqVector v{*pending_virqs_.rbegin()};
        pending_virqs_.erase(v.value);
        on_virq(v);
        step();
        return;
    }
    if (!m_.native() && m_.vmm.has_injectable()) {
        issue(Hypercall{Hypercall::Kind::IrqWindow});
        return;
    }
    run_task();
}

void GuestKernel::start_chunk(Activity a, Duration cost, std::function<void()> after, bool task_work) {
    inflight_ = Inflight{a, cost, m_.sim.now(), EventHandle{}, std::move(after), task_work, false};
    start_inflight();
}

void GuestKernel::start_inflight() {
    auto& f = *inflight_;
    f.started = m_.sim.now();
    f.running = true;
    m_.cpu.begin(f.activity, f.started);
    const auto kind = f.activity == Activity::RtBody ? EventKind::GuestTaskCompletion : EventKind::Charge;
    f.handle = m_.sim.schedule_in(f.remaining, kind, Payload{to_string(f.activity), static_cast<std::int64_t>(f.remaining.ns), 0}, [this] {
        m_.cpu.end(m_.sim.now());
        auto after = std::move(inflight_->after);
        inflight_.reset();
        if (after)
            after();
        step();
    });
}

void GuestKernel::issue(Hypercall hc) {
    hc.issued = m_.sim.now();
    executing_ = false;
    m_.hv.guest_exit(hc);
}

void GuestKernel::run_task() {
    auto& t = tasks_[static_cast<std::size_t>(running_)];
    for (const auto& o : tasks_)
        if (runnable(o) && o.priority > t.priority)
            throw InvariantViolation("guest: task " + std::to_string(t.id) + " runs while higher-priority task " +
                                     std::to_string(o.id) + " is runnable");
    switch (t.kind) {
    case TaskKind::RtPeriodic: {
        if (!runnable(t))
            throw InvariantViolation("guest: sleeping RT task selected");
        if (!t.body_started) {
            t.body_started = true;
            t.actual_start = m_.sim.now();
            m_.sim.note("rt_start", static_cast<std::int64_t>(t.expected.ns), t.id);
        }
        const int id = t.id;
        start_chunk(Activity::RtBody, t.remaining, [this, id] { rt_body_complete(tasks_[static_cast<std::size_t>(id)]); }, true);
        return;
    }
    case TaskKind::Load: {
        const int id = t.id;
        start_chunk(Activity::LoadWork, t.remaining, [this, id] { load_work_complete(tasks_[static_cast<std::size_t>(id)]); }, true);
        return;
    }
    case TaskKind::Idle:
        halt();
        return;
    }
}

void GuestKernel::halt() {
    halted_ = true;
    m_.sim.note("halt");
    if (m_.native()) {
        executing_ = false;
        m_.cpu.begin(Activity::Idle, m_.sim.now());
        return;
    }
    issue(Hypercall{Hypercall::Kind::Halt});
}

void GuestKernel::schedule() {
    prepend(kernel_step(Activity::GuestSched, [this] { pick_next(); }));
}

void GuestKernel::on_virq(IrqVector v) {
    m_.sim.note("virq", v.value);
    schedule();
    prepend(kernel_step(Activity::GuestIrqEntry, [this, v] {
        if (v == m_.vmm.config().timer_vector)
            timer_irq_handler();
        else
            device_handler(v);
    }));
}

void GuestKernel::timer_irq_handler() {
    ++stats_.timer_virqs;
    programmed_.reset(); // the one-shot has fired
    const bool woke_rt = expire_due();
    if (woke_rt && deferral_active()) {
        deferred_reprogram_ = true;
        ++stats_.deferred;
        m_.sim.note("defer_reprogram");
        return;
    }
    reprogram_if_needed();
}

void GuestKernel::device_handler(IrqVector v) {
    ++stats_.device_virqs;
    for (auto& t : tasks_) {
        if (t.kind != TaskKind::Load)
            continue;
        t.remaining += m_.scenario().load.work_per_irq;
        if (t.state == TaskState::Sleeping)
            t.state = TaskState::Runnable;
        m_.sim.note(EventKind::GuestTaskWakeup, Payload{"load", t.id, v.value});
        return;
    }
}

bool GuestKernel::expire_due() {
    bool woke_rt = false;
    const SimTime now = m_.sim.now();
    while (!timer_wheel_.empty() && timer_wheel_.begin()->first <= now) {
        const auto [deadline, id] = *timer_wheel_.begin();
        timer_wheel_.erase(timer_wheel_.begin());
        ++stats_.expired_timers;
        auto& t = tasks_[static_cast<std::size_t>(id)];
        activate(t, deadline);
        woke_rt = woke_rt || t.kind == TaskKind::RtPeriodic;
        ++t.activations;
        if (!t.loops || t.activations < *t.loops)
            timer_wheel_.emplace(deadline + t.interval, id);
    }
    return woke_rt;
}

void GuestKernel::activate(GuestTask& t, SimTime deadline) {
    ++stats_.rt_wakeups;
    m_.sim.note(EventKind::GuestTaskWakeup, Payload{"rt", t.id, static_cast<std::int64_t>(deadline.ns)});
    if (t.state != TaskState::Sleeping) {
        t.backlog.push_back(deadline); // still busy with an earlier period
        return;
    }
    t.state = TaskState::Runnable;
    t.expected = deadline;
    t.body_started = false;
    t.remaining = t.body_cost;
}

void GuestKernel::reprogram_if_needed() {
    const auto next = next_timeout();
    if (!next || programmed_ == *next)
        return;
    const SimTime now = m_.sim.now();
    const SimTime deadline = *next;
    if (deadline <= now || deadline - now < cfg_.min_program_delta) {
        // Too close to program reliably: wait it out and expire in place.
        m_.sim.note("timer_too_close", static_cast<std::int64_t>(until(now, deadline).ns));
        prepend(Step{Activity::GuestSpin, until(now, deadline), [this] { retry_expiry(); }, std::nullopt});
        return;
    }
    programmed_ = deadline;
    ++stats_.program_requests;
    if (m_.native()) {
        prepend(kernel_step(Activity::TimerProgram, [this, deadline] { m_.hpet.arm(deadline); }));
        return;
    }
    Hypercall hc{Hypercall::Kind::ProgramTimer};
    hc.deadline = deadline;
    prepend(Step{Activity::VmExit, Duration{}, {}, hc});
}

void GuestKernel::retry_expiry() {
    const bool woke_rt = expire_due();
    if (woke_rt && deferral_active()) {
        deferred_reprogram_ = true;
        ++stats_.deferred;
        m_.sim.note("defer_reprogram");
        return;
    }
    reprogram_if_needed();
}

void GuestKernel::rt_body_complete(GuestTask& t) {
    m_.record_sample(LatencySample{t.expected, t.actual_start});
    if (!t.backlog.empty()) {
        t.expected = t.backlog.front();
        t.backlog.pop_front();
        t.body_started = false;
        t.remaining = t.body_cost;
        t.state = TaskState::Runnable;
    } else {
        t.state = TaskState::Sleeping;
        t.remaining = Duration{};
    }
    schedule();
    if (!deferred_reprogram_) {
        reprogram_if_needed();
        return;
    }
    deferred_reprogram_ = false;
    const auto before = stats_.program_requests;
    reprogram_if_needed();
    if (stats_.program_requests == before) {
        // nothing to program: still tell the VMM the job is done
        prepend(Step{Activity::VmExit, Duration{}, {}, Hypercall{Hypercall::Kind::RtComplete}});
    }
}

void GuestKernel::load_work_complete(GuestTask& t) {
    t.remaining = Duration{};
    t.state = TaskState::Sleeping;
    schedule();
    const auto service = m_.scenario().load.external_service;
    if (service.ns > 0 && !m_.native()) {
        Hypercall hc{Hypercall::Kind::ExternalRequest};
        hc.service_latency = service;
        prepend(Step{Activity::VmExit, Duration{}, {}, hc});
    }
}

void GuestKernel::pick_next() {
    int best = -1;
    for (const auto& t : tasks_)
        if (runnable(t))
            best = std::max(best, t.priority);
    std::vector<int> candidates;
    for (const auto& t : tasks_)
        if (runnable(t) && t.priority == best)
            candidates.push_back(t.id);
    // equal priorities rotate in id order, starting after the current task
    int next = candidates.front();
    for (int id : candidates) {
        if (id > running_) {
            next = id;
            break;
        }
    }
    if (candidates.size() == 1)
        next = candidates.front();
    if (next == running_)
        return;
    auto& prev = tasks_[static_cast<std::size_t>(running_)];
    if (prev.state == TaskState::Running)
        prev.state = TaskState::Runnable;
    m_.sim.note("switch", running_, next);
    ++stats_.task_switches;
    running_ = next;
    auto& cur = tasks_[static_cast<std::size_t>(next)];
    if (cur.kind != TaskKind::Idle)
        cur.state = TaskState::Running;
    if (cfg_.cache_penalty.ns > 0)
        prepend(kernel_step(Activity::CachePenalty));
}

} // namespace rtvsim
