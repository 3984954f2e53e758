#include "rtvsim/machine.hpp"

#include "rtvsim/workload.hpp"

namespace rtvsim {

void Cpu::begin(Activity a, SimTime t) {
    if (current_)
        throw InvariantViolation("cpu: " + std::string(to_string(a)) + " started while " +
                                 std::string(to_string(*current_)) + " is in flight");
    current_ = a;
    since_ = t;
}

Duration Cpu::end(SimTime t) {
    if (!current_)
        throw InvariantViolation("cpu: end without an activity");
    const Duration d = t - since_;
    totals_[static_cast<std::size_t>(*current_)] += d;
    current_.reset();
    return d;
}

Duration Cpu::total() const {
    Duration sum{};
    for (auto d : totals_)
        sum += d;
    return sum;
}

namespace {

EventKind kind_for(Activity a) {
    switch (a) {
    case Activity::VmExit: return EventKind::VmExitComplete;
    case Activity::VmEntry: return EventKind::VmEntryComplete;
    case Activity::VmmDispatch: return EventKind::VmmDispatch;
    default: return EventKind::Charge;
    }
}

} // namespace

Machine::Machine(const Scenario& s)
    : scenario_(s),
      cost(s.effective_cost()),
      ic(sim, [this](IrqVector v) { hv.on_hw_interrupt(v); }),
      hpet(sim, s.timer_granularity, [this] { ic.raise_irq(scenario_.vmm.timer_vector, sim.now()); }),
      hv(*this),
      vmm(*this, s.vmm),
      guest(*this, s.guest) {
    sim.set_trace(s.trace);
}

void Machine::host_step(Activity a, Action then) {
    host_step(a, cost.of(a), std::move(then));
}

void Machine::host_step(Activity a, Duration d, Action then) {
    cpu.begin(a, sim.now());
    sim.schedule_in(d, kind_for(a), Payload{to_string(a), static_cast<std::int64_t>(d.ns), 0},
                    [this, then = std::move(then)] {
                        cpu.end(sim.now());
                        then();
                    });
}

void Machine::record_sample(const LatencySample& s) {
    samples.push_back(s);
    histogram.record(s.latency_ns());
    sim.note("sample", static_cast<std::int64_t>(s.expected_wakeup.ns), static_cast<std::int64_t>(s.latency_ns()));
}

void Machine::start() {
    if (started_)
        return;
    started_ = true;
    install(scenario_.load, scenario_.cyclictest, *this);
    if (!native())
        hv.set_mode(CpuMode::InVm);
    guest.boot();
}

void Machine::run_until(SimTime limit) {
    start();
    sim.run_until(limit);
}

RunResult Machine::run() {
    run_until(SimTime{} + scenario_.duration);
    if (cpu.current()) {
        const auto a = *cpu.current();
        const auto d = cpu.end(sim.now());
        sim.note(EventKind::Charge, Payload{to_string(a), static_cast<std::int64_t>(d.ns), 1});
    }
    RunResult r;
    r.samples = samples;
    r.histogram = histogram;
    r.trace = sim.trace();
    r.vmm = vmm.stats();
    r.guest = guest.stats();
    for (std::size_t i = 0; i < kActivityCount; ++i)
        r.cpu_time[i] = cpu.total(static_cast<Activity>(i));
    r.timer_arms = hpet.arm_count();
    r.timer_expiries = hpet.expiry_count();
    r.events = sim.dispatched();
    r.end = sim.now();
    return r;
}

RunResult simulate(const Scenario& s) {
    Machine m(s);
    return m.run();
}

} // namespace rtvsim
