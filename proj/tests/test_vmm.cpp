#include <algorithm>
#include <vector>

#include "doctest.h"
#include "monitor.hpp"
#include "random_scenario.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/vmm.hpp"

using namespace rtvsim;
using namespace rtvsim::testing;

namespace {

Scenario one_shot(bool deferred) {
    Scenario s;
    s.cost = shipped_profile();
    s.vmm.injection_policy = InjectionPolicy::PrioritySorted;
    s.vmm.holdback_enabled = s.vmm.kernel_suppress_enabled = s.vmm.tpr_mask_enabled = true;
    s.vmm.deferred_timer_enabled = deferred;
    s.cyclictest.loops = 2; // the first job reprograms for the second
    s.duration = milliseconds(3);
    s.trace = true;
    return s;
}

std::vector<std::int64_t> injected(const RunResult& r) {
    std::vector<std::int64_t> out;
    for (const auto& rec : records_tagged(r.trace, "inject"))
        out.push_back(rec.payload.a);
    return out;
}

std::uint64_t first_time(const RunResult& r, std::string_view tag) {
    const auto recs = records_tagged(r.trace, tag);
    REQUIRE_FALSE(recs.empty());
    return recs.front().time.ns;
}

} // namespace

TEST_CASE("queue keeps one entry per vector with its earliest arrival") {
    PendingIrqQueue q;
    CHECK(q.enqueue(IrqVector{50}, SimTime{10}));
    CHECK_FALSE(q.enqueue(IrqVector{50}, SimTime{20}));
    CHECK(q.size() == 1);
    CHECK(q.entries().front().arrival == SimTime{10});
}

TEST_CASE("fifo pops by arrival, sorted pops by vector") {
    PendingIrqQueue q;
    q.enqueue(IrqVector{60}, SimTime{1});
    q.enqueue(IrqVector{200}, SimTime{2});
    q.enqueue(IrqVector{35}, SimTime{3});
    auto f = q;
    CHECK(f.pop(InjectionPolicy::Fifo)->vector == IrqVector{60});
    CHECK(f.pop(InjectionPolicy::Fifo)->vector == IrqVector{200});
    CHECK(q.pop(InjectionPolicy::PrioritySorted)->vector == IrqVector{200});
    CHECK(q.pop(InjectionPolicy::PrioritySorted)->vector == IrqVector{60});
}

TEST_CASE("a floor hides vectors at or below it") {
    PendingIrqQueue q;
    q.enqueue(IrqVector{100}, SimTime{1});
    q.enqueue(IrqVector{40}, SimTime{2});
    CHECK_FALSE(q.has_eligible(IrqVector{100}));
    CHECK_FALSE(q.pop(InjectionPolicy::Fifo, IrqVector{100}));
    CHECK(q.has_eligible(IrqVector{99}));
    CHECK(q.pop(InjectionPolicy::Fifo, IrqVector{39})->vector == IrqVector{100});
    CHECK(q.size() == 1);
}

TEST_CASE("a requeued entry keeps its place in arrival order") {
    PendingIrqQueue q;
    q.enqueue(IrqVector{70}, SimTime{1});
    q.enqueue(IrqVector{80}, SimTime{2});
    const auto e = q.pop(InjectionPolicy::Fifo);
    q.requeue(*e);
    CHECK(q.pop(InjectionPolicy::Fifo)->vector == IrqVector{70});
}

TEST_CASE("emergency budget is floor(factor * wcet)") {
    CHECK((Rational{7, 3}.apply(Duration{100})).ns == 233);
    CHECK((Rational{10, 1}.apply(microseconds(50))).ns == 500000);
    CHECK((Rational{3, 2}.apply(Duration{1})).ns == 1);
}

TEST_CASE("near timeouts are answered in software, far ones by the hardware timer") {
    auto s = one_shot(true);
    s.cyclictest.loops = 1;
    const auto threshold = s.vmm.soft_threshold(s.cost);
    s.cyclictest.first_wakeup = SimTime{threshold.ns - 1};
    const auto near = simulate(s);
    CHECK(near.vmm.soft_triggers == 1);
    CHECK(near.vmm.hard_triggers == 0);
    CHECK(near.timer_arms == 0);
    s.cyclictest.first_wakeup = SimTime{threshold.ns};
    const auto far = simulate(s);
    CHECK(far.vmm.soft_triggers == 0);
    CHECK(far.vmm.hard_triggers == 1);
    CHECK(far.timer_arms == 1);
    // threshold zero disables the software path entirely
    s.vmm.soft_trigger_threshold = Duration{0};
    s.cyclictest.first_wakeup = SimTime{1000};
    const auto hard = simulate(s);
    CHECK(hard.vmm.soft_triggers == 0);
    CHECK(hard.timer_arms == 1);
}

TEST_CASE("with deferral the section lasts until the job's reprogram") {
    const auto r = simulate(one_shot(true));
    const auto begin = first_time(r, "rt_begin");
    const auto start = first_time(r, "rt_start");
    const auto end = first_time(r, "rt_end_reprogram");
    CHECK(begin < start);
    CHECK(end > start);
    CHECK(r.vmm.sections == 2);
    CHECK(r.vmm.emergencies == 0);
}

TEST_CASE("without deferral the section ends in the timer handler") {
    const auto r = simulate(one_shot(false));
    const auto start = first_time(r, "rt_start");
    const auto end = first_time(r, "rt_end_reprogram");
    CHECK(end < start);
}

TEST_CASE("holdback delays a low vector until the section ends") {
    auto probe = one_shot(true);
    const auto p = simulate(probe);
    const auto begin = first_time(p, "rt_begin");
    auto s = probe;
    s.vmm.kernel_suppress_enabled = s.vmm.tpr_mask_enabled = false; // only the VMM holds it back
    s.load.kind = LoadKind::DeviceIrqTrace;
    s.load.arrivals = {Arrival{SimTime{begin + 3000}, IrqVector{40}}};
    const auto r = simulate(s);
    const auto end = first_time(r, "rt_end_reprogram");
    const auto inj = records_tagged(r.trace, "inject");
    REQUIRE(inj.size() >= 2);
    CHECK(inj[0].payload.a == 240);
    CHECK(inj[1].payload.a == 40);
    CHECK(inj[1].time.ns > end);
    CHECK(r.samples.at(0).latency_ns() == p.samples.at(0).latency_ns() +
                                               (s.cost.vm_exit + s.cost.world_switch + s.cost.vmm_dispatch + s.cost.vm_entry).ns);
}

TEST_CASE("a vector above the floor is injected inside the section") {
    auto probe = one_shot(true);
    const auto p = simulate(probe);
    const auto begin = first_time(p, "rt_begin");
    const auto end = first_time(p, "rt_end_reprogram");
    auto s = probe;
    s.load.kind = LoadKind::DeviceIrqTrace;
    s.load.arrivals = {Arrival{SimTime{begin + 3000}, IrqVector{150}}};
    const auto r = simulate(s);
    const auto inj = records_tagged(r.trace, "inject");
    REQUIRE(inj.size() >= 2);
    CHECK(inj[1].payload.a == 150);
    CHECK(inj[1].time.ns < end);
}

TEST_CASE("an overrunning job is cut off at the budget") {
    auto s = one_shot(true);
    s.cyclictest.declared_wcet = microseconds(20);
    s.cyclictest.body_cost = microseconds(300);
    s.vmm.emergency_factor = Rational{5, 1};
    s.cyclictest.loops = 1;
    const auto r = simulate(s);
    CHECK(r.vmm.emergencies == 1);
    const auto begin = first_time(r, "rt_begin");
    const auto end = first_time(r, "rt_end_emergency");
    CHECK(end - begin == 100000);
    CHECK(records_tagged(r.trace, "rt_end_reprogram").empty());
    CHECK(r.samples.size() == 1);
}

TEST_CASE("priority-sorted injection picks the highest waiting vector") {
    auto s = one_shot(true);
    s.cyclictest.first_wakeup = SimTime{50000000};
    s.load.kind = LoadKind::DeviceIrqTrace;
    s.load.arrivals = {Arrival{SimTime{100000}, IrqVector{50}}, Arrival{SimTime{100001}, IrqVector{90}},
                       Arrival{SimTime{100002}, IrqVector{70}}};
    CHECK(injected(simulate(s)) == std::vector<std::int64_t>{90, 70, 50});
    s.vmm.injection_policy = InjectionPolicy::Fifo;
    CHECK(injected(simulate(s)) == std::vector<std::int64_t>{50, 90, 70});
}

TEST_CASE("an outstanding external request does not delay the VMM") {
    auto s = one_shot(true);
    s.cyclictest.first_wakeup = SimTime{1000000};
    s.load.kind = LoadKind::DeviceIrqTrace;
    s.load.work_per_irq = microseconds(1);
    s.load.external_service = milliseconds(5);
    s.load.arrivals = {Arrival{SimTime{900000}, IrqVector{40}}};
    s.duration = milliseconds(8);
    s.cyclictest.loops = 3;
    const auto quiet = simulate(one_shot(true));
    const auto r = simulate(s);
    // each completion is a load interrupt whose work issues the next request
    REQUIRE(r.vmm.external_requests >= 1);
    REQUIRE(r.samples.size() == 3);
    CHECK(r.samples[0].latency_ns() == quiet.samples.at(0).latency_ns());
    // legacy blocking IPC: the VMM sits in the call until the reply
    s.vmm.blocking_ipc = true;
    const auto b = simulate(s);
    REQUIRE(b.samples.size() >= 1);
    CHECK(b.samples[0].latency_ns() > 4000000);
}
