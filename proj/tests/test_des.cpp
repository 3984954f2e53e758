#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "rtvsim/des.hpp"

using namespace rtvsim;

TEST_CASE("time arithmetic is checked") {
    const auto max = std::numeric_limits<std::uint64_t>::max();
    CHECK((SimTime{5} + Duration{7}).ns == 12);
    CHECK((SimTime{12} - SimTime{5}).ns == 7);
    CHECK_THROWS_AS(SimTime{max} + Duration{1}, OverflowError);
    CHECK_THROWS_AS(SimTime{1} - SimTime{2}, OverflowError);
    CHECK_THROWS_AS(Duration{max / 2 + 1} * 2, OverflowError);
    CHECK_THROWS_AS(Duration{1} - Duration{2}, OverflowError);
    CHECK(until(SimTime{9}, SimTime{3}).ns == 0);
    CHECK(until(SimTime{3}, SimTime{9}).ns == 6);
    CHECK(microseconds(3).ns == 3000);
    CHECK(milliseconds(2).ns == 2000000);
}

TEST_CASE("events fire in (time, seq) order") {
    Simulator sim;
    std::vector<int> fired;
    sim.schedule(SimTime{20}, EventKind::Charge, {"b"}, [&] { fired.push_back(2); });
    sim.schedule(SimTime{10}, EventKind::Charge, {"a"}, [&] { fired.push_back(1); });
    sim.schedule(SimTime{20}, EventKind::Charge, {"c"}, [&] { fired.push_back(3); });
    sim.schedule(SimTime{10}, EventKind::Charge, {"d"}, [&] {
        fired.push_back(4);
        // same-time follow-up runs after everything already queued for t=10
        sim.schedule_in(Duration{0}, EventKind::Charge, {"e"}, [&] { fired.push_back(5); });
    });
    CHECK(sim.run_until(SimTime{100}) == 5);
    CHECK(fired == std::vector<int>{1, 4, 5, 2, 3});
    CHECK(sim.now().ns == 100);
}

TEST_CASE("run_until stops at the limit and leaves later events queued") {
    Simulator sim;
    int n = 0;
    sim.schedule(SimTime{10}, EventKind::Charge, {}, [&] { ++n; });
    sim.schedule(SimTime{11}, EventKind::Charge, {}, [&] { ++n; });
    sim.run_until(SimTime{10});
    CHECK(n == 1);
    CHECK(sim.now().ns == 10);
    sim.run_until(SimTime{11});
    CHECK(n == 2);
}

TEST_CASE("cancelled events never fire") {
    Simulator sim;
    bool fired = false;
    const auto h = sim.schedule(SimTime{5}, EventKind::EmergencyTimeout, {}, [&] { fired = true; });
    CHECK(sim.pending(h));
    CHECK(sim.cancel(h));
    CHECK_FALSE(sim.pending(h));
    CHECK_FALSE(sim.cancel(h));
    sim.run_until(SimTime{10});
    CHECK_FALSE(fired);
}

TEST_CASE("scheduling in the past throws") {
    Simulator sim;
    sim.run_until(SimTime{50});
    CHECK_THROWS_AS(sim.schedule(SimTime{49}, EventKind::Charge, {}, [] {}), SchedulingInPast);
    CHECK_NOTHROW(sim.schedule(SimTime{50}, EventKind::Charge, {}, [] {}));
}

TEST_CASE("trace records precede their action and the observer sees notes") {
    Simulator sim;
    sim.set_trace(true);
    std::vector<std::string> seen;
    sim.set_observer([&](const TraceRecord& r) { seen.emplace_back(r.payload.tag); });
    sim.schedule(SimTime{3}, EventKind::Charge, {"work", 3}, [&] { sim.note("after"); });
    sim.run_until(SimTime{10});
    REQUIRE(sim.trace().size() == 2);
    CHECK(sim.trace()[0].payload.tag == "work");
    CHECK(sim.trace()[1].payload.tag == "after");
    CHECK(sim.trace()[0].seq < sim.trace()[1].seq);
    CHECK(seen == std::vector<std::string>{"work", "after"});
}

TEST_CASE("splitmix64 matches reference outputs") {
    // Independent reference implementation (Python, arbitrary precision, masked to 64 bits).
    Rng a(0);
    CHECK(a.next_u64() == 0xe220a8397b1dcdafULL);
    CHECK(a.next_u64() == 0x6e789e6aa1b965f4ULL);
    CHECK(a.next_u64() == 0x06c45d188009454fULL);
    Rng b(1);
    CHECK(b.next_u64() == 0x910a2dec89025cc1ULL);
    CHECK(b.next_u64() == 0xbeeb8da1658eec67ULL);
    Rng c(1234567);
    CHECK(c.next_u64() == 0x599ed017fb08fc85ULL);
}

TEST_CASE("uniform draws stay in range and hit both ends") {
    Rng r(42);
    bool lo = false, hi = false;
    for (int i = 0; i < 10000; ++i) {
        const auto v = r.uniform(3, 7);
        REQUIRE(v >= 3);
        REQUIRE(v <= 7);
        lo = lo || v == 3;
        hi = hi || v == 7;
    }
    CHECK(lo);
    CHECK(hi);
    CHECK(r.uniform(5, 5) == 5);
}

TEST_CASE("exponential draws have the requested mean") {
    Rng r(7);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const auto d = r.exponential(1000.0);
        REQUIRE(d.ns >= 1);
        sum += static_cast<double>(d.ns);
    }
    // mean 1ms; standard error of the mean is 1ms/sqrt(n) ~ 0.3%
    CHECK(std::abs(sum / n - 1e6) < 0.02 * 1e6);
}
