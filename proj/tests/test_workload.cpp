#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "monitor.hpp"
#include "random_scenario.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/workload.hpp"

using namespace rtvsim;
using namespace rtvsim::testing;

TEST_CASE("arrival traces parse and must strictly increase") {
    const auto two = parse_arrivals("1000,40\n2000,40");
    REQUIRE(two.size() == 2);
    CHECK(two[0] == Arrival{SimTime{1000}, IrqVector{40}});
    CHECK(two[1].time == SimTime{2000});
    CHECK_THROWS_AS(parse_arrivals("2000,40\n1000,40"), NonMonotonicTime);
    CHECK_THROWS_AS(parse_arrivals("1000,40\n1000,41"), NonMonotonicTime);
    CHECK(parse_arrivals("").empty());
    CHECK(parse_arrivals("time_ns,vector\n# comment\n\n5,33\n").size() == 1);
}

TEST_CASE("malformed trace lines report their line number") {
    for (const char* text : {"1000,40\nabc,40", "1000,40\n2000", "1000,40\n2000,300", "1000,40\n2000,40,7"}) {
        CAPTURE(text);
        try {
            parse_arrivals(text);
            FAIL("expected a ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("trace files load from disk, an empty one is valid") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "rtvsim-test-empty-arrivals.csv";
    { std::ofstream(path) << ""; }
    CHECK(trace_arrivals(path.string()).empty());
    Scenario s;
    s.cost = shipped_profile();
    s.duration = milliseconds(5);
    s.load.kind = LoadKind::DeviceIrqTrace;
    s.load.file = path.string();
    CHECK(simulate(s).samples.size() == 4);
    std::filesystem::remove(path);
    CHECK_THROWS(trace_arrivals((dir / "rtvsim-test-no-such-file.csv").string()));
}

TEST_CASE("poisson arrivals realize the configured rate") {
    const double rate = 20000.0;
    const auto end = SimTime{5'000'000'000}; // expect 1e5 arrivals
    const auto a = poisson_arrivals(11, rate, end);
    REQUIRE(a.size() > 90000);
    const double realized = static_cast<double>(a.size()) / (static_cast<double>(end.ns) / 1e9);
    CHECK(std::abs(realized - rate) / rate < 0.02);
    for (std::size_t i = 1; i < a.size(); ++i)
        REQUIRE(a[i] > a[i - 1]);
    CHECK(a.back() < end);
}

TEST_CASE("same seed, same arrivals; different seed, different arrivals") {
    const auto end = SimTime{1'000'000'000};
    CHECK(poisson_arrivals(5, 1000, end) == poisson_arrivals(5, 1000, end));
    CHECK(poisson_arrivals(5, 1000, end) != poisson_arrivals(6, 1000, end));
}

TEST_CASE("no load means only the timer vector is ever injected") {
    Scenario s;
    s.cost = shipped_profile();
    s.duration = milliseconds(20);
    s.trace = true;
    const auto r = simulate(s);
    for (const auto& rec : records_tagged(r.trace, "inject"))
        CHECK(rec.payload.a == 240);
    CHECK(r.guest.device_virqs == 0);
}

TEST_CASE("second-VM load injects no device interrupts into the RT guest") {
    Scenario s;
    s.cost = shipped_profile();
    s.duration = milliseconds(200);
    s.load.kind = LoadKind::SecondVm;
    s.load.rate_hz = 3000;
    s.load.cache_penalty = Duration{800};
    const auto r = simulate(s);
    CHECK(r.guest.device_virqs == 0);
    CHECK(r.guest.timer_virqs > 0);
}

TEST_CASE("workload validation names the offending field") {
    const auto field_of = [](LoadProfile p, CyclictestSpec c) -> std::string {
        try {
            validate(p, c);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return "";
    };
    LoadProfile ok;
    CyclictestSpec ct;
    CHECK(field_of(ok, ct).empty());
    auto c = ct;
    c.body_cost = c.interval;
    CHECK(field_of(ok, c) == "cyclictest.body_cost_ns");
    c = ct;
    c.interval = Duration{0};
    CHECK(field_of(ok, c) == "cyclictest.interval_ns");
    c = ct;
    c.priority = 100;
    CHECK(field_of(ok, c) == "cyclictest.priority");
    auto p = ok;
    p.kind = LoadKind::DeviceIrqPoisson;
    p.rate_hz = 0;
    CHECK(field_of(p, ct) == "load.rate_hz");
    p.rate_hz = std::numeric_limits<double>::infinity();
    CHECK(field_of(p, ct) == "load.rate_hz");
    p = ok;
    p.kind = LoadKind::DeviceIrqTrace;
    CHECK(field_of(p, ct) == "load.file");
}
