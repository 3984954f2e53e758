#include <atomic>
#include <stdexcept>

#include "doctest.h"
#include "random_scenario.hpp"
#include "rtvsim/scenario_io.hpp"
#include "rtvsim/sweep.hpp"

using namespace rtvsim;
using namespace rtvsim::testing;

namespace {

Scenario shipped(const std::string& name) {
    return load_scenario(std::filesystem::path(RTVSIM_SOURCE_DIR) / "scenarios" / (name + ".json"));
}

} // namespace

TEST_CASE("for_each_index visits every index once and rethrows the lowest failure") {
    for (auto exec : {Exec::Serial, Exec::Parallel}) {
        std::vector<std::atomic<int>> hits(257);
        for_each_index(hits.size(), [&](std::size_t i) { ++hits[i]; }, exec);
        for (const auto& h : hits)
            CHECK(h.load() == 1);
        try {
            for_each_index(
                64,
                [](std::size_t i) {
                    if (i == 17 || i == 40)
                        throw std::runtime_error(std::to_string(i));
                },
                exec);
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "17");
        }
    }
}

TEST_CASE("the ladder has five stages times two deferral settings") {
    const auto rows = ladder(shipped("baseline-idle"));
    REQUIRE(rows.size() == 10);
    CHECK_FALSE(rows[0].deferred);
    CHECK(rows[5].deferred);
    CHECK(rows[0].stage == "none");
    CHECK(rows[4].stage == "tpr");
    CHECK(rows[4].holdback);
    CHECK(rows[4].suppress);
    CHECK(rows[4].tpr);
    CHECK(rows[4].policy == InjectionPolicy::PrioritySorted);
    CHECK(rows[1].policy == InjectionPolicy::PrioritySorted);
    CHECK_FALSE(rows[1].holdback);
    CHECK(ladder(shipped("baseline-idle"), "suppress").size() == 2);
    CHECK(ladder(shipped("baseline-idle"), "suppress", true).size() == 1);
    CHECK_THROWS_AS(ladder(shipped("baseline-idle"), "turbo"), ConfigError);
}

TEST_CASE("a single ladder row reproduces a direct run") {
    auto base = shipped("full-opt-load");
    base.duration = milliseconds(500);
    auto rows = ladder(base, "holdback", false);
    run_ladder(rows, Exec::Serial);
    const auto direct = make_report(rows[0].scenario, simulate(rows[0].scenario));
    CHECK(report_to_json(rows[0].report) == report_to_json(direct));
}

TEST_CASE("serial and parallel ladders agree") {
    auto base = shipped("baseline-load");
    base.duration = milliseconds(500);
    auto a = ladder(base);
    auto b = ladder(base);
    run_ladder(a, Exec::Serial);
    run_ladder(b, Exec::Parallel);
    CHECK(ladder_csv(a) == ladder_csv(b));
    CHECK(ladder_csv(a).rfind("stage,policy,holdback,suppress,tpr,deferred,worst_ns,avg_ns,min_ns,samples\n", 0) == 0);
}

TEST_CASE("on an idle guest deferral saves exactly one timer round trip at every stage") {
    auto base = shipped("baseline-idle");
    base.duration = milliseconds(200);
    auto rows = ladder(base);
    run_ladder(rows, Exec::Parallel);
    for (std::size_t i = 0; i < 5; ++i) {
        CAPTURE(rows[i].stage);
        CHECK(rows[i].report.worst_ns - rows[i + 5].report.worst_ns == base.cost.timer_round_trip().ns);
    }
}

TEST_CASE("worst case never rises along the ladder on the shipped load scenario") {
    auto rows = ladder(shipped("baseline-load"));
    run_ladder(rows, Exec::Parallel);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (i == 5)
            continue; // deferral group boundary
        CAPTURE(rows[i].stage);
        CAPTURE(rows[i].deferred);
        CHECK(rows[i].report.worst_ns <= rows[i - 1].report.worst_ns);
    }
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(rows[i + 5].report.worst_ns <= rows[i].report.worst_ns);
}
