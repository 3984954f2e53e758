#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "random_scenario.hpp"
#include "rtvsim/scenario_io.hpp"

using namespace rtvsim;
using namespace rtvsim::testing;

namespace {

std::string error_field(const Json& j) {
    try {
        scenario_from_json(resolve_scenario_json(j, RTVSIM_SOURCE_DIR));
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

Json minimal() {
    return Json::parse(R"({"name": "t", "cost_profile": "phenom-2012", "duration_ns": 1000000})");
}

} // namespace

TEST_CASE("a minimal scenario takes every default") {
    const auto s = scenario_from_json(resolve_scenario_json(minimal(), RTVSIM_SOURCE_DIR));
    CHECK(s.cost.vm_exit.ns == 1500);
    CHECK(s.cyclictest.interval == milliseconds(1));
    CHECK(s.load.kind == LoadKind::None);
    CHECK_FALSE(s.native);
}

TEST_CASE("configuration errors carry the dotted field path") {
    auto j = minimal();
    j["vmm"]["holdbak_enabled"] = true;
    CHECK(error_field(j) == "vmm.holdbak_enabled");
    j = minimal();
    j["vmm"]["holdback_enabled"] = "yes";
    CHECK(error_field(j) == "vmm.holdback_enabled");
    j = minimal();
    j["cyclictest"]["interval_ns"] = -5;
    CHECK(error_field(j) == "cyclictest.interval_ns");
    j = minimal();
    j["load"]["kind"] = "tar";
    CHECK(error_field(j) == "load.kind");
    j = minimal();
    j["duration_ns"] = 0;
    CHECK(error_field(j) == "duration_ns");
    j = minimal();
    j["vmm"]["injection_policy"] = "lifo";
    CHECK(error_field(j) == "vmm.injection_policy");
    j = minimal();
    j["load"] = Json::parse(R"({"kind": "poisson", "vector": 240})");
    CHECK(error_field(j) == "load.vector");
}

TEST_CASE("inline cost fields refine a named profile") {
    auto j = minimal();
    j["cost"]["vm_exit_ns"] = 777;
    const auto s = scenario_from_json(resolve_scenario_json(j, RTVSIM_SOURCE_DIR));
    CHECK(s.cost.vm_exit.ns == 777);
    CHECK(s.cost.vm_entry.ns == 1500);
    j = minimal();
    j.erase("cost_profile");
    j["cost"] = Json::parse(R"({"vm_exit_ns": 1})");
    CHECK(error_field(j).rfind("cost.", 0) == 0);
    j = minimal();
    j["cost_profile"] = "no-such-profile";
    CHECK(error_field(j) == "cost_profile");
}

TEST_CASE("overrides set nested values with JSON typing") {
    auto j = minimal();
    apply_override(j, "vmm.tpr_mask_enabled=true");
    apply_override(j, "cyclictest.interval_ns=500000");
    apply_override(j, "load.kind=poisson");
    apply_override(j, "vmm.emergency_factor=\"7/3\"");
    const auto s = scenario_from_json(resolve_scenario_json(j, RTVSIM_SOURCE_DIR));
    CHECK(s.vmm.tpr_mask_enabled);
    CHECK(s.cyclictest.interval.ns == 500000);
    CHECK(s.load.kind == LoadKind::DeviceIrqPoisson);
    CHECK(s.vmm.emergency_factor.num == 7);
    CHECK(s.vmm.emergency_factor.den == 3);
    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
}

TEST_CASE("canonical JSON round-trips a scenario") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto s = random_scenario(seed);
        const auto j = scenario_to_json(s);
        const auto back = scenario_from_json(j);
        CAPTURE(seed);
        CHECK(scenario_to_json(back) == j);
        CHECK(config_fingerprint(back) == config_fingerprint(s));
    }
}

TEST_CASE("native and virtualized runs share a workload fingerprint") {
    auto s = random_scenario(3);
    auto n = s;
    n.native = !s.native;
    n.vmm.tpr_mask_enabled = !s.vmm.tpr_mask_enabled;
    CHECK(workload_fingerprint(n) == workload_fingerprint(s));
    CHECK(config_fingerprint(n) != config_fingerprint(s));
    n.seed = s.seed + 1;
    CHECK(workload_fingerprint(n) != workload_fingerprint(s));
}

TEST_CASE("reports round-trip through JSON") {
    auto s = random_scenario(8);
    const auto r = simulate(s);
    const auto rep = make_report(s, r, true);
    const auto back = report_from_json(report_to_json(rep));
    CHECK(back.histogram == rep.histogram);
    CHECK(back.worst_ns == rep.worst_ns);
    CHECK(back.raw == rep.raw);
    CHECK(back.workload_fingerprint == rep.workload_fingerprint);
    CHECK(report_to_json(back) == report_to_json(rep));
    auto bad = report_to_json(rep);
    bad["histogram"]["count"] = rep.histogram.count() + 1;
    CHECK_THROWS(report_from_json(bad));
}

TEST_CASE("every shipped scenario loads") {
    for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(RTVSIM_SOURCE_DIR) / "scenarios")) {
        if (e.path().extension() != ".json")
            continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_scenario(e.path()));
    }
}

TEST_CASE("run outputs are written atomically into the output directory") {
    const auto dir = std::filesystem::temp_directory_path() / "rtvsim-test-outputs";
    std::filesystem::remove_all(dir);
    auto s = random_scenario(21);
    s.trace = true;
    const auto r = simulate(s);
    write_run_outputs(dir, make_report(s, r), r);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "histogram.csv"));
    std::ifstream trace(dir / "trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "time_ns,seq,kind,detail");
    CHECK(read_report(dir / "report.json").worst_ns == r.histogram.max_ns());
    for (const auto& e : std::filesystem::directory_iterator(dir))
        CHECK(e.path().extension() != ".tmp");
    std::filesystem::remove_all(dir);
}
