#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtvsim/config.hpp"
#include "rtvsim/des.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/metrics.hpp"

namespace rtvsim {

using Json = nlohmann::json;

/// Directory searched for named cost profiles when nothing closer matches.
std::filesystem::path default_profile_dir();

CostModel cost_from_json(const Json& j);
Json cost_to_json(const CostModel& c);
/// `name_or_path` is a file path or a profile name looked up next to the scenario,
/// in ./profiles, ../profiles, $RTVSIM_PROFILE_DIR and the installed profile dir.
CostModel load_cost_profile(const std::string& name_or_path, const std::filesystem::path& base_dir = {});

/// Applies `a.b.c=value`. The value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& j, std::string_view assignment);

/// Raw scenario JSON with the cost profile inlined under "cost" and overrides applied.
Json resolve_scenario_json(Json j, const std::filesystem::path& base_dir, const std::vector<std::string>& overrides = {});
Scenario scenario_from_json(const Json& resolved, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
/// Canonical form: every field explicit, cost inlined, trace arrivals inlined.
Json scenario_to_json(const Scenario& s);

/// Identifies the stimulus (RT task, load, duration, seed): equal for native and virtualized runs.
std::string workload_fingerprint(const Scenario& s);
/// Identifies the whole configuration.
std::string config_fingerprint(const Scenario& s);

RunReport make_report(const Scenario& s, const RunResult& r, bool keep_raw = false);
Json report_to_json(const RunReport& r);
RunReport report_from_json(const Json& j);
RunReport read_report(const std::filesystem::path& file);

std::string histogram_csv(const LatencyHistogram& h);
std::string trace_csv(const std::vector<TraceRecord>& trace);

/// Writes via a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);

/// report.json, histogram.csv and (when traced) trace.csv under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunReport& report, const RunResult& result);

} // namespace rtvsim
