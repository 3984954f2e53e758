// rtvsim: run, sweep and compare latency simulations of the virtualized RT stack.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rtvsim/error.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/scenario_io.hpp"
#include "rtvsim/sweep.hpp"

namespace fs = std::filesystem;
using namespace rtvsim;

namespace {

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string duration;
    std::string out;
    bool trace = false;
    bool native = false;
    std::vector<std::string> sets;
};

// "250000", "250us", "10ms", "1s"
std::uint64_t parse_duration(const std::string& text) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::logic_error&) {
        throw ConfigError("duration_ns", "bad duration '" + text + "'");
    }
    const std::string unit = text.substr(used);
    std::uint64_t scale = 1;
    if (unit.empty() || unit == "ns")
        scale = 1;
    else if (unit == "us")
        scale = 1000;
    else if (unit == "ms")
        scale = 1000000;
    else if (unit == "s")
        scale = 1000000000;
    else
        throw ConfigError("duration_ns", "unknown unit '" + unit + "'");
    return (Duration{v} * scale).ns;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("scenario", c.scenario, "Scenario file (JSON)")->required();
    cmd->add_option("--seed", c.seed, "Override the RNG seed");
    cmd->add_option("--duration", c.duration, "Simulated time, e.g. 1000000, 500us, 10ms, 2s");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_flag("--trace", c.trace, "Record the event trace");
    cmd->add_flag("--native", c.native, "Bare-metal baseline: no virtualization transitions");
    cmd->add_option("--set", c.sets, "Config override key=value (dotted path), repeatable");
}

Scenario load(const Common& c) {
    auto overrides = c.sets;
    if (c.seed)
        overrides.push_back("seed=" + std::to_string(*c.seed));
    if (!c.duration.empty())
        overrides.push_back("duration_ns=" + std::to_string(parse_duration(c.duration)));
    if (c.trace)
        overrides.emplace_back("trace=true");
    if (c.native)
        overrides.emplace_back("native=true");
    if (!c.out.empty())
        overrides.push_back("out=\"" + c.out + "\"");
    return load_scenario(c.scenario, overrides);
}

fs::path out_dir(const Scenario& s) {
    return s.out_dir.empty() ? fs::path("out") / s.name : fs::path(s.out_dir);
}

void print_summary(const RunReport& r) {
    std::printf("scenario=%s worst_ns=%llu avg_ns=%llu min_ns=%llu samples=%llu\n", r.scenario.c_str(),
                static_cast<unsigned long long>(r.worst_ns), static_cast<unsigned long long>(r.avg_ns),
                static_cast<unsigned long long>(r.min_ns), static_cast<unsigned long long>(r.samples));
}

int cmd_run(const Common& c, bool raw) {
    const Scenario s = load(c);
    const RunResult result = simulate(s);
    const RunReport report = make_report(s, result, raw);
    const auto dir = out_dir(s);
    write_run_outputs(dir, report, result);
    print_summary(report);
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}

int cmd_sweep(const Common& c, const std::optional<std::string>& stage, const std::string& deferred, bool serial) {
    const Scenario base = load(c);
    std::optional<bool> d;
    if (deferred == "on")
        d = true;
    else if (deferred == "off")
        d = false;
    else if (deferred != "both")
        throw ConfigError("deferred", "expected on, off or both");
    auto rows = ladder(base, stage, d);
    run_ladder(rows, serial ? Exec::Serial : Exec::Parallel);
    const std::string csv = ladder_csv(rows);
    std::fputs(csv.c_str(), stdout);
    if (!c.out.empty() || !base.out_dir.empty())
        write_file_atomic(out_dir(base) / "sweep.csv", csv);
    return 0;
}

int cmd_compare(const std::string& a_file, const std::string& b_file, bool force, bool csv) {
    const RunReport a = read_report(a_file);
    const RunReport b = read_report(b_file);
    const Comparison cmp = compare(a, b, force);
    if (csv) {
        std::printf("worst_a_ns,worst_b_ns,worst_ratio,worst_delta_ns,avg_a_ns,avg_b_ns,avg_delta_ns\n");
        std::printf("%llu,%llu,%.6f,%lld,%llu,%llu,%lld\n", static_cast<unsigned long long>(a.worst_ns),
                    static_cast<unsigned long long>(b.worst_ns), cmp.worst_ratio, static_cast<long long>(cmp.worst_delta_ns),
                    static_cast<unsigned long long>(a.avg_ns), static_cast<unsigned long long>(b.avg_ns),
                    static_cast<long long>(cmp.avg_delta_ns));
        return 0;
    }
    std::printf("a: %s (worst %llu ns, avg %llu ns)\n", a.scenario.c_str(), static_cast<unsigned long long>(a.worst_ns),
                static_cast<unsigned long long>(a.avg_ns));
    std::printf("b: %s (worst %llu ns, avg %llu ns)\n", b.scenario.c_str(), static_cast<unsigned long long>(b.worst_ns),
                static_cast<unsigned long long>(b.avg_ns));
    std::printf("worst-case ratio b/a: %.3f\n", cmp.worst_ratio);
    std::printf("worst-case delta:     %lld ns\n", static_cast<long long>(cmp.worst_delta_ns));
    std::printf("average delta:        %lld ns\n", static_cast<long long>(cmp.avg_delta_ns));
    return 0;
}

int cmd_trace_dump(Common c) {
    c.trace = true;
    const Scenario s = load(c);
    const RunResult result = simulate(s);
    const std::string text = trace_csv(result.trace);
    if (c.out.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file_atomic(fs::path(c.out) / "trace.csv", text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event latency simulator for a virtualized real-time stack"};
    app.require_subcommand(1);

    Common run_opts;
    bool raw = false;
    auto* run = app.add_subcommand("run", "Run one scenario and write report.json and histogram.csv");
    add_common(run, run_opts);
    run->add_flag("--raw", raw, "Keep raw samples in the report");

    Common sweep_opts;
    std::optional<std::string> stage;
    std::string deferred = "both";
    bool serial = false;
    auto* sweep = app.add_subcommand("sweep", "Run the optimization ladder and print a CSV table");
    add_common(sweep, sweep_opts);
    sweep->add_option("--stage", stage, "Only this stage: none, sorted, holdback, suppress, tpr");
    sweep->add_option("--deferred", deferred, "Deferred-timer column: on, off or both");
    sweep->add_flag("--serial", serial, "Run rows one after another");

    std::string report_a, report_b;
    bool force = false, csv = false;
    auto* cmp = app.add_subcommand("compare", "Compare two report.json files");
    cmp->add_option("a", report_a, "Baseline report")->required();
    cmp->add_option("b", report_b, "Other report")->required();
    cmp->add_flag("--force", force, "Compare even if the workloads differ");
    cmp->add_flag("--csv", csv, "CSV output");

    Common dump_opts;
    auto* dump = app.add_subcommand("trace-dump", "Run with tracing and print the event trace");
    add_common(dump, dump_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(run_opts, raw);
        if (*sweep)
            return cmd_sweep(sweep_opts, stage, deferred, serial);
        if (*cmp)
            return cmd_compare(report_a, report_b, force, csv);
        if (*dump)
            return cmd_trace_dump(dump_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const InvariantViolation& e) {
        std::cerr << "internal invariant violated: " << e.what() << '\n';
        return 2;
    } catch (const FingerprintMismatch& e) {
        std::cerr << "fingerprint mismatch: " << e.what() << " (use --force)\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
