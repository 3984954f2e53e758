#include "rtvsim/sweep.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

#include "rtvsim/error.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/scenario_io.hpp"

namespace rtvsim {

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Exec exec) {
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

std::vector<RunReport> run_batch(const std::vector<Scenario>& scenarios, Exec exec) {
    std::vector<RunReport> out(scenarios.size());
    for_each_index(
        scenarios.size(),
        [&](std::size_t i) { out[i] = make_report(scenarios[i], simulate(scenarios[i])); }, exec);
    return out;
}

const std::vector<std::string>& ladder_stages() {
    static const std::vector<std::string> names{"none", "sorted", "holdback", "suppress", "tpr"};
    return names;
}

std::vector<LadderRow> ladder(const Scenario& base, const std::optional<std::string>& stage, std::optional<bool> deferred) {
    const auto& names = ladder_stages();
    if (stage && std::find(names.begin(), names.end(), *stage) == names.end())
        throw ConfigError("stage", "unknown stage '" + *stage + "'");
    std::vector<LadderRow> rows;
    for (bool d : {false, true}) {
        if (deferred && *deferred != d)
            continue;
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (stage && *stage != names[k])
                continue;
            LadderRow row;
            row.stage = names[k];
            row.policy = k >= 1 ? InjectionPolicy::PrioritySorted : InjectionPolicy::Fifo;
            row.holdback = k >= 2;
            row.suppress = k >= 3;
            row.tpr = k >= 4;
            row.deferred = d;
            row.scenario = base;
            auto& v = row.scenario.vmm;
            v.injection_policy = row.policy;
            v.holdback_enabled = row.holdback;
            v.kernel_suppress_enabled = row.suppress;
            v.tpr_mask_enabled = row.tpr;
            v.deferred_timer_enabled = row.deferred;
            row.scenario.name = base.name + "/" + row.stage + (d ? "+deferred" : "");
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void run_ladder(std::vector<LadderRow>& rows, Exec exec) {
    std::vector<Scenario> scenarios;
    scenarios.reserve(rows.size());
    for (const auto& r : rows)
        scenarios.push_back(r.scenario);
    auto reports = run_batch(scenarios, exec);
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].report = std::move(reports[i]);
}

std::string ladder_csv(const std::vector<LadderRow>& rows) {
    std::ostringstream os;
    os << "stage,policy,holdback,suppress,tpr,deferred,worst_ns,avg_ns,min_ns,samples\n";
    for (const auto& r : rows) {
        os << r.stage << ',' << (r.policy == InjectionPolicy::Fifo ? "fifo" : "priority_sorted") << ',' << r.holdback << ','
           << r.suppress << ',' << r.tpr << ',' << r.deferred << ',' << r.report.worst_ns << ',' << r.report.avg_ns << ','
           << r.report.min_ns << ',' << r.report.samples << '\n';
    }
    return os.str();
}

} // namespace rtvsim
