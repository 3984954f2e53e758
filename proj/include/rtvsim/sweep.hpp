#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rtvsim/config.hpp"
#include "rtvsim/metrics.hpp"

namespace rtvsim {

enum class Exec { Serial, Parallel };

/// Calls body(i) for i in [0, n). Parallel runs use OpenMP; each index must be
/// independent. The exception of the lowest failing index is rethrown.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Exec exec);

/// One report per scenario, in input order. Serial and parallel results are identical.
std::vector<RunReport> run_batch(const std::vector<Scenario>& scenarios, Exec exec);

struct LadderRow {
    std::string stage; // none, sorted, holdback, suppress, tpr
    InjectionPolicy policy = InjectionPolicy::Fifo;
    bool holdback = false;
    bool suppress = false;
    bool tpr = false;
    bool deferred = false;
    Scenario scenario;
    RunReport report;
};

/// Stage names in ladder order.
const std::vector<std::string>& ladder_stages();

/// The cumulative optimization ladder crossed with deferred-timer off/on, on top of `base`.
/// `stage` and `deferred` restrict the rows; an unknown stage throws ConfigError.
std::vector<LadderRow> ladder(const Scenario& base, const std::optional<std::string>& stage = std::nullopt,
                              std::optional<bool> deferred = std::nullopt);

/// Runs every row (shared seed and workload) and fills in the reports.
void run_ladder(std::vector<LadderRow>& rows, Exec exec);

/// `stage,policy,holdback,suppress,tpr,deferred,worst_ns,avg_ns,min_ns,samples`
std::string ladder_csv(const std::vector<LadderRow>& rows);

} // namespace rtvsim
