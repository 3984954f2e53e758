#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rtvsim/config.hpp"
#include "rtvsim/des.hpp"
#include "rtvsim/hypercall.hpp"

namespace rtvsim {

class Machine;

/// Virtual interrupts waiting for injection. Vectors are unique; a re-arrival
/// keeps the earliest arrival time.
class PendingIrqQueue {
public:
    struct Entry {
        IrqVector vector;
        SimTime arrival;
        std::uint64_t order; // arrival tie-break
    };

    /// Returns false when the vector was already queued.
    bool enqueue(IrqVector v, SimTime arrival);
    void requeue(const Entry& e);

    /// Next vector per policy among those above `floor` (all when no floor).
    std::optional<Entry> pop(InjectionPolicy policy, std::optional<IrqVector> floor = std::nullopt);
    bool has_eligible(std::optional<IrqVector> floor) const;

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    bool contains(IrqVector v) const;
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
    std::uint64_t next_order_ = 0;
};

struct RtSection {
    bool active = false;
    Duration declared_wcet{};
    SimTime began{};
    std::optional<EventHandle> emergency;
};

struct VmmStats {
    std::uint64_t soft_triggers = 0;
    std::uint64_t hard_triggers = 0;
    std::uint64_t injections = 0;
    std::uint64_t emergencies = 0;
    std::uint64_t sections = 0;
    std::uint64_t external_requests = 0;
    std::uint64_t unknown_hypercalls = 0;
};

/// User-level VMM: owns the virtual-interrupt queue and the guest's virtual timer.
class Vmm {
public:
    Vmm(Machine& m, VmmConfig cfg);

    /// Entry point whenever the VMM becomes current (after the world switch).
    void run();

    void begin_rt_section(Duration declared_wcet);
    /// Ends the active section. Idempotent.
    void rt_complete();

    /// True when an injection is possible right now (drives interrupt-window exits).
    bool has_injectable() const;
    bool guest_halted() const { return guest_halted_; }

    const VmmConfig& config() const { return cfg_; }
    const PendingIrqQueue& queue() const { return queue_; }
    const RtSection& section() const { return section_; }
    const VmmStats& stats() const { return stats_; }
    Duration soft_threshold() const { return soft_threshold_; }

private:
    void handle_hypercall(const Hypercall& hc, Action then);
    void handle_item(const VmmItem& item);
    void program_guest_timer(SimTime deadline, SimTime issued, Action then);
    void external_request(Duration service_latency, Action then);
    void inject_next();
    void end_section(std::string_view reason);
    std::optional<IrqVector> holdback_floor() const;

    Machine& m_;
    VmmConfig cfg_;
    Duration soft_threshold_;
    PendingIrqQueue queue_;
    RtSection section_;
    VmmStats stats_;
    bool guest_halted_ = false;
    std::uint64_t next_request_ = 0;
};

} // namespace rtvsim
