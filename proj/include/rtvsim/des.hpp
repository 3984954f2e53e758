#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rtvsim/time.hpp"

namespace rtvsim {

enum class EventKind : std::uint8_t {
    HwIrqRaised,
    TimerExpiry,
    VmExitComplete,
    VmEntryComplete,
    VmmDispatch,
    GuestTaskWakeup,
    GuestTaskCompletion,
    EmergencyTimeout,
    ExternalServiceCompletion,
    LoadArrival,
    Charge, // any other completed unit of CPU work
    Note,   // zero-time annotation, never queued
};

std::string_view to_string(EventKind k);

/// Kind-specific payload. `tag` names the sub-kind, `a`/`b` carry numbers.
struct Payload {
    std::string_view tag;
    std::int64_t a = 0;
    std::int64_t b = 0;
};

struct EventHandle {
    std::uint64_t seq = 0;
    friend bool operator==(EventHandle, EventHandle) = default;
};

/// One line of the golden trace: `time_ns,seq,kind,detail`.
struct TraceRecord {
    SimTime time;
    std::uint64_t seq;
    EventKind kind;
    Payload payload;
    std::string detail() const;
};

std::string format_trace_line(const TraceRecord& r);

using Action = std::function<void()>;

/// Pending events ordered by (time, seq).
class EventQueue {
public:
    struct Entry {
        EventKind kind;
        Payload payload;
        Action action;
    };
    using Key = std::pair<SimTime, std::uint64_t>;

    void push(SimTime at, std::uint64_t seq, Entry e);
    bool cancel(EventHandle h);
    bool empty() const { return events_.empty(); }
    std::size_t size() const { return events_.size(); }
    /// Earliest pending key; undefined when empty.
    Key top() const { return events_.begin()->first; }
    std::pair<Key, Entry> pop();
    bool pending(EventHandle h) const { return by_seq_.contains(h.seq); }

private:
    std::map<Key, Entry> events_;
    std::unordered_map<std::uint64_t, SimTime> by_seq_;
};

/// Deterministic single-threaded simulation engine.
class Simulator {
public:
    SimTime now() const { return clock_; }

    /// Throws SchedulingInPast if `at` precedes the clock.
    EventHandle schedule(SimTime at, EventKind kind, Payload payload, Action action);
    EventHandle schedule_in(Duration d, EventKind kind, Payload payload, Action action) {
        return schedule(clock_ + d, kind, payload, std::move(action));
    }
    bool cancel(EventHandle h) { return queue_.cancel(h); }
    bool pending(EventHandle h) const { return queue_.pending(h); }

    /// Dispatches every event with time <= limit, then sets the clock to limit.
    std::uint64_t run_until(SimTime limit);

    /// Records a zero-time annotation in the trace (consumes a sequence number).
    void note(EventKind kind, Payload payload);
    void note(std::string_view tag, std::int64_t a = 0, std::int64_t b = 0) {
        note(EventKind::Note, Payload{tag, a, b});
    }

    void set_trace(bool on) { tracing_ = on; }
    bool tracing() const { return tracing_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    std::uint64_t dispatched() const { return dispatched_; }

    /// Hook invoked for every trace record; used by online checkers.
    void set_observer(std::function<void(const TraceRecord&)> fn) { observer_ = std::move(fn); }

private:
    void emit(const TraceRecord& r);

    SimTime clock_{};
    std::uint64_t next_seq_ = 0;
    std::uint64_t dispatched_ = 0;
    EventQueue queue_;
    bool tracing_ = false;
    std::vector<TraceRecord> trace_;
    std::function<void(const TraceRecord&)> observer_;
};

/// splitmix64 stream. Each draw: state += 0x9E3779B97F4A7C15; z = state;
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
/// return z ^ (z >> 31). All arithmetic is modulo 2^64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1) from the top 53 bits.
    double next_unit();
    /// Uniform integer in [lo, hi], inclusive.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
    /// Exponential inter-arrival for rate `rate_hz`, rounded to whole nanoseconds (min 1).
    Duration exponential(double rate_hz);

private:
    std::uint64_t state_;
};

} // namespace rtvsim
