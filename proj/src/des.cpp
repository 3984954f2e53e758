#include "rtvsim/des.hpp"

#include <cmath>
#include <limits>

namespace rtvsim {

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::HwIrqRaised: return "hw_irq";
    case EventKind::TimerExpiry: return "timer_expiry";
    case EventKind::VmExitComplete: return "vm_exit";
    case EventKind::VmEntryComplete: return "vm_entry";
    case EventKind::VmmDispatch: return "vmm_dispatch";
    case EventKind::GuestTaskWakeup: return "task_wakeup";
    case EventKind::GuestTaskCompletion: return "task_completion";
    case EventKind::EmergencyTimeout: return "emergency_timeout";
    case EventKind::ExternalServiceCompletion: return "external_completion";
    case EventKind::LoadArrival: return "load_arrival";
    case EventKind::Charge: return "charge";
    case EventKind::Note: return "note";
    }
    return "unknown";
}

std::string TraceRecord::detail() const {
    std::string s(payload.tag);
    s += ' ';
    s += std::to_string(payload.a);
    s += ' ';
    s += std::to_string(payload.b);
    return s;
}

std::string format_trace_line(const TraceRecord& r) {
    std::string s = std::to_string(r.time.ns);
    s += ',';
    s += std::to_string(r.seq);
    s += ',';
    s += to_string(r.kind);
    s += ',';
    s += r.detail();
    return s;
}

void EventQueue::push(SimTime at, std::uint64_t seq, Entry e) {
    events_.emplace(Key{at, seq}, std::move(e));
    by_seq_.emplace(seq, at);
}

bool EventQueue::cancel(EventHandle h) {
    auto it = by_seq_.find(h.seq);
    if (it == by_seq_.end())
        return false;
    events_.erase(Key{it->second, h.seq});
    by_seq_.erase(it);
    return true;
}

std::pair<EventQueue::Key, EventQueue::Entry> EventQueue::pop() {
    auto node = events_.extract(events_.begin());
    by_seq_.erase(node.key().second);
    return {node.key(), std::move(node.mapped())};
}

EventHandle Simulator::schedule(SimTime at, EventKind kind, Payload payload, Action action) {
    if (at < clock_)
        throw SchedulingInPast("event at " + to_string(at) + " precedes clock " + to_string(clock_));
    const auto seq = next_seq_++;
    queue_.push(at, seq, EventQueue::Entry{kind, payload, std::move(action)});
    return EventHandle{seq};
}

std::uint64_t Simulator::run_until(SimTime limit) {
    std::uint64_t steps = 0;
    while (!queue_.empty() && queue_.top().first <= limit) {
        auto [key, entry] = queue_.pop();
        clock_ = key.first;
        ++steps;
        ++dispatched_;
        emit(TraceRecord{key.first, key.second, entry.kind, entry.payload});
        if (entry.action)
            entry.action();
    }
    if (limit > clock_)
        clock_ = limit;
    return steps;
}

void Simulator::note(EventKind kind, Payload payload) {
    emit(TraceRecord{clock_, next_seq_++, kind, payload});
}

void Simulator::emit(const TraceRecord& r) {
    if (tracing_)
        trace_.push_back(r);
    if (observer_)
        observer_(r);
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
    if (hi <= lo)
        return lo;
    const std::uint64_t span = hi - lo + 1;
    if (span == 0)
        return next_u64();
    // rejection sampling keeps the distribution exact
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + x % span;
}

Duration Rng::exponential(double rate_hz) {
    const double u = next_unit();
    const double seconds = -std::log1p(-u) / rate_hz;
    const double ns = std::llround(seconds * 1e9);
    return Duration{ns < 1.0 ? 1 : static_cast<std::uint64_t>(ns)};
}

} // namespace rtvsim
