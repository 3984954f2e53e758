#include "rtvsim/workload.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "rtvsim/machine.hpp"

namespace rtvsim {

void validate(const LoadProfile& profile, const CyclictestSpec& spec) {
    if (spec.interval.ns == 0)
        throw ConfigError("cyclictest.interval_ns", "must be positive");
    if (spec.body_cost >= spec.interval)
        throw ConfigError("cyclictest.body_cost_ns", "must be shorter than the interval");
    if (spec.declared_wcet.ns == 0)
        throw ConfigError("cyclictest.declared_wcet_ns", "must be positive");
    if (spec.priority < 2 || spec.priority > 99)
        throw ConfigError("cyclictest.priority", "must be in [2, 99]");
    switch (profile.kind) {
    case LoadKind::None:
        break;
    case LoadKind::DeviceIrqPoisson:
    case LoadKind::SecondVm:
        if (!(profile.rate_hz > 0.0) || !std::isfinite(profile.rate_hz))
            throw ConfigError("load.rate_hz", "must be positive and finite");
        break;
    case LoadKind::DeviceIrqTrace:
        if (profile.arrivals.empty() && profile.file.empty())
            throw ConfigError("load.file", "trace load needs a file or inline arrivals");
        for (std::size_t i = 1; i < profile.arrivals.size(); ++i)
            if (profile.arrivals[i].time <= profile.arrivals[i - 1].time)
                throw ConfigError("load.arrivals", "times must strictly increase");
        break;
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
    field = trim(field);
    T v{};
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
    return v;
}

// Feeds the arrivals into the event queue one at a time.
void schedule_arrivals(Machine& m, std::shared_ptr<const std::vector<Arrival>> list, std::size_t index) {
    const SimTime end = SimTime{} + m.scenario().duration;
    if (index >= list->size() || (*list)[index].time > end)
        return;
    const Arrival a = (*list)[index];
    m.sim.schedule(a.time, EventKind::LoadArrival, Payload{"irq", a.vector.value, static_cast<std::int64_t>(index)},
                   [&m, list, index, a] {
                       m.ic.raise_irq(a.vector, m.sim.now());
                       schedule_arrivals(m, list, index + 1);
                   });
}

} // namespace

std::vector<Arrival> parse_arrivals(std::string_view text) {
    std::vector<Arrival> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        if (line_no == 1 && line.rfind("time_ns", 0) == 0)
            continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
            throw ParseError(line_no, "expected 'time_ns,vector'");
        const auto t = parse_number<std::uint64_t>(line.substr(0, comma), line_no, "time");
        const auto v = parse_number<unsigned>(line.substr(comma + 1), line_no, "vector");
        if (v > 255)
            throw ParseError(line_no, "vector out of range");
        if (!out.empty() && SimTime{t} <= out.back().time)
            throw NonMonotonicTime(line_no, "arrival times must strictly increase");
        out.push_back(Arrival{SimTime{t}, IrqVector{static_cast<std::uint8_t>(v)}});
    }
    return out;
}

std::vector<Arrival> trace_arrivals(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("load.file", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_arrivals(ss.str());
}

std::vector<SimTime> poisson_arrivals(std::uint64_t seed, double rate_hz, SimTime end) {
    Rng rng(seed);
    std::vector<SimTime> out;
    SimTime t{};
    for (;;) {
        const Duration gap = rng.exponential(rate_hz);
        if (gap.ns >= end.ns - t.ns)
            break;
        t = t + gap;
        out.push_back(t);
    }
    return out;
}

void install(const LoadProfile& profile, const CyclictestSpec& spec, Machine& m) {
    validate(profile, spec);
    m.guest.add_rt_task(spec);
    const SimTime end = SimTime{} + m.scenario().duration;
    auto list = std::make_shared<std::vector<Arrival>>();
    switch (profile.kind) {
    case LoadKind::None:
        return;
    case LoadKind::DeviceIrqPoisson:
    case LoadKind::SecondVm:
        for (auto t : poisson_arrivals(m.scenario().seed, profile.rate_hz, end))
            list->push_back(Arrival{t, profile.vector});
        break;
    case LoadKind::DeviceIrqTrace:
        *list = profile.arrivals.empty() ? trace_arrivals(profile.file) : profile.arrivals;
        break;
    }
    if (profile.kind == LoadKind::SecondVm)
        m.guest.set_cache_penalty(profile.cache_penalty);
    else
        m.guest.add_load_task();
    schedule_arrivals(m, std::move(list), 0);
}

} // namespace rtvsim
