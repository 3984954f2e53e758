#include "rtvsim/scenario_io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "rtvsim/workload.hpp"

#ifndef RTVSIM_PROFILE_DIR
#define RTVSIM_PROFILE_DIR "profiles"
#endif

namespace rtvsim {

namespace fs = std::filesystem;

namespace {

// Strict object reader: every key must be consumed, every error names its path.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    const Json* find(std::string_view key) {
        used_.insert(std::string(key));
        auto it = j_.find(std::string(key));
        if (it == j_.end() || it->is_null())
            return nullptr;
        return &*it;
    }

    const Json& require(std::string_view key) {
        const Json* v = find(key);
        if (!v)
            throw ConfigError(at(key), "missing");
        return *v;
    }

    std::uint64_t u64(std::string_view key, std::uint64_t def) {
        const Json* v = find(key);
        return v ? as_u64(*v, at(key)) : def;
    }
    Duration ns(std::string_view key, Duration def) { return Duration{u64(key, def.ns)}; }
    Duration ns_required(std::string_view key) { return Duration{as_u64(require(key), at(key))}; }

    bool boolean(std::string_view key, bool def) {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_boolean())
            throw ConfigError(at(key), "expected true or false");
        return v->get<bool>();
    }

    double number(std::string_view key, double def) {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_number())
            throw ConfigError(at(key), "expected a number");
        return v->get<double>();
    }

    std::string string(std::string_view key, std::string def) {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_string())
            throw ConfigError(at(key), "expected a string");
        return v->get<std::string>();
    }

    IrqVector vector(std::string_view key, IrqVector def) {
        const Json* v = find(key);
        if (!v)
            return def;
        const auto x = as_u64(*v, at(key));
        if (x > 255)
            throw ConfigError(at(key), "vector must be in [0, 255]");
        return IrqVector{static_cast<std::uint8_t>(x)};
    }

    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!used_.count(k))
                throw ConfigError(at(k), "unknown field");
    }

    static std::uint64_t as_u64(const Json& v, const std::string& path) {
        if (v.is_number_unsigned())
            return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError(path, "expected a non-negative integer");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Rational parse_rational(const Json& v, const std::string& path) {
    Rational r;
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            std::size_t used = 0;
            r.num = std::stoull(s.substr(0, slash), &used);
            if (used != s.substr(0, slash).size())
                throw std::invalid_argument(s);
            r.den = 1;
            if (slash != std::string::npos) {
                r.den = std::stoull(s.substr(slash + 1), &used);
                if (used != s.size() - slash - 1)
                    throw std::invalid_argument(s);
            }
        } catch (const std::logic_error&) {
            throw ConfigError(path, "expected an integer or 'num/den'");
        }
    } else {
        r.num = Reader::as_u64(v, path);
        r.den = 1;
    }
    if (r.num == 0 || r.den == 0)
        throw ConfigError(path, "must be positive");
    return r;
}

std::string to_string(const Rational& r) {
    return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::string_view to_string(InjectionPolicy p) {
    return p == InjectionPolicy::Fifo ? "fifo" : "priority_sorted";
}

std::string_view to_string(LoadKind k) {
    switch (k) {
    case LoadKind::None: return "none";
    case LoadKind::DeviceIrqPoisson: return "poisson";
    case LoadKind::DeviceIrqTrace: return "trace";
    case LoadKind::SecondVm: return "second_vm";
    }
    return "none";
}

std::string read_text(const fs::path& file, const std::string& field) {
    std::ifstream in(file);
    if (!in)
        throw ConfigError(field, "cannot open '" + file.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_json_text(const std::string& text, const std::string& field) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(field, std::string("invalid JSON: ") + e.what());
    }
}

} // namespace

fs::path default_profile_dir() {
    return fs::path(RTVSIM_PROFILE_DIR);
}

CostModel cost_from_json(const Json& j) {
    Reader r(j, "cost");
    CostModel c;
    c.name = r.string("name", "custom");
    c.vm_exit = r.ns_required("vm_exit_ns");
    c.vm_entry = r.ns_required("vm_entry_ns");
    c.world_switch = r.ns_required("world_switch_ns");
    c.vmm_dispatch = r.ns_required("vmm_dispatch_ns");
    c.timer_program = r.ns_required("timer_program_ns");
    c.injection = r.ns_required("injection_ns");
    c.guest_irq_entry = r.ns_required("guest_irq_entry_ns");
    c.guest_sched = r.ns_required("guest_sched_ns");
    c.ipc = r.ns_required("ipc_ns");
    r.find("description");
    r.finish();
    return c;
}

Json cost_to_json(const CostModel& c) {
    return Json{{"name", c.name},
                {"vm_exit_ns", c.vm_exit.ns},
                {"vm_entry_ns", c.vm_entry.ns},
                {"world_switch_ns", c.world_switch.ns},
                {"vmm_dispatch_ns", c.vmm_dispatch.ns},
                {"timer_program_ns", c.timer_program.ns},
                {"injection_ns", c.injection.ns},
                {"guest_irq_entry_ns", c.guest_irq_entry.ns},
                {"guest_sched_ns", c.guest_sched.ns},
                {"ipc_ns", c.ipc.ns}};
}

namespace {

fs::path find_profile(const std::string& name_or_path, const fs::path& base_dir) {
    const fs::path direct(name_or_path);
    if (direct.has_extension()) {
        if (direct.is_absolute() || base_dir.empty())
            return direct;
        if (fs::exists(base_dir / direct))
            return base_dir / direct;
        return direct;
    }
    std::vector<fs::path> dirs;
    if (!base_dir.empty()) {
        dirs.push_back(base_dir);
        dirs.push_back(base_dir / "profiles");
        dirs.push_back(base_dir.parent_path() / "profiles");
    }
    dirs.emplace_back("profiles");
    if (const char* env = std::getenv("RTVSIM_PROFILE_DIR"))
        dirs.emplace_back(env);
    dirs.push_back(default_profile_dir());
    for (const auto& d : dirs) {
        const auto p = d / (name_or_path + ".json");
        if (fs::exists(p))
            return p;
    }
    throw ConfigError("cost_profile", "profile '" + name_or_path + "' not found");
}

} // namespace

CostModel load_cost_profile(const std::string& name_or_path, const fs::path& base_dir) {
    const auto file = find_profile(name_or_path, base_dir);
    return cost_from_json(parse_json_text(read_text(file, "cost_profile"), "cost_profile"));
}

void apply_override(Json& j, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError(std::string(assignment), "override must be key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    Json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw ConfigError(key, "empty path component");
        if (!node->is_object()) {
            if (!node->is_null())
                throw ConfigError(key, "'" + part + "' is not inside an object");
            *node = Json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    *node = std::move(value);
}

Json resolve_scenario_json(Json j, const fs::path& base_dir, const std::vector<std::string>& overrides) {
    if (!j.is_object())
        throw ConfigError("<root>", "expected an object");
    // Overrides may retarget the profile, so apply them before and after inlining it.
    for (const auto& o : overrides)
        apply_override(j, o);
    if (j.contains("cost_profile") && !j["cost_profile"].is_null()) {
        if (!j["cost_profile"].is_string())
            throw ConfigError("cost_profile", "expected a profile name or path");
        Json cost = cost_to_json(load_cost_profile(j["cost_profile"].get<std::string>(), base_dir));
        if (j.contains("cost")) {
            if (!j["cost"].is_object())
                throw ConfigError("cost", "expected an object");
            for (const auto& [k, v] : j["cost"].items())
                cost[k] = v;
        }
        j["cost"] = cost;
        j.erase("cost_profile");
    }
    if (!j.contains("cost"))
        throw ConfigError("cost_profile", "missing (give cost_profile or cost)");
    return j;
}

Scenario scenario_from_json(const Json& resolved, const fs::path& base_dir) {
    Reader r(resolved, "");
    Scenario s;
    s.name = r.string("name", s.name);
    s.cost = cost_from_json(r.require("cost"));
    s.native = r.boolean("native", false);
    s.timer_granularity = r.ns("timer_granularity_ns", s.timer_granularity);
    s.duration = r.ns("duration_ns", s.duration);
    s.seed = r.u64("seed", s.seed);
    s.trace = r.boolean("trace", false);
    s.out_dir = r.string("out", "");

    if (const Json* v = r.find("vmm")) {
        Reader m(*v, "vmm");
        const auto policy = m.string("injection_policy", std::string(to_string(s.vmm.injection_policy)));
        if (policy == "fifo")
            s.vmm.injection_policy = InjectionPolicy::Fifo;
        else if (policy == "priority_sorted")
            s.vmm.injection_policy = InjectionPolicy::PrioritySorted;
        else
            throw ConfigError("vmm.injection_policy", "expected 'fifo' or 'priority_sorted'");
        s.vmm.holdback_enabled = m.boolean("holdback_enabled", false);
        s.vmm.kernel_suppress_enabled = m.boolean("kernel_suppress_enabled", false);
        s.vmm.tpr_mask_enabled = m.boolean("tpr_mask_enabled", false);
        s.vmm.deferred_timer_enabled = m.boolean("deferred_timer_enabled", false);
        if (const Json* t = m.find("soft_trigger_threshold_ns"))
            s.vmm.soft_trigger_threshold = Duration{Reader::as_u64(*t, "vmm.soft_trigger_threshold_ns")};
        if (const Json* f = m.find("emergency_factor"))
            s.vmm.emergency_factor = parse_rational(*f, "vmm.emergency_factor");
        s.vmm.rt_priority_floor = m.vector("rt_priority_floor", s.vmm.rt_priority_floor);
        s.vmm.timer_vector = m.vector("timer_vector", s.vmm.timer_vector);
        s.vmm.blocking_ipc = m.boolean("blocking_ipc", false);
        m.finish();
    }
    if (const Json* v = r.find("guest")) {
        Reader g(*v, "guest");
        s.guest.min_program_delta = g.ns("min_program_delta_ns", s.guest.min_program_delta);
        s.guest.cache_penalty = g.ns("cache_penalty_ns", s.guest.cache_penalty);
        g.finish();
    }
    if (const Json* v = r.find("cyclictest")) {
        Reader c(*v, "cyclictest");
        auto& ct = s.cyclictest;
        ct.interval = c.ns("interval_ns", ct.interval);
        if (const Json* l = c.find("loops"))
            ct.loops = Reader::as_u64(*l, "cyclictest.loops");
        const auto prio = c.u64("priority", static_cast<std::uint64_t>(ct.priority));
        if (prio > 99)
            throw ConfigError("cyclictest.priority", "must be in [2, 99]");
        ct.priority = static_cast<int>(prio);
        ct.body_cost = c.ns("body_cost_ns", ct.body_cost);
        ct.declared_wcet = c.ns("declared_wcet_ns", ct.declared_wcet);
        ct.first_wakeup = SimTime{c.u64("first_wakeup_ns", ct.first_wakeup.ns)};
        c.finish();
    }
    if (const Json* v = r.find("load")) {
        Reader l(*v, "load");
        auto& lp = s.load;
        const auto kind = l.string("kind", "none");
        if (kind == "none")
            lp.kind = LoadKind::None;
        else if (kind == "poisson")
            lp.kind = LoadKind::DeviceIrqPoisson;
        else if (kind == "trace")
            lp.kind = LoadKind::DeviceIrqTrace;
        else if (kind == "second_vm")
            lp.kind = LoadKind::SecondVm;
        else
            throw ConfigError("load.kind", "expected none, poisson, trace or second_vm");
        lp.rate_hz = l.number("rate_hz", lp.rate_hz);
        lp.vector = l.vector("vector", lp.vector);
        lp.work_per_irq = l.ns("work_per_irq_ns", lp.work_per_irq);
        lp.cache_penalty = l.ns("cache_penalty_ns", lp.cache_penalty);
        lp.external_service = l.ns("external_service_ns", lp.external_service);
        lp.file = l.string("file", "");
        if (const Json* a = l.find("arrivals")) {
            if (!a->is_array())
                throw ConfigError("load.arrivals", "expected [[time_ns, vector], ...]");
            for (std::size_t i = 0; i < a->size(); ++i) {
                const auto& e = (*a)[i];
                const std::string path = "load.arrivals[" + std::to_string(i) + "]";
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError(path, "expected [time_ns, vector]");
                const auto vec = Reader::as_u64(e[1], path);
                if (vec > 255)
                    throw ConfigError(path, "vector must be in [0, 255]");
                lp.arrivals.push_back(Arrival{SimTime{Reader::as_u64(e[0], path)}, IrqVector{static_cast<std::uint8_t>(vec)}});
            }
        }
        l.finish();
        if (lp.kind == LoadKind::DeviceIrqTrace && lp.arrivals.empty() && !lp.file.empty()) {
            fs::path f(lp.file);
            if (f.is_relative() && !base_dir.empty())
                f = base_dir / f;
            try {
                lp.arrivals = parse_arrivals(read_text(f, "load.file"));
            } catch (const ParseError& e) {
                throw ConfigError("load.file", e.what());
            }
        }
    }
    r.find("description");
    r.finish();

    if (s.duration.ns == 0)
        throw ConfigError("duration_ns", "must be positive");
    if (s.timer_granularity.ns == 0)
        throw ConfigError("timer_granularity_ns", "must be positive");
    if (!(s.vmm.rt_priority_floor < s.vmm.timer_vector))
        throw ConfigError("vmm.rt_priority_floor", "must be below vmm.timer_vector");
    if (s.load.kind != LoadKind::None && s.load.vector == s.vmm.timer_vector)
        throw ConfigError("load.vector", "collides with vmm.timer_vector");
    for (std::size_t i = 0; i < s.load.arrivals.size(); ++i)
        if (s.load.arrivals[i].vector == s.vmm.timer_vector)
            throw ConfigError("load.arrivals[" + std::to_string(i) + "]", "collides with vmm.timer_vector");
    validate(s.load, s.cyclictest);
    return s;
}

Scenario load_scenario(const fs::path& file, const std::vector<std::string>& overrides) {
    const Json raw = parse_json_text(read_text(file, "scenario"), "scenario");
    const auto base = file.parent_path();
    return scenario_from_json(resolve_scenario_json(raw, base, overrides), base);
}

Json scenario_to_json(const Scenario& s) {
    Json arrivals = Json::array();
    for (const auto& a : s.load.arrivals)
        arrivals.push_back(Json::array({a.time.ns, a.vector.value}));
    Json j;
    j["name"] = s.name;
    j["cost"] = cost_to_json(s.cost);
    j["native"] = s.native;
    j["timer_granularity_ns"] = s.timer_granularity.ns;
    j["duration_ns"] = s.duration.ns;
    j["seed"] = s.seed;
    j["trace"] = s.trace;
    j["out"] = s.out_dir;
    j["vmm"] = Json{{"injection_policy", to_string(s.vmm.injection_policy)},
                    {"holdback_enabled", s.vmm.holdback_enabled},
                    {"kernel_suppress_enabled", s.vmm.kernel_suppress_enabled},
                    {"tpr_mask_enabled", s.vmm.tpr_mask_enabled},
                    {"deferred_timer_enabled", s.vmm.deferred_timer_enabled},
                    {"soft_trigger_threshold_ns", s.vmm.soft_trigger_threshold ? Json(s.vmm.soft_trigger_threshold->ns) : Json()},
                    {"emergency_factor", to_string(s.vmm.emergency_factor)},
                    {"rt_priority_floor", s.vmm.rt_priority_floor.value},
                    {"timer_vector", s.vmm.timer_vector.value},
                    {"blocking_ipc", s.vmm.blocking_ipc}};
    j["guest"] = Json{{"min_program_delta_ns", s.guest.min_program_delta.ns}, {"cache_penalty_ns", s.guest.cache_penalty.ns}};
    j["cyclictest"] = Json{{"interval_ns", s.cyclictest.interval.ns},
                           {"loops", s.cyclictest.loops ? Json(*s.cyclictest.loops) : Json()},
                           {"priority", s.cyclictest.priority},
                           {"body_cost_ns", s.cyclictest.body_cost.ns},
                           {"declared_wcet_ns", s.cyclictest.declared_wcet.ns},
                           {"first_wakeup_ns", s.cyclictest.first_wakeup.ns}};
    j["load"] = Json{{"kind", to_string(s.load.kind)},
                     {"rate_hz", s.load.rate_hz},
                     {"vector", s.load.vector.value},
                     {"work_per_irq_ns", s.load.work_per_irq.ns},
                     {"cache_penalty_ns", s.load.cache_penalty.ns},
                     {"external_service_ns", s.load.external_service.ns},
                     {"file", s.load.file},
                     {"arrivals", arrivals}};
    return j;
}

std::string workload_fingerprint(const Scenario& s) {
    const Json full = scenario_to_json(s);
    Json load = full["load"];
    load.erase("file"); // the arrivals themselves are what matters
    const Json w{{"cyclictest", full["cyclictest"]}, {"load", load}, {"duration_ns", s.duration.ns}, {"seed", s.seed}};
    return fnv1a_hex(w.dump());
}

std::string config_fingerprint(const Scenario& s) {
    Json full = scenario_to_json(s);
    full.erase("name");
    full.erase("out");
    full.erase("trace");
    full["load"].erase("file");
    return fnv1a_hex(full.dump());
}

RunReport make_report(const Scenario& s, const RunResult& r, bool keep_raw) {
    RunReport rep;
    rep.scenario = s.name;
    rep.workload_fingerprint = workload_fingerprint(s);
    rep.config_fingerprint = config_fingerprint(s);
    rep.seed = s.seed;
    rep.histogram = r.histogram;
    rep.worst_ns = r.histogram.max_ns();
    rep.avg_ns = r.histogram.avg_ns();
    rep.min_ns = r.histogram.min_ns();
    rep.samples = r.histogram.count();
    if (keep_raw) {
        rep.raw.reserve(r.samples.size());
        for (const auto& x : r.samples)
            rep.raw.push_back(x.latency_ns());
    }
    return rep;
}

Json report_to_json(const RunReport& r) {
    const auto& h = r.histogram;
    Json bins = Json::array();
    for (auto c : h.bins())
        bins.push_back(c);
    Json j{{"scenario", r.scenario},
           {"workload_fingerprint", r.workload_fingerprint},
           {"config_fingerprint", r.config_fingerprint},
           {"seed", r.seed},
           {"worst_ns", r.worst_ns},
           {"avg_ns", r.avg_ns},
           {"min_ns", r.min_ns},
           {"samples", r.samples},
           {"histogram",
            {{"bin_width_ns", LatencyHistogram::kBinWidthNs},
             {"bins", bins},
             {"overflow", h.overflow()},
             {"count", h.count()},
             {"min_ns", h.min_ns()},
             {"max_ns", h.max_ns()},
             {"sum_ns", h.sum_ns()}}}};
    if (!r.raw.empty())
        j["raw_ns"] = r.raw;
    return j;
}

RunReport report_from_json(const Json& j) {
    Reader r(j, "report");
    RunReport rep;
    rep.scenario = r.string("scenario", "");
    rep.workload_fingerprint = r.string("workload_fingerprint", "");
    rep.config_fingerprint = r.string("config_fingerprint", "");
    rep.seed = r.u64("seed", 0);
    rep.worst_ns = r.u64("worst_ns", 0);
    rep.avg_ns = r.u64("avg_ns", 0);
    rep.min_ns = r.u64("min_ns", 0);
    rep.samples = r.u64("samples", 0);
    if (const Json* raw = r.find("raw_ns")) {
        if (!raw->is_array())
            throw ConfigError("report.raw_ns", "expected an array");
        for (const auto& v : *raw)
            rep.raw.push_back(Reader::as_u64(v, "report.raw_ns"));
    }
    const Json& hj = r.require("histogram");
    Reader hr(hj, "report.histogram");
    const Json& bins = hr.require("bins");
    if (!bins.is_array())
        throw ConfigError("report.histogram.bins", "expected an array");
    if (hr.u64("bin_width_ns", LatencyHistogram::kBinWidthNs) != LatencyHistogram::kBinWidthNs)
        throw ConfigError("report.histogram.bin_width_ns", "unsupported bin width");
    std::vector<std::uint64_t> counts;
    for (const auto& v : bins)
        counts.push_back(Reader::as_u64(v, "report.histogram.bins"));
    const auto overflow = hr.u64("overflow", 0);
    const auto count = hr.u64("count", 0);
    const auto min_ns = hr.u64("min_ns", 0);
    const auto max_ns = hr.u64("max_ns", 0);
    const auto sum_ns = hr.u64("sum_ns", 0);
    hr.finish();
    r.finish();
    try {
        rep.histogram = LatencyHistogram::restore(std::move(counts), overflow, count, min_ns, max_ns, sum_ns);
    } catch (const Error& e) {
        throw ConfigError("report.histogram", e.what());
    }
    return rep;
}

RunReport read_report(const fs::path& file) {
    return report_from_json(parse_json_text(read_text(file, "report"), "report"));
}

std::string histogram_csv(const LatencyHistogram& h) {
    std::ostringstream os;
    h.write_csv(os);
    return os.str();
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
    std::string out = "time_ns,seq,kind,detail\n";
    for (const auto& r : trace) {
        out += format_trace_line(r);
        out += '\n';
    }
    return out;
}

void write_file_atomic(const fs::path& file, std::string_view content) {
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, file);
}

void write_run_outputs(const fs::path& dir, const RunReport& report, const RunResult& result) {
    write_file_atomic(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file_atomic(dir / "histogram.csv", histogram_csv(report.histogram));
    if (!result.trace.empty())
        write_file_atomic(dir / "trace.csv", trace_csv(result.trace));
}

} // namespace rtvsim
