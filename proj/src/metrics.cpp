#include "rtvsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "rtvsim/error.hpp"

namespace rtvsim {

void LatencyHistogram::record(std::uint64_t latency_ns) {
    const std::uint64_t k = latency_ns / kBinWidthNs;
    if (k < bins_.size())
        ++bins_[k];
    else
        ++overflow_;
    if (count_ == 0 || latency_ns < min_)
        min_ = latency_ns;
    max_ = std::max(max_, latency_ns);
    if (sum_ > UINT64_MAX - latency_ns)
        throw OverflowError("latency sum overflow");
    sum_ += latency_ns;
    ++count_;
}

LatencyHistogram LatencyHistogram::from_samples(std::span<const std::uint64_t> latencies, std::size_t bins) {
    LatencyHistogram h(bins);
    for (auto l : latencies)
        h.record(l);
    return h;
}

LatencyHistogram LatencyHistogram::restore(std::vector<std::uint64_t> bins, std::uint64_t overflow, std::uint64_t count,
                                           std::uint64_t min_ns, std::uint64_t max_ns, std::uint64_t sum_ns) {
    std::uint64_t total = overflow;
    for (auto c : bins)
        total += c;
    if (total != count)
        throw Error("histogram: bins and overflow do not add up to count");
    if (count != 0 && min_ns > max_ns)
        throw Error("histogram: min above max");
    LatencyHistogram h(0);
    h.bins_ = std::move(bins);
    h.overflow_ = overflow;
    h.count_ = count;
    h.min_ = count ? min_ns : 0;
    h.max_ = max_ns;
    h.sum_ = sum_ns;
    return h;
}

void LatencyHistogram::write_csv(std::ostream& os) const {
    os << "bin_us,count\n";
    for (std::size_t k = 0; k < bins_.size(); ++k)
        os << k << ',' << bins_[k] << '\n';
    os << "overflow," << overflow_ << '\n';
}

std::uint64_t RunReport::percentile(double p) const {
    if (raw.empty())
        throw Error("percentile requires retained raw samples");
    std::vector<std::uint64_t> sorted = raw;
    std::sort(sorted.begin(), sorted.end());
    const double rank = std::ceil(p / 100.0 * static_cast<double>(sorted.size()));
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
    return sorted[idx];
}

Comparison compare(const RunReport& a, const RunReport& b, bool force) {
    if (!force && a.workload_fingerprint != b.workload_fingerprint)
        throw FingerprintMismatch("workload fingerprints differ: " + a.workload_fingerprint + " vs " + b.workload_fingerprint);
    Comparison c;
    c.worst_ratio = a.worst_ns == 0 ? (b.worst_ns == 0 ? 1.0 : INFINITY)
                                    : static_cast<double>(b.worst_ns) / static_cast<double>(a.worst_ns);
    c.worst_delta_ns = static_cast<std::int64_t>(b.worst_ns) - static_cast<std::int64_t>(a.worst_ns);
    c.avg_delta_ns = static_cast<std::int64_t>(b.avg_ns) - static_cast<std::int64_t>(a.avg_ns);
    return c;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace rtvsim
