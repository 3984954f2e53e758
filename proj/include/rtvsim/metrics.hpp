#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rtvsim/time.hpp"

namespace rtvsim {

/// One cyclictest measurement.
struct LatencySample {
    SimTime expected_wakeup;
    SimTime actual_start;
    std::uint64_t latency_ns() const { return (actual_start - expected_wakeup).ns; }
};

/// 1us-binned latency distribution. Bin k holds k*1us <= latency < (k+1)*1us.
class LatencyHistogram {
public:
    static constexpr std::uint64_t kBinWidthNs = 1000;
    static constexpr std::size_t kDefaultBins = 1000;

    explicit LatencyHistogram(std::size_t bins = kDefaultBins) : bins_(bins, 0) {}

    void record(std::uint64_t latency_ns);

    std::size_t bin_count() const { return bins_.size(); }
    std::uint64_t bin(std::size_t k) const { return bins_.at(k); }
    std::span<const std::uint64_t> bins() const { return bins_; }
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t count() const { return count_; }
    std::uint64_t min_ns() const { return count_ ? min_ : 0; }
    std::uint64_t max_ns() const { return max_; }
    std::uint64_t sum_ns() const { return sum_; }
    /// Integer mean, rounded down; 0 when empty.
    std::uint64_t avg_ns() const { return count_ ? sum_ / count_ : 0; }

    static LatencyHistogram from_samples(std::span<const std::uint64_t> latencies, std::size_t bins = kDefaultBins);
    /// Rebuilds a serialized histogram; throws Error if the parts are inconsistent.
    static LatencyHistogram restore(std::vector<std::uint64_t> bins, std::uint64_t overflow, std::uint64_t count,
                                    std::uint64_t min_ns, std::uint64_t max_ns, std::uint64_t sum_ns);

    /// `bin_us,count` for every bin, then `overflow,count`.
    void write_csv(std::ostream& os) const;

    friend bool operator==(const LatencyHistogram&, const LatencyHistogram&) = default;

private:
    std::vector<std::uint64_t> bins_;
    std::uint64_t overflow_ = 0;
    std::uint64_t count_ = 0;
    std::uint64_t min_ = 0;
    std::uint64_t max_ = 0;
    std::uint64_t sum_ = 0;
};

struct RunReport {
    std::string scenario;
    std::string workload_fingerprint;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    LatencyHistogram histogram;
    std::uint64_t worst_ns = 0;
    std::uint64_t avg_ns = 0;
    std::uint64_t min_ns = 0;
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> raw; // empty unless retention was requested

    /// Exact percentile (nearest-rank) over retained raw samples; throws when none were kept.
    std::uint64_t percentile(double p) const;
};

struct Comparison {
    double worst_ratio = 1.0; // b / a
    std::int64_t worst_delta_ns = 0; // b - a
    std::int64_t avg_delta_ns = 0;
};

/// Throws FingerprintMismatch when the workloads differ, unless `force`.
Comparison compare(const RunReport& a, const RunReport& b, bool force = false);

/// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(std::string_view data);

} // namespace rtvsim
