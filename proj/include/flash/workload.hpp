#ifndef FLASH_WORKLOAD_HPP
#define FLASH_WORKLOAD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "flash/topology.hpp"
#include "flash/types.hpp"

namespace flash {

struct TraceRecord {
    std::string sender;
    std::string receiver;
    Amount volume = 0;        // > 0
    std::int64_t timestamp = 0;  // seconds since epoch
};

struct Payment {
    std::uint64_t id = 0;
    NodeId sender = 0;
    NodeId receiver = 0;
    Amount demand = 0;  // > 0
    std::uint64_t seq = 0;  // arrival index
};

enum class SizeClass { Elephant, Mice };

// CSV with a required `sender,receiver,volume,timestamp` header.
std::vector<TraceRecord> load_trace(const std::string& path);
void save_trace(const std::vector<TraceRecord>& records, const std::string& path);

// Smallest value v such that at least ceil(q*N) volumes are <= v
// (nearest-rank percentile). Requires 0 < q < 1 and a nonempty input;
// the q=0 / q=1 sweep endpoints are resolved by the caller (all
// elephants / all mice) without a percentile.
Amount percentile_threshold(const std::vector<Amount>& volumes, double q);

inline SizeClass classify(Amount demand, Amount threshold) {
    return demand <= threshold ? SizeClass::Mice : SizeClass::Elephant;
}

enum class Pairing { TracePairsMapped, RandomPairs };

// Draws n payments from the trace. Volumes are sampled with replacement.
// TracePairsMapped keeps each record's endpoint identities, mapped onto
// topology nodes by a seeded stable injection, so recurring trace pairs
// stay recurring. RandomPairs draws endpoints uniformly. Either way the
// sender differs from the receiver and a path between them exists.
std::vector<Payment> sample_payments(const std::vector<TraceRecord>& records,
                                     std::size_t n, const Topology& topology,
                                     Pairing pairing, std::uint64_t seed);

struct CdfRow {
    Amount volume = 0;
    double payment_fraction = 0.0;  // cumulative, ends at 1
    double volume_fraction = 0.0;   // cumulative, ends at 1
};

// One row per record, sorted ascending by volume.
std::vector<CdfRow> size_cdf(const std::vector<TraceRecord>& records);

struct WindowStats {
    std::int64_t window_start = 0;  // seconds, multiple of the window length
    std::size_t transactions = 0;
    double recurring_fraction = 0.0;
    double top5_share = 0.0;  // mean over senders with recurring traffic
};

// Calendar-aligned windows (default 24h). A transaction is recurring when
// its (sender, receiver) pair already appeared earlier in the same window;
// with ordered=false the pair is treated as unordered.
std::vector<WindowStats> recurrence_stats(std::vector<TraceRecord> records,
                                          std::int64_t window_seconds = 86'400,
                                          bool ordered = true);

struct SyntheticConfig {
    std::size_t identities = 200;       // distinct endpoint ids
    double recur_probability = 0.86;    // receiver re-drawn from history
    std::int64_t interval_seconds = 30; // timestamp spacing
    Amount max_volume = 10'000'000'000; // tail cap
};

// Heavy-tailed synthetic trace standing in for unavailable real data:
// volumes follow a Pareto law fitted so the top decile of payments
// carries ~94.5% of total volume and the median lands at 480 units,
// endpoint pairs recur with preferential attachment.
std::vector<TraceRecord> synthetic_trace(std::size_t count, std::uint64_t seed,
                                         const SyntheticConfig& config = {});

}  // namespace flash

#endif  // FLASH_WORKLOAD_HPP
