#ifndef FLASH_METRICS_HPP
#define FLASH_METRICS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flash/simnet.hpp"
#include "flash/workload.hpp"

namespace flash {

// Counters for one payment class (or for all payments together). The
// ratio is derived from the two integer counters, so
// success_ratio() * attempts == successes holds exactly.
struct ClassMetrics {
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    Amount success_volume = 0;
    Amount total_volume = 0;
    std::uint64_t probe_messages = 0;
    std::uint64_t total_messages = 0;

    double success_ratio() const {
        return attempts == 0 ? 0.0
                             : static_cast<double>(successes) / static_cast<double>(attempts);
    }

    bool operator==(const ClassMetrics&) const = default;
};

// Aggregate view of one workload run. Class splits follow the threshold
// classification recorded by the run (independent of the m=0 pipeline
// override). fee_fraction is volume-weighted: total fees over total
// delivered value; mean_fee_fraction is the unweighted mean of each
// successful payment's own fee/delivered. Settlement tick means cover
// successful payments only and are zero when nothing succeeded.
struct MetricsReport {
    ClassMetrics all;
    ClassMetrics elephant;
    ClassMetrics mice;
    double fee_fraction = 0.0;
    double mean_fee_fraction = 0.0;
    double mean_settle_ticks = 0.0;
    double mice_settle_ticks = 0.0;
    std::uint64_t final_tick = 0;

    bool operator==(const MetricsReport&) const = default;
};

// Requires one outcome, class and settle-tick entry per payment.
MetricsReport compute_metrics(const std::vector<Payment>& payments, const WorkloadRun& run);

// Fixed (name, value) sequence used by every CSV writer; the order is
// part of the file format. Counters are exact in double up to 2^53.
std::vector<std::pair<std::string, double>> report_columns(const MetricsReport& report);

}  // namespace flash

#endif  // FLASH_METRICS_HPP
