#include "flash/metrics.hpp"

namespace flash {

MetricsReport compute_metrics(const std::vector<Payment>& payments, const WorkloadRun& run) {
    const std::size_t n = payments.size();
    if (run.outcomes.size() != n || run.classes.size() != n || run.settle_ticks.size() != n)
        throw InvalidParameter("metrics need one outcome per payment");

    MetricsReport report;
    Amount fees_total = 0;
    double fraction_sum = 0.0;
    std::uint64_t ticks_sum = 0;
    std::uint64_t mice_ticks_sum = 0;
    std::uint64_t settled = 0;
    std::uint64_t mice_settled = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const RoutingOutcome& out = run.outcomes[i];
        const bool is_mice = run.classes[i] == SizeClass::Mice;
        ClassMetrics& split = is_mice ? report.mice : report.elephant;
        for (ClassMetrics* m : {&report.all, &split}) {
            m->attempts += 1;
            m->total_volume += payments[i].demand;
            m->probe_messages += out.probe_messages;
            m->total_messages += out.messages_sent;
            if (out.ok()) {
                m->successes += 1;
                m->success_volume += out.delivered;
            }
        }
        if (out.ok()) {
            fees_total += out.fee_paid;
            fraction_sum += static_cast<double>(out.fee_paid) /
                            static_cast<double>(out.delivered);
            ticks_sum += run.settle_ticks[i];
            ++settled;
            if (is_mice) {
                mice_ticks_sum += run.settle_ticks[i];
                ++mice_settled;
            }
        }
    }

    if (report.all.success_volume > 0)
        report.fee_fraction = static_cast<double>(fees_total) /
                              static_cast<double>(report.all.success_volume);
    if (settled > 0) {
        report.mean_fee_fraction = fraction_sum / static_cast<double>(settled);
        report.mean_settle_ticks =
            static_cast<double>(ticks_sum) / static_cast<double>(settled);
    }
    if (mice_settled > 0)
        report.mice_settle_ticks =
            static_cast<double>(mice_ticks_sum) / static_cast<double>(mice_settled);
    report.final_tick = run.final_tick;
    return report;
}

std::vector<std::pair<std::string, double>> report_columns(const MetricsReport& report) {
    std::vector<std::pair<std::string, double>> columns;
    auto emit_class = [&columns](const std::string& prefix, const ClassMetrics& m) {
        columns.emplace_back(prefix + "attempts", static_cast<double>(m.attempts));
        columns.emplace_back(prefix + "successes", static_cast<double>(m.successes));
        columns.emplace_back(prefix + "success_ratio", m.success_ratio());
        columns.emplace_back(prefix + "success_volume", static_cast<double>(m.success_volume));
        columns.emplace_back(prefix + "total_volume", static_cast<double>(m.total_volume));
        columns.emplace_back(prefix + "probe_messages", static_cast<double>(m.probe_messages));
        columns.emplace_back(prefix + "total_messages", static_cast<double>(m.total_messages));
    };
    emit_class("", report.all);
    emit_class("elephant_", report.elephant);
    emit_class("mice_", report.mice);
    columns.emplace_back("fee_fraction", report.fee_fraction);
    columns.emplace_back("mean_fee_fraction", report.mean_fee_fraction);
    columns.emplace_back("mean_settle_ticks", report.mean_settle_ticks);
    columns.emplace_back("mice_settle_ticks", report.mice_settle_ticks);
    columns.emplace_back("final_tick", static_cast<double>(report.final_tick));
    return columns;
}

}  // namespace flash
