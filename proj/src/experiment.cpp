#include "flash/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "flash/rng.hpp"
#include "flash/workload.hpp"

namespace flash {

namespace {

// Per-repetition sub-seed streams, so funding, fees and the trace draw
// from independent sequences even though they share one seed.
constexpr std::uint64_t kFundStream = 0x66756e64;
constexpr std::uint64_t kFeeStream = 0x66656573;
constexpr std::uint64_t kTraceStream = 0x74726163;
constexpr std::uint64_t kSampleStream = 0x73616d70;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return Rng::derive(seed, stream).next_u64();
}

Topology build_topology(const ExperimentSpec& spec, std::uint64_t seed) {
    Topology topo;
    if (spec.topology.kind == TopologySource::Kind::Generate) {
        topo = watts_strogatz(spec.topology.nodes, spec.topology.ring_degree,
                              spec.topology.beta, seed);
        fund_uniform(topo, spec.fund_low, spec.fund_high, sub_seed(seed, kFundStream));
        assign_fees(topo, spec.fees, sub_seed(seed, kFeeStream));
    } else {
        topo = load_topology(spec.topology.path);
    }
    if (spec.capacity_scale.num != spec.capacity_scale.den)
        scale_capacities(topo, spec.capacity_scale);
    return topo;
}

std::vector<Payment> build_payments(const ExperimentSpec& spec, const Topology& topo,
                                    std::uint64_t seed) {
    std::size_t trace_size = std::max<std::size_t>(spec.txn_count * 2, 256);
    auto trace = synthetic_trace(trace_size, sub_seed(seed, kTraceStream));
    return sample_payments(trace, spec.txn_count, topo, Pairing::TracePairsMapped,
                           sub_seed(seed, kSampleStream));
}

// Fixed-point decimal with trailing zeros trimmed, so CSVs are
// deterministic and reruns produce identical bytes.
std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    std::string text(buf);
    std::size_t dot = text.find('.');
    std::size_t last = text.find_last_not_of('0');
    if (last == dot) last -= 1;
    text.erase(last + 1);
    if (text == "-0") text = "0";
    return text;
}

std::vector<std::string> column_names() {
    static const std::vector<std::string> names = [] {
        MetricsReport blank;
        std::vector<std::string> out;
        for (const auto& [name, value] : report_columns(blank)) out.push_back(name);
        return out;
    }();
    return names;
}

void append_report(std::ostringstream& row, const MetricsReport& report) {
    for (const auto& [name, value] : report_columns(report)) row << ',' << format_metric(value);
}

ColumnStats stats_of(const std::string& name, const std::vector<double>& samples) {
    ColumnStats stats;
    stats.name = name;
    stats.min = *std::min_element(samples.begin(), samples.end());
    stats.max = *std::max_element(samples.begin(), samples.end());
    double sum = 0.0;
    for (double s : samples) sum += s;
    stats.mean = sum / static_cast<double>(samples.size());
    return stats;
}

std::size_t axis_count_value(const std::string& text, const char* what) {
    std::size_t pos = 0;
    unsigned long long parsed = 0;
    try {
        parsed = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw InvalidParameter(std::string(what) + " value '" + text + "' is not a count");
    }
    if (pos != text.size())
        throw InvalidParameter(std::string(what) + " value '" + text + "' is not a count");
    return static_cast<std::size_t>(parsed);
}

double axis_fraction_value(const std::string& text) {
    std::size_t pos = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw InvalidParameter("threshold value '" + text + "' is not a number");
    }
    if (pos != text.size())
        throw InvalidParameter("threshold value '" + text + "' is not a number");
    return parsed;
}

ExperimentSpec apply_axis(const ExperimentSpec& base, SweepAxis axis,
                          const std::string& value) {
    ExperimentSpec spec = base;
    switch (axis) {
        case SweepAxis::CapacityScale:
            spec.capacity_scale = parse_decimal_ratio(value);
            break;
        case SweepAxis::TxnCount:
            spec.txn_count = axis_count_value(value, "txn_count");
            break;
        case SweepAxis::ThresholdQ:
            spec.config.mice_fraction = axis_fraction_value(value);
            break;
        case SweepAxis::M:
            spec.config.m = axis_count_value(value, "m");
            break;
        case SweepAxis::K:
            spec.config.k = axis_count_value(value, "k");
            break;
    }
    return spec;
}

}  // namespace

void validate_spec(const ExperimentSpec& spec) {
    if (spec.repetitions < 1) throw InvalidParameter("repetitions must be at least 1");
    if (spec.txn_count < 1) throw InvalidParameter("txn_count must be at least 1");
    if (spec.overlap < 1) throw InvalidParameter("overlap must be at least 1");
    if (spec.topology.kind == TopologySource::Kind::Generate) {
        if (spec.topology.nodes < 3) throw InvalidParameter("topology needs at least 3 nodes");
        if (spec.topology.ring_degree < 2 || spec.topology.ring_degree % 2 != 0)
            throw InvalidParameter("ring degree must be even and at least 2");
        if (spec.topology.beta < 0.0 || spec.topology.beta > 1.0)
            throw InvalidParameter("rewiring beta must lie in [0,1]");
        if (spec.fund_low < 1 || spec.fund_high <= spec.fund_low)
            throw InvalidParameter("funding interval must satisfy 1 <= low < high");
    } else if (spec.topology.path.empty()) {
        throw InvalidParameter("file topology needs a path");
    }
    if (spec.capacity_scale.num < 1 || spec.capacity_scale.den < 1)
        throw InvalidParameter("capacity scale must be positive");
    validate_config(spec.config);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    validate_spec(spec);
    ExperimentResult result;
    std::vector<MetricsReport> reports;
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
        std::uint64_t seed = spec.seed_base + rep;
        Topology topo = build_topology(spec, seed);
        auto payments = build_payments(spec, topo, seed);
        WorkloadOptions options;
        options.router = spec.router;
        options.config = spec.config;
        options.config.seed = seed;
        options.overlap = spec.overlap;
        WorkloadRun run = run_workload(topo, payments, options);
        RunRow row;
        row.rep = rep;
        row.seed = seed;
        row.report = compute_metrics(payments, run);
        reports.push_back(row.report);
        result.runs.push_back(std::move(row));
    }
    result.stats = summarize(reports);
    return result;
}

std::vector<ColumnStats> summarize(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw InvalidParameter("nothing to summarize");
    std::vector<std::vector<double>> samples(report_columns(reports.front()).size());
    for (const MetricsReport& report : reports) {
        auto columns = report_columns(report);
        for (std::size_t c = 0; c < columns.size(); ++c)
            samples[c].push_back(columns[c].second);
    }
    std::vector<ColumnStats> stats;
    auto names = column_names();
    for (std::size_t c = 0; c < names.size(); ++c)
        stats.push_back(stats_of(names[c], samples[c]));
    return stats;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "capacity_scale") return SweepAxis::CapacityScale;
    if (name == "txn_count") return SweepAxis::TxnCount;
    if (name == "threshold_q") return SweepAxis::ThresholdQ;
    if (name == "m") return SweepAxis::M;
    if (name == "k") return SweepAxis::K;
    throw InvalidParameter("unknown sweep axis: " + name);
}

std::string sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::CapacityScale: return "capacity_scale";
        case SweepAxis::TxnCount: return "txn_count";
        case SweepAxis::ThresholdQ: return "threshold_q";
        case SweepAxis::M: return "m";
        case SweepAxis::K: return "k";
    }
    throw InvalidParameter("unknown sweep axis");
}

SweepResult sweep(const ExperimentSpec& spec, SweepAxis axis,
                  const std::vector<std::string>& values,
                  const std::vector<RouterKind>& routers) {
    if (values.empty()) throw InvalidParameter("sweep needs at least one axis value");
    if (routers.empty()) throw InvalidParameter("sweep needs at least one router");

    // validate every cell before running any
    for (const std::string& value : values) {
        ExperimentSpec cell = apply_axis(spec, axis, value);
        for (RouterKind router : routers) {
            cell.router = router;
            validate_spec(cell);
        }
    }

    SweepResult result;
    result.axis = axis;
    result.values = values;
    result.routers = routers;
    for (const std::string& value : values) {
        ExperimentSpec cell = apply_axis(spec, axis, value);
        for (RouterKind router : routers) {
            cell.router = router;
            ExperimentResult runs = run_experiment(cell);
            for (const RunRow& row : runs.runs) {
                SweepCell out;
                out.value = value;
                out.router = router;
                out.rep = row.rep;
                out.seed = row.seed;
                out.report = row.report;
                result.cells.push_back(std::move(out));
            }
        }
    }
    return result;
}

std::string runs_csv(const ExperimentSpec& spec, const ExperimentResult& result) {
    std::ostringstream out;
    out << "router,rep,seed";
    for (const std::string& name : column_names()) out << ',' << name;
    out << '\n';
    for (const RunRow& row : result.runs) {
        std::ostringstream line;
        line << router_kind_name(spec.router) << ',' << row.rep << ',' << row.seed;
        append_report(line, row.report);
        out << line.str() << '\n';
    }
    return out.str();
}

std::string experiment_summary_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "metric,min,mean,max\n";
    for (const ColumnStats& stats : result.stats)
        out << stats.name << ',' << format_metric(stats.min) << ',' << format_metric(stats.mean)
            << ',' << format_metric(stats.max) << '\n';
    return out.str();
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "axis,value,router,rep,seed";
    for (const std::string& name : column_names()) out << ',' << name;
    out << '\n';
    for (const SweepCell& cell : result.cells) {
        std::ostringstream line;
        line << sweep_axis_name(result.axis) << ',' << cell.value << ','
             << router_kind_name(cell.router) << ',' << cell.rep << ',' << cell.seed;
        append_report(line, cell.report);
        out << line.str() << '\n';
    }
    return out.str();
}

std::string sweep_summary_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "axis,value,router,metric,min,mean,max\n";
    const std::string axis = sweep_axis_name(result.axis);

    // group cells per (value, router), preserving sweep order
    for (const std::string& value : result.values) {
        // SP's per-rep delay means for normalization within this value
        std::map<std::size_t, double> sp_ticks;
        for (const SweepCell& cell : result.cells)
            if (cell.value == value && cell.router == RouterKind::Sp &&
                cell.report.mean_settle_ticks > 0.0)
                sp_ticks[cell.rep] = cell.report.mean_settle_ticks;

        for (RouterKind router : result.routers) {
            std::vector<MetricsReport> reports;
            for (const SweepCell& cell : result.cells)
                if (cell.value == value && cell.router == router)
                    reports.push_back(cell.report);
            if (reports.empty()) continue;
            for (const ColumnStats& stats : summarize(reports))
                out << axis << ',' << value << ',' << router_kind_name(router) << ','
                    << stats.name << ',' << format_metric(stats.min) << ','
                    << format_metric(stats.mean) << ',' << format_metric(stats.max) << '\n';

            if (router == RouterKind::Sp || sp_ticks.empty()) continue;
            std::vector<double> ratios;
            for (const SweepCell& cell : result.cells) {
                if (cell.value != value || cell.router != router) continue;
                auto sp = sp_ticks.find(cell.rep);
                if (sp == sp_ticks.end() || cell.report.mean_settle_ticks <= 0.0) continue;
                ratios.push_back(cell.report.mean_settle_ticks / sp->second);
            }
            if (ratios.empty()) continue;
            ColumnStats delay = stats_of("delay_vs_sp", ratios);
            out << axis << ',' << value << ',' << router_kind_name(router) << ','
                << delay.name << ',' << format_metric(delay.min) << ','
                << format_metric(delay.mean) << ',' << format_metric(delay.max) << '\n';
        }
    }
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace flash
