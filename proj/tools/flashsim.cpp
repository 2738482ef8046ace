#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flash/experiment.hpp"
#include "flash/oraclecheck.hpp"
#include "flash/workload.hpp"

namespace {

using namespace flash;

TopologySource parse_topology(const std::string& text) {
    TopologySource source;
    if (text.rfind("file:", 0) == 0) {
        source.kind = TopologySource::Kind::File;
        source.path = text.substr(5);
        if (source.path.empty()) throw InvalidParameter("file topology needs a path");
        return source;
    }
    if (text.rfind("ws:", 0) != 0)
        throw InvalidParameter("topology must be ws:<nodes>,<degree>,<beta> or file:<path>");
    std::string body = text.substr(3);
    unsigned long nodes = 0, degree = 0;
    double beta = 0.0;
    char tail = 0;
    if (std::sscanf(body.c_str(), "%lu,%lu,%lf%c", &nodes, &degree, &beta, &tail) != 3)
        throw InvalidParameter("topology must be ws:<nodes>,<degree>,<beta> or file:<path>");
    source.kind = TopologySource::Kind::Generate;
    source.nodes = nodes;
    source.ring_degree = degree;
    source.beta = beta;
    return source;
}

std::pair<Amount, Amount> parse_fund(const std::string& text) {
    long long low = 0, high = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lld,%lld%c", &low, &high, &tail) != 2)
        throw InvalidParameter("fund interval must be <low>,<high>");
    return {low, high};
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return parts;
}

struct CommonFlags {
    std::string topology = "ws:50,8,0.3";
    std::string fund = "100000,150000";
    std::string scale = "1";
    std::size_t txns = 10'000;
    std::string router = "flash";
    std::size_t k = 20;
    std::size_t m = 4;
    double mice_q = 0.9;
    std::size_t reps = 5;
    std::uint64_t seed = 1;
    std::size_t overlap = 1;
    std::string out_dir = "results";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--topology", flags.topology,
                    "ws:<nodes>,<degree>,<beta> or file:<path>");
    cmd->add_option("--fund", flags.fund, "channel funding interval <low>,<high>");
    cmd->add_option("--scale", flags.scale, "capacity scale factor (decimal)");
    cmd->add_option("--txns", flags.txns, "payments per repetition");
    cmd->add_option("--router", flags.router, "flash | flash-seq | sp | spider");
    cmd->add_option("--k", flags.k, "max probed paths for elephant payments");
    cmd->add_option("--m", flags.m, "cached paths for mice payments (0 = all elephants)");
    cmd->add_option("--mice-q", flags.mice_q, "size percentile splitting mice from elephants");
    cmd->add_option("--reps", flags.reps, "repetitions, seeded seed+0..reps-1");
    cmd->add_option("--seed", flags.seed, "base seed");
    cmd->add_option("--overlap", flags.overlap, "payments in flight at once");
    cmd->add_option("--out", flags.out_dir, "output directory for CSV files");
}

ExperimentSpec build_spec(const CommonFlags& flags) {
    ExperimentSpec spec;
    spec.topology = parse_topology(flags.topology);
    auto [low, high] = parse_fund(flags.fund);
    spec.fund_low = low;
    spec.fund_high = high;
    spec.capacity_scale = parse_decimal_ratio(flags.scale);
    spec.txn_count = flags.txns;
    spec.router = parse_router_kind(flags.router);
    spec.config.k = flags.k;
    spec.config.m = flags.m;
    spec.config.mice_fraction = flags.mice_q;
    spec.repetitions = flags.reps;
    spec.seed_base = flags.seed;
    spec.overlap = flags.overlap;
    return spec;
}

int do_run(const CommonFlags& flags) {
    ExperimentSpec spec = build_spec(flags);
    ExperimentResult result = run_experiment(spec);

    namespace fs = std::filesystem;
    fs::path dir(flags.out_dir);
    write_file_atomic((dir / "runs.csv").string(), runs_csv(spec, result));
    write_file_atomic((dir / "summary.csv").string(), experiment_summary_csv(result));

    for (const ColumnStats& stats : result.stats)
        if (stats.name == "success_ratio" || stats.name == "success_volume" ||
            stats.name == "probe_messages")
            std::printf("%-16s min %.6g  mean %.6g  max %.6g\n", stats.name.c_str(),
                        stats.min, stats.mean, stats.max);
    std::printf("wrote %s and %s\n", (dir / "runs.csv").c_str(),
                (dir / "summary.csv").c_str());
    return 0;
}

int do_sweep(const CommonFlags& flags, const std::string& axis_name,
             const std::string& values_text, const std::string& routers_text) {
    ExperimentSpec spec = build_spec(flags);
    SweepAxis axis = parse_sweep_axis(axis_name);
    std::vector<std::string> values = split_list(values_text);
    std::vector<RouterKind> routers;
    for (const std::string& name : split_list(routers_text))
        routers.push_back(parse_router_kind(name));

    SweepResult result = sweep(spec, axis, values, routers);

    namespace fs = std::filesystem;
    fs::path dir(flags.out_dir);
    write_file_atomic((dir / "sweep.csv").string(), sweep_csv(result));
    write_file_atomic((dir / "sweep_summary.csv").string(), sweep_summary_csv(result));
    std::printf("%zu cells; wrote %s and %s\n", result.cells.size(),
                (dir / "sweep.csv").c_str(), (dir / "sweep_summary.csv").c_str());
    return 0;
}

int do_stats(const std::string& trace_path) {
    auto records = load_trace(trace_path);
    if (records.empty()) {
        std::printf("empty trace\n");
        return 0;
    }
    auto cdf = size_cdf(records);
    Amount total_volume = 0;
    for (const auto& r : records) total_volume += r.volume;

    auto volume_at = [&cdf](double payment_fraction) {
        for (const CdfRow& row : cdf)
            if (row.payment_fraction >= payment_fraction) return row.volume;
        return cdf.back().volume;
    };
    double top_decile_share = 0.0;
    for (const CdfRow& row : cdf)
        if (row.payment_fraction >= 0.9) {
            top_decile_share = 1.0 - row.volume_fraction;
            break;
        }

    std::printf("records            %zu\n", records.size());
    std::printf("total volume       %lld\n", static_cast<long long>(total_volume));
    std::printf("volume p50         %lld\n", static_cast<long long>(volume_at(0.5)));
    std::printf("volume p90         %lld\n", static_cast<long long>(volume_at(0.9)));
    std::printf("volume p99         %lld\n", static_cast<long long>(volume_at(0.99)));
    std::printf("volume max         %lld\n", static_cast<long long>(cdf.back().volume));
    std::printf("top decile share   %.4f\n", top_decile_share);

    auto windows = recurrence_stats(records);
    if (!windows.empty()) {
        double recurring = 0.0, top5 = 0.0;
        for (const WindowStats& w : windows) {
            recurring += w.recurring_fraction;
            top5 += w.top5_share;
        }
        std::printf("windows            %zu\n", windows.size());
        std::printf("recurring fraction %.4f\n", recurring / windows.size());
        std::printf("top5 sender share  %.4f\n", top5 / windows.size());
    }
    return 0;
}

int do_oracle(const std::string& which, std::size_t cases, std::uint64_t seed) {
    OracleCheckResult result;
    if (which == "maxflow")
        result = check_maxflow_oracle(cases ? cases : 200, seed);
    else if (which == "lp")
        result = check_split_oracle(cases ? cases : 100, seed);
    else if (which == "yen")
        result = check_yen_oracle(cases ? cases : 100, seed);
    else
        throw InvalidParameter("oracle check must be maxflow, lp or yen");

    std::printf("%s: %zu cases, %zu failures\n", which.c_str(), result.cases,
                result.failures);
    if (!result.ok()) {
        std::printf("first failure: %s\n", result.first_failure.c_str());
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"payment-channel network routing experiments"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment and write CSVs");
    add_common(run_cmd, run_flags);

    CommonFlags sweep_flags;
    std::string axis, values, routers = "flash,sp,spider";
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one axis across routers");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--axis", axis, "capacity_scale | txn_count | threshold_q | m | k")
        ->required();
    sweep_cmd->add_option("--values", values, "comma-separated axis values")->required();
    sweep_cmd->add_option("--routers", routers, "comma-separated router list");

    std::string trace_path;
    CLI::App* stats_cmd = app.add_subcommand("stats", "summarize a payment trace");
    stats_cmd->add_option("--trace", trace_path, "trace CSV path")->required();

    std::string check;
    std::size_t oracle_cases = 0;
    std::uint64_t oracle_seed = 1;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "run a brute-force reference suite");
    oracle_cmd->add_option("--check", check, "maxflow | lp | yen")->required();
    oracle_cmd->add_option("--cases", oracle_cases, "comparison count (0 = default)");
    oracle_cmd->add_option("--seed", oracle_seed, "suite seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return do_run(run_flags);
        if (sweep_cmd->parsed()) return do_sweep(sweep_flags, axis, values, routers);
        if (stats_cmd->parsed()) return do_stats(trace_path);
        if (oracle_cmd->parsed()) return do_oracle(check, oracle_cases, oracle_seed);
    } catch (const InvalidParameter& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    }
    return 0;
}
