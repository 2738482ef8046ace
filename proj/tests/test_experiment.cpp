#include "flash/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "flash/oraclecheck.hpp"

using namespace flash;

namespace {

ExperimentSpec tiny_spec() {
    ExperimentSpec spec;
    spec.topology.nodes = 16;
    spec.topology.ring_degree = 4;
    spec.topology.beta = 0.2;
    spec.fund_low = 100'000;
    spec.fund_high = 150'000;
    spec.txn_count = 60;
    spec.config.k = 8;
    spec.config.m = 3;
    spec.repetitions = 2;
    spec.seed_base = 11;
    return spec;
}

RoutingOutcome outcome(bool ok, SizeClass cls, Amount delivered, Amount fee,
                       std::size_t probe_messages, std::size_t messages) {
    RoutingOutcome out;
    out.status = ok ? RouteStatus::Success : RouteStatus::Failure;
    out.reason = ok ? FailReason::None : FailReason::PathsExhausted;
    out.size_class = cls;
    out.delivered = delivered;
    out.fee_paid = fee;
    out.probe_messages = probe_messages;
    out.messages_sent = messages;
    return out;
}

}  // namespace

TEST_CASE("compute_metrics aggregates classes, fees and delays") {
    std::vector<Payment> payments(3);
    payments[0].id = 1, payments[0].sender = 0, payments[0].receiver = 1;
    payments[0].demand = 100;
    payments[1].id = 2, payments[1].sender = 0, payments[1].receiver = 2;
    payments[1].demand = 10;
    payments[2].id = 3, payments[2].sender = 1, payments[2].receiver = 2;
    payments[2].demand = 50;

    WorkloadRun run;
    run.classes = {SizeClass::Elephant, SizeClass::Mice, SizeClass::Mice};
    run.outcomes = {outcome(true, SizeClass::Elephant, 100, 5, 6, 20),
                    outcome(true, SizeClass::Mice, 10, 1, 0, 8),
                    outcome(false, SizeClass::Mice, 0, 0, 4, 12)};
    run.settle_ticks = {40, 10, 30};
    run.final_tick = 99;

    MetricsReport report = compute_metrics(payments, run);
    CHECK(report.all.attempts == 3);
    CHECK(report.all.successes == 2);
    CHECK(report.all.success_volume == 110);
    CHECK(report.all.total_volume == 160);
    CHECK(report.all.probe_messages == 10);
    CHECK(report.all.total_messages == 40);
    CHECK(report.all.success_ratio() == doctest::Approx(2.0 / 3.0));

    CHECK(report.elephant.attempts == 1);
    CHECK(report.elephant.successes == 1);
    CHECK(report.elephant.success_volume == 100);
    CHECK(report.mice.attempts == 2);
    CHECK(report.mice.successes == 1);
    CHECK(report.mice.success_volume == 10);
    CHECK(report.mice.total_volume == 60);

    // class splits always add back up to the totals
    CHECK(report.elephant.attempts + report.mice.attempts == report.all.attempts);
    CHECK(report.elephant.success_volume + report.mice.success_volume ==
          report.all.success_volume);
    CHECK(report.elephant.total_messages + report.mice.total_messages ==
          report.all.total_messages);

    CHECK(report.fee_fraction == doctest::Approx(6.0 / 110.0));
    CHECK(report.mean_fee_fraction == doctest::Approx(0.075));
    CHECK(report.mean_settle_ticks == doctest::Approx(25.0));
    CHECK(report.mice_settle_ticks == doctest::Approx(10.0));
    CHECK(report.final_tick == 99);

    CHECK(report_columns(report).size() == 26);

    run.settle_ticks.pop_back();
    CHECK_THROWS_AS(compute_metrics(payments, run), InvalidParameter);
}

TEST_CASE("metrics over a live run match the run's own counters") {
    Topology topo = watts_strogatz(20, 4, 0.25, 401);
    fund_uniform(topo, 400, 900, 402);
    auto trace = synthetic_trace(300, 403);
    auto payments = sample_payments(trace, 80, topo, Pairing::RandomPairs, 404);
    WorkloadOptions options;
    options.config.k = 6;
    options.config.m = 3;
    options.config.seed = 405;
    auto run = run_workload(topo, payments, options);

    MetricsReport report = compute_metrics(payments, run);
    CHECK(report.all.attempts == payments.size());
    CHECK(report.all.probe_messages == run.probe_messages);
    CHECK(report.all.total_messages == run.delivered_messages);
    CHECK(report.all.successes <= report.all.attempts);
    CHECK(report.all.success_volume <= report.all.total_volume);
    Amount demand_total = 0;
    for (const auto& p : payments) demand_total += p.demand;
    CHECK(report.all.total_volume == demand_total);
}

TEST_CASE("one repetition: the summary rows collapse onto the single run") {
    ExperimentSpec spec = tiny_spec();
    spec.repetitions = 1;
    ExperimentResult result = run_experiment(spec);
    REQUIRE(result.runs.size() == 1);
    CHECK(result.runs[0].seed == spec.seed_base);
    auto columns = report_columns(result.runs[0].report);
    REQUIRE(result.stats.size() == columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        CHECK(result.stats[c].name == columns[c].first);
        CHECK(result.stats[c].min == columns[c].second);
        CHECK(result.stats[c].mean == columns[c].second);
        CHECK(result.stats[c].max == columns[c].second);
    }
}

TEST_CASE("capacity-rich experiments succeed for every router") {
    for (RouterKind kind : {RouterKind::Flash, RouterKind::FlashSeq, RouterKind::Sp,
                            RouterKind::Spider}) {
        ExperimentSpec spec = tiny_spec();
        spec.router = kind;
        spec.txn_count = 40;
        spec.repetitions = 1;
        // fund far beyond any synthetic payment volume
        spec.fund_low = 40'000'000'000;
        spec.fund_high = 40'000'000'100;
        ExperimentResult result = run_experiment(spec);
        const MetricsReport& r = result.runs[0].report;
        CHECK(r.all.successes == r.all.attempts);
        CHECK(r.all.success_volume == r.all.total_volume);
        CHECK(r.all.success_ratio() == 1.0);
    }
}

TEST_CASE("flash clears more volume than single-path routing") {
    ExperimentSpec flash_spec = tiny_spec();
    flash_spec.topology.nodes = 24;
    flash_spec.txn_count = 300;
    // scarce enough that channels deplete and rerouting matters
    flash_spec.fund_low = 10'000;
    flash_spec.fund_high = 20'000;
    flash_spec.config.k = 10;
    flash_spec.config.m = 4;
    ExperimentSpec sp_spec = flash_spec;
    sp_spec.router = RouterKind::Sp;

    ExperimentResult flash_result = run_experiment(flash_spec);
    ExperimentResult sp_result = run_experiment(sp_spec);

    auto volume_mean = [](const ExperimentResult& r) {
        for (const ColumnStats& s : r.stats)
            if (s.name == "success_volume") return s.mean;
        return 0.0;
    };
    CHECK(volume_mean(flash_result) > volume_mean(sp_result));
}

TEST_CASE("experiments and their CSVs are reproducible byte for byte") {
    ExperimentSpec spec = tiny_spec();
    ExperimentResult a = run_experiment(spec);
    ExperimentResult b = run_experiment(spec);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i)
        CHECK(a.runs[i].report == b.runs[i].report);
    CHECK(runs_csv(spec, a) == runs_csv(spec, b));
    CHECK(experiment_summary_csv(a) == experiment_summary_csv(b));

    std::string csv = runs_csv(spec, a);
    CHECK(csv.find("router,rep,seed,attempts,") == 0);
    CHECK(csv.find("flash,0,11,") != std::string::npos);
}

TEST_CASE("sweep runs the full value x router x rep grid in order") {
    ExperimentSpec spec = tiny_spec();
    spec.txn_count = 40;
    std::vector<std::string> values{"0", "0.9"};
    std::vector<RouterKind> routers{RouterKind::Flash, RouterKind::Sp};

    SweepResult result = sweep(spec, SweepAxis::ThresholdQ, values, routers);
    REQUIRE(result.cells.size() == 2 * 2 * 2);
    std::size_t i = 0;
    for (const std::string& value : values)
        for (RouterKind router : routers)
            for (std::size_t rep = 0; rep < 2; ++rep, ++i) {
                CHECK(result.cells[i].value == value);
                CHECK(result.cells[i].router == router);
                CHECK(result.cells[i].rep == rep);
                CHECK(result.cells[i].seed == spec.seed_base + rep);
            }

    std::string csv = sweep_csv(result);
    CHECK(csv.find("axis,value,router,rep,seed,attempts,") == 0);
    CHECK(csv.find("threshold_q,0.9,flash,1,12,") != std::string::npos);
    CHECK(sweep_csv(result) == csv);  // stable

    std::string summary = sweep_summary_csv(result);
    CHECK(summary.find("axis,value,router,metric,min,mean,max") == 0);
    // SP is in the set, so flash rows carry the normalized delay
    CHECK(summary.find("threshold_q,0,flash,delay_vs_sp,") != std::string::npos);
    CHECK(summary.find("sp,delay_vs_sp,") == std::string::npos);

    SUBCASE("threshold endpoints flip the class mix") {
        auto mice_attempts = [&result](const std::string& value) {
            for (const SweepCell& cell : result.cells)
                if (cell.value == value && cell.router == RouterKind::Flash && cell.rep == 0)
                    return cell.report.mice.attempts;
            return std::uint64_t{0};
        };
        CHECK(mice_attempts("0") == 0);    // q=0: everything is an elephant
        CHECK(mice_attempts("0.9") > 0);
    }
}

TEST_CASE("sweep rejects bad cells before running any") {
    ExperimentSpec spec = tiny_spec();
    CHECK_THROWS_AS(sweep(spec, SweepAxis::M, {"12"}, {RouterKind::Flash}),
                    InvalidParameter);  // m > k
    CHECK_THROWS_AS(sweep(spec, SweepAxis::ThresholdQ, {"1.5"}, {RouterKind::Flash}),
                    InvalidParameter);
    CHECK_THROWS_AS(sweep(spec, SweepAxis::TxnCount, {"abc"}, {RouterKind::Flash}),
                    InvalidParameter);
    CHECK_THROWS_AS(sweep(spec, SweepAxis::K, {}, {RouterKind::Flash}), InvalidParameter);

    CHECK(parse_sweep_axis("capacity_scale") == SweepAxis::CapacityScale);
    CHECK(parse_sweep_axis("m") == SweepAxis::M);
    CHECK_THROWS_AS(parse_sweep_axis("fees"), InvalidParameter);
    CHECK(sweep_axis_name(SweepAxis::TxnCount) == "txn_count");
}

TEST_CASE("atomic file writes leave no temporaries behind") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "flash_csv_test";
    fs::remove_all(dir);
    std::string path = (dir / "deep" / "rows.csv").string();
    write_file_atomic(path, "a,b\n1,2\n");

    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "a,b\n1,2\n");
    CHECK_FALSE(fs::exists(path + ".tmp"));

    write_file_atomic(path, "a,b\n3,4\n");  // overwrite in place
    std::ifstream again(path);
    std::string updated((std::istreambuf_iterator<char>(again)),
                        std::istreambuf_iterator<char>());
    CHECK(updated == "a,b\n3,4\n");
    fs::remove_all(dir);
}

TEST_CASE("oracle check suites agree at reduced scale") {
    auto flow = check_maxflow_oracle(25, 91);
    CHECK(flow.cases == 25);
    CHECK(flow.failures == 0);
    auto split = check_split_oracle(25, 92);
    CHECK(split.cases == 25);
    CHECK(split.failures == 0);
    auto yen = check_yen_oracle(25, 93);
    CHECK(yen.cases == 25);
    CHECK(yen.failures == 0);
}
