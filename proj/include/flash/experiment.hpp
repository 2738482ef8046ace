#ifndef FLASH_EXPERIMENT_HPP
#define FLASH_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "flash/metrics.hpp"
#include "flash/simnet.hpp"
#include "flash/topology.hpp"

namespace flash {

// Where the channel graph comes from. Generated topologies are funded
// from the spec's interval and given fresh fee schedules every
// repetition; file topologies already carry balances and fees, so only
// the capacity scale is applied to them.
struct TopologySource {
    enum class Kind { Generate, File };
    Kind kind = Kind::Generate;
    std::size_t nodes = 50;
    std::size_t ring_degree = 8;
    double beta = 0.3;
    std::string path;  // Kind::File only
};

struct ExperimentSpec {
    TopologySource topology;
    Amount fund_low = 100'000;   // atomic units; defaults are $1000
    Amount fund_high = 150'000;  // to $1500 at one cent per unit
    Ratio capacity_scale{1, 1};
    std::size_t txn_count = 10'000;
    RouterKind router = RouterKind::Flash;
    RouterConfig config;  // per-rep seeds overwrite config.seed
    FeeDistribution fees;
    std::size_t repetitions = 5;
    std::uint64_t seed_base = 1;
    std::size_t overlap = 1;
};

void validate_spec(const ExperimentSpec& spec);

struct RunRow {
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    MetricsReport report;
};

struct ColumnStats {
    std::string name;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

std::vector<ColumnStats> summarize(const std::vector<MetricsReport>& reports);

struct ExperimentResult {
    std::vector<RunRow> runs;        // one per repetition, seeded seed_base+rep
    std::vector<ColumnStats> stats;  // min/mean/max over the runs
};

// Runs spec.repetitions workloads with seeds seed_base+0..reps-1, a fresh
// topology and payment sample per repetition. Pure computation; pair it
// with the CSV writers below for output.
ExperimentResult run_experiment(const ExperimentSpec& spec);

enum class SweepAxis { CapacityScale, TxnCount, ThresholdQ, M, K };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepCell {
    std::string value;  // axis value as given on the command line
    RouterKind router = RouterKind::Flash;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    MetricsReport report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::CapacityScale;
    std::vector<std::string> values;
    std::vector<RouterKind> routers;
    std::vector<SweepCell> cells;  // ordered by (value, router, rep)
};

// One experiment per (axis value, router), all sharing the base spec and
// seed ladder so cells are comparable pairwise. Values are decimal text
// and parsed per axis; a bad value or an axis/config clash throws
// InvalidParameter before any cell runs.
SweepResult sweep(const ExperimentSpec& spec, SweepAxis axis,
                  const std::vector<std::string>& values,
                  const std::vector<RouterKind>& routers);

// CSV views. Writers build the whole file in memory and move it into
// place atomically, so a failed run never leaves a partial file.
std::string runs_csv(const ExperimentSpec& spec, const ExperimentResult& result);
std::string experiment_summary_csv(const ExperimentResult& result);
std::string sweep_csv(const SweepResult& result);
// Per-cell min/mean/max rows; when SP cells are present, each other
// router also gets delay_vs_sp rows: its mean settle ticks divided by
// SP's within the same repetition.
std::string sweep_summary_csv(const SweepResult& result);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace flash

#endif  // FLASH_EXPERIMENT_HPP
