#ifndef FLASH_ORACLECHECK_HPP
#define FLASH_ORACLECHECK_HPP

#include <cstddef>
#include <cstdint>
#include <string>

namespace flash {

struct OracleCheckResult {
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;  // empty when every case agreed

    bool ok() const { return failures == 0; }
};

// Seeded head-to-head suites pitting the production algorithms against
// the brute-force references. Each runs `count` comparisons on freshly
// generated random instances.

// Probed max flow (budget = edge count, unbounded demand) vs the classic
// augmenting-path algorithm on fully known capacities. Graphs stay at or
// under 12 nodes, 30 directed edges, capacity 20.
OracleCheckResult check_maxflow_oracle(std::size_t count, std::uint64_t seed);

// Min-fee splitting vs vertex enumeration (continuous optimum, exact
// rational match) and the unit-granularity grid (integer cost within one
// unit). Problems stay at or under 4 paths, 8 channels, capacity 50.
OracleCheckResult check_split_oracle(std::size_t count, std::uint64_t seed);

// Ranked path listing vs exhaustive simple-path enumeration ordered by
// (hop count, lexicographic), with the requested length capped at 5.
// Graphs stay at or under 10 nodes.
OracleCheckResult check_yen_oracle(std::size_t count, std::uint64_t seed);

}  // namespace flash

#endif  // FLASH_ORACLECHECK_HPP
