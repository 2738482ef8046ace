#ifndef FLASH_ORACLE_HPP
#define FLASH_ORACLE_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flash/feeopt.hpp"
#include "flash/topology.hpp"
#include "flash/types.hpp"

// Brute-force reference implementations used only to check the production
// algorithms. They share types with the library but none of its algorithm
// code: max_flow is the classic augmenting-path loop over a dense matrix,
// path enumeration is plain DFS, and the split-problem references work by
// vertex enumeration and a unit-granularity grid search.

namespace flash::oracle {

using CapacityMap = std::map<std::pair<NodeId, NodeId>, Amount>;

// Textbook Edmonds-Karp on fully known capacities. FIFO BFS, no
// tie-breaking guarantees needed: only the flow value is used.
Amount max_flow(const CapacityMap& capacities, NodeId s, NodeId t);

// Every simple s->t path, sorted by (hop count, lexicographic node ids).
std::vector<Path> all_simple_paths(const ConnectivityGraph& graph, NodeId s, NodeId t);

// Exact optimum of the continuous rate objective, found by enumerating
// basic feasible points: the demand equality plus every way of picking
// paths-1 further tight constraints from capacity rows and r_p = 0 bounds.
// Each candidate square system is solved by rational Gaussian elimination
// and kept only if it satisfies all constraints. Returns the minimum as a
// canonical "num/den" (or "num") string, or nullopt when infeasible.
// Intended for small instances only.
std::optional<std::string> lp_vertex_optimum(const SplitProblem& problem);

// Cheapest integer allocation by enumerating every composition of the
// demand across the paths and checking channel constraints directly.
// Cost counts base fees of used paths plus ceil of the exact rate total.
// Exponential; keep demand and path count tiny.
std::optional<Amount> integer_grid_optimum(const SplitProblem& problem);

}  // namespace flash::oracle

#endif  // FLASH_ORACLE_HPP
