#ifndef FLASH_FEEOPT_HPP
#define FLASH_FEEOPT_HPP

#include <map>
#include <string>
#include <vector>

#include "flash/flowpath.hpp"
#include "flash/types.hpp"

namespace flash {

// The payment-split program over a probed path set: spread `demand` across
// the paths so every channel constraint (net of reverse-direction offsets)
// holds and the proportional fees are minimized.
struct SplitProblem {
    PathSet paths;
    CapacityMatrix capacities;  // probed capacity for every hop, both directions
    std::map<std::pair<NodeId, NodeId>, FeeSchedule> fees;
    Amount demand = 0;
};

struct Allocation {
    std::vector<Amount> amounts;  // one per path, same order as the PathSet
};

struct SplitSolution {
    bool feasible = false;
    Allocation allocation;
    // Canonical num/den of the continuous optimum of the rate objective,
    // before integer rounding. Empty when infeasible.
    std::string optimum;
    // allocation_cost of the returned integer allocation.
    Amount cost = 0;
};

// Exact-rational simplex over the path formulation. Feasible solutions are
// integerized by flooring and assigning the leftover units greedily to the
// cheapest path that still fits; reports infeasible when the continuous
// program is infeasible or no integer assignment reaches the demand.
SplitSolution solve_min_fee_split(const SplitProblem& problem);

// True when amounts meet the demand exactly and every ordered channel pair
// carries net flow within its probed capacity.
bool allocation_feasible(const SplitProblem& problem, const std::vector<Amount>& amounts);

// Total fee for an allocation: per used path, each hop charges base plus
// rate * amount; summed exactly and rounded up to whole units. Throws when
// the allocation violates the problem constraints.
Amount allocation_cost(const SplitProblem& problem, const std::vector<Amount>& amounts);

// Baseline splitter: fill paths in discovery order up to each probed
// bottleneck until the demand is covered. No fee awareness.
SplitSolution sequential_fill_split(const SplitProblem& problem);

}  // namespace flash

#endif  // FLASH_FEEOPT_HPP
