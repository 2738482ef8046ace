#include "flash/oraclecheck.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "flash/feeopt.hpp"
#include "flash/flowpath.hpp"
#include "flash/oracle.hpp"
#include "flash/rng.hpp"
#include "flash/topology.hpp"

namespace flash {

namespace {

Topology random_directed(Rng& rng, std::size_t max_nodes, std::size_t max_edges,
                         Amount max_cap, std::size_t* edge_count = nullptr) {
    std::size_t n = 4 + rng.below(max_nodes - 3);
    std::size_t target_edges = n + rng.below(max_edges - n + 1);
    Topology t;
    for (NodeId u = 0; u < n; ++u) t.add_node(u);
    std::size_t added = 0;
    for (std::size_t attempt = 0; attempt < target_edges * 4 && added < target_edges;
         ++attempt) {
        NodeId u = static_cast<NodeId>(rng.below(n));
        NodeId v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        if (!t.has_channel(u, v)) {
            t.open_channel(u, v);
        } else if (t.balance(u, v) > 0) {
            continue;
        }
        t.set_balance(u, v, 1 + static_cast<Amount>(rng.below(max_cap)));
        ++added;
    }
    if (edge_count) *edge_count = added;
    return t;
}

oracle::CapacityMap capacity_map(const Topology& t) {
    oracle::CapacityMap caps;
    for (const auto& [key, state] : t.channels())
        if (state.balance > 0) caps[key] = state.balance;
    return caps;
}

// Mirrors the random problems the splitting tests use: 2-4 paths between
// 0 and 1 over intermediates 2..5, at most eight distinct channels.
SplitProblem random_split(Rng& rng) {
    while (true) {
        std::size_t want = 2 + rng.below(3);
        std::set<Path> uniq;
        for (int tries = 0; tries < 64 && uniq.size() < want; ++tries) {
            std::vector<NodeId> mids{2, 3, 4, 5};
            rng.shuffle(mids);
            Path p{0};
            for (std::size_t i = 0; i < rng.below(3); ++i) p.push_back(mids[i]);
            p.push_back(1);
            uniq.insert(p);
        }

        SplitProblem prob;
        std::set<std::pair<NodeId, NodeId>> ordered;
        std::set<std::pair<NodeId, NodeId>> channels;
        for (const Path& p : uniq) {
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                ordered.insert({p[i], p[i + 1]});
                channels.insert({std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1])});
            }
        }
        if (channels.size() > 8) continue;
        auto add_hop = [&prob](NodeId u, NodeId v, Amount cap, std::uint64_t ppm) {
            prob.capacities.set(u, v, cap);
            prob.fees[{u, v}] = FeeSchedule{0, ppm};
        };
        for (auto [u, v] : ordered) {
            add_hop(u, v, static_cast<Amount>(rng.below(51)), rng.below(60'001));
            if (!ordered.count({v, u}) && rng.chance(0.5))
                add_hop(v, u, static_cast<Amount>(rng.below(51)), rng.below(60'001));
        }
        for (const Path& p : uniq) {
            Amount bottleneck = std::numeric_limits<Amount>::max();
            for (std::size_t i = 0; i + 1 < p.size(); ++i)
                bottleneck = std::min(bottleneck, *prob.capacities.get(p[i], p[i + 1]));
            prob.paths.add(p, bottleneck);
        }
        prob.demand = 1 + static_cast<Amount>(rng.below(40));
        return prob;
    }
}

// Independent constraint check (not the library's): demand met exactly,
// nothing negative, every channel within its probed capacity.
bool allocation_satisfies(const SplitProblem& prob, const std::vector<Amount>& amounts) {
    if (amounts.size() != prob.paths.size()) return false;
    Amount total = 0;
    for (Amount a : amounts) {
        if (a < 0) return false;
        total += a;
    }
    if (total != prob.demand) return false;
    for (const auto& [key, cap] : prob.capacities.entries()) {
        Amount used = 0;
        for (std::size_t p = 0; p < prob.paths.size(); ++p) {
            const Path& path = prob.paths.paths[p];
            for (std::size_t i = 0; i + 1 < path.size(); ++i)
                if (path[i] == key.first && path[i + 1] == key.second) used += amounts[p];
        }
        if (used > cap) return false;
    }
    return true;
}

void record(OracleCheckResult& result, bool pass, const std::string& detail) {
    if (pass) return;
    result.failures += 1;
    if (result.first_failure.empty()) result.first_failure = detail;
}

}  // namespace

OracleCheckResult check_maxflow_oracle(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    OracleCheckResult result;
    while (result.cases < count) {
        std::size_t edges = 0;
        Topology t = random_directed(rng, 12, 30, 20, &edges);
        const auto& nodes = t.nodes();
        NodeId s = nodes[rng.below(nodes.size())];
        NodeId u = nodes[rng.below(nodes.size())];
        if (s == u) continue;
        result.cases += 1;

        auto g = t.connectivity();
        TopologyProber prober(t);
        auto r = modified_edmonds_karp(g, s, u, kUnboundedDemand,
                                       std::max<std::size_t>(edges, 1), prober);
        Amount expect = oracle::max_flow(capacity_map(t), s, u);
        if (r.flow != expect) {
            std::ostringstream what;
            what << "case " << result.cases << ": probed flow " << r.flow << " vs oracle "
                 << expect << " (" << s << " -> " << u << ", " << edges << " edges)";
            record(result, false, what.str());
            continue;
        }
        Amount from_paths = 0;
        for (Amount b : r.paths.bottlenecks) from_paths += b;
        record(result, from_paths == r.flow,
               "case " + std::to_string(result.cases) + ": path bottlenecks do not sum to the flow");
    }
    return result;
}

OracleCheckResult check_split_oracle(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    OracleCheckResult result;
    while (result.cases < count) {
        SplitProblem prob = random_split(rng);
        result.cases += 1;
        const std::string tag = "case " + std::to_string(result.cases);

        SplitSolution sol = solve_min_fee_split(prob);
        auto vertex = oracle::lp_vertex_optimum(prob);
        auto grid = oracle::integer_grid_optimum(prob);

        if (!sol.feasible) {
            record(result, !vertex.has_value() || !grid.has_value(),
                   tag + ": solver infeasible but both references found a solution");
            continue;
        }
        if (!vertex.has_value() || !grid.has_value()) {
            record(result, false, tag + ": solver feasible but a reference is not");
            continue;
        }
        record(result, sol.optimum == *vertex,
               tag + ": continuous optimum " + sol.optimum + " vs vertex " + *vertex);
        record(result, sol.cost >= *grid && sol.cost <= *grid + 1,
               tag + ": integer cost " + std::to_string(sol.cost) + " vs grid " +
                   std::to_string(*grid));
        record(result, allocation_satisfies(prob, sol.allocation.amounts),
               tag + ": allocation violates a constraint");
    }
    return result;
}

OracleCheckResult check_yen_oracle(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    OracleCheckResult result;
    while (result.cases < count) {
        Topology t = random_directed(rng, 10, 24, 5);
        const auto& nodes = t.nodes();
        NodeId s = nodes[rng.below(nodes.size())];
        NodeId u = nodes[rng.below(nodes.size())];
        if (s == u) continue;
        result.cases += 1;
        const std::string tag = "case " + std::to_string(result.cases);

        auto g = t.connectivity();
        auto expect = oracle::all_simple_paths(g, s, u);
        std::size_t m = 1 + rng.below(5);
        auto got = yen_k_shortest(g, s, u, m);
        if (got.size() != std::min(m, expect.size())) {
            record(result, false, tag + ": wrong number of paths");
            continue;
        }
        bool same = true;
        for (std::size_t i = 0; i < got.size(); ++i) same = same && got[i] == expect[i];
        record(result, same, tag + ": ranking diverges from enumeration");
    }
    return result;
}

}  // namespace flash
