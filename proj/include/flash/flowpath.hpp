#ifndef FLASH_FLOWPATH_HPP
#define FLASH_FLOWPATH_HPP

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "flash/topology.hpp"
#include "flash/types.hpp"

namespace flash {

// Sender-side knowledge of channel capacities. A missing entry is Unknown
// and treated as unbounded: the algorithms assume a channel can carry flow
// until a probe proves otherwise.
class CapacityMatrix {
  public:
    std::optional<Amount> get(NodeId u, NodeId v) const {
        auto it = entries_.find({u, v});
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool known(NodeId u, NodeId v) const { return entries_.count({u, v}) > 0; }

    // Unknown or positive.
    bool passable(NodeId u, NodeId v) const {
        auto it = entries_.find({u, v});
        return it == entries_.end() || it->second > 0;
    }

    void set(NodeId u, NodeId v, Amount amount) {
        if (amount < 0) throw InvalidParameter("negative capacity");
        entries_[{u, v}] = amount;
    }

    void add(NodeId u, NodeId v, Amount delta) {
        auto it = entries_.find({u, v});
        if (it == entries_.end()) throw InvalidParameter("adjusting unknown capacity");
        if (it->second + delta < 0) throw InvalidParameter("capacity below zero");
        it->second += delta;
    }

    const std::map<std::pair<NodeId, NodeId>, Amount>& entries() const { return entries_; }

  private:
    std::map<std::pair<NodeId, NodeId>, Amount> entries_;
};

// Paths in discovery order with their probed bottlenecks. Re-finding a
// path after reverse-edge credit merges into its existing entry, so the
// set stays duplicate-free.
struct PathSet {
    std::vector<Path> paths;
    std::vector<Amount> bottlenecks;

    std::size_t size() const { return paths.size(); }
    Amount total() const {
        Amount sum = 0;
        for (Amount b : bottlenecks) sum += b;
        return sum;
    }
    std::optional<std::size_t> find(const Path& p) const {
        for (std::size_t i = 0; i < paths.size(); ++i)
            if (paths[i] == p) return i;
        return std::nullopt;
    }
    void add(const Path& p, Amount bottleneck) {
        if (auto i = find(p)) {
            bottlenecks[*i] += bottleneck;
        } else {
            paths.push_back(p);
            bottlenecks.push_back(bottleneck);
        }
    }
};

// What one probed hop reports: both direction balances and fee rates,
// mirroring the wire capacity entry.
struct ProbeEntry {
    Amount forward = 0;
    Amount reverse = 0;
    std::uint64_t forward_rate_ppm = 0;
    std::uint64_t reverse_rate_ppm = 0;

    bool operator==(const ProbeEntry&) const = default;
};

// Synchronous probing interface; the simulation binds it to the protocol
// exchange, tests bind it straight to a Topology.
class Prober {
  public:
    virtual ~Prober() = default;
    // One entry per hop. nullopt when the probe could not traverse.
    virtual std::optional<std::vector<ProbeEntry>> probe(const Path& path) = 0;
};

// Direct-topology prober for sequential use.
class TopologyProber : public Prober {
  public:
    explicit TopologyProber(const Topology& topology) : topology_(topology) {}

    std::optional<std::vector<ProbeEntry>> probe(const Path& path) override;

    std::size_t probes() const { return probes_; }

  private:
    const Topology& topology_;
    std::size_t probes_ = 0;
};

// Minimum-hop s->t path using only edges whose residual entry is Unknown
// or positive. Levels are scanned in ascending node order, so among
// equal-hop parents the smallest NodeId claims a node (deterministic).
std::optional<Path> bfs_feasible_shortest(const ConnectivityGraph& graph,
                                          const CapacityMatrix& residual, NodeId s,
                                          NodeId t);

// Lexicographically smallest minimum-hop s->t path that avoids the given
// nodes and directed edges; the tie-break Yen's ranking needs.
std::optional<Path> lexmin_shortest_path(const ConnectivityGraph& graph, NodeId s, NodeId t,
                                         const std::set<NodeId>& banned_nodes,
                                         const std::set<std::pair<NodeId, NodeId>>& banned_edges);

// Up to m loopless paths in non-decreasing hop count, ties broken by
// lexicographic node-id order. Prefix-stable in m.
std::vector<Path> yen_k_shortest(const ConnectivityGraph& graph, NodeId s, NodeId t,
                                 std::size_t m);

// Successive shortest paths, deleting every used channel in both
// directions between rounds (the Spider path set).
std::vector<Path> edge_disjoint_shortest_paths(const ConnectivityGraph& graph, NodeId s,
                                               NodeId t, std::size_t count);

inline constexpr Amount kUnboundedDemand = std::numeric_limits<Amount>::max();

struct ProbeRequest {
    Path path;
};

struct EkResult {
    bool success = false;   // accumulated flow covered the demand
    PathSet paths;          // positive-bottleneck paths, discovery order
    CapacityMatrix probed;  // first-seen capacities, both directions
    Amount flow = 0;
    std::size_t probes = 0;      // probe exchanges issued
    std::size_t iterations = 0;  // paths found (zero-bottleneck ones included)
};

// Capacity-probing max-flow search, resumable so a simulated node can
// suspend at each probe. Drive it with next(nullopt) to start, then feed
// each probe reply; it yields either the next ProbeRequest or the result.
class EkPathfinder {
  public:
    EkPathfinder(const ConnectivityGraph& graph, NodeId s, NodeId t, Amount demand,
                 std::size_t k);

    std::variant<ProbeRequest, EkResult> next(std::optional<std::vector<ProbeEntry>> reply);

  private:
    std::variant<ProbeRequest, EkResult> advance();
    void record_and_augment(const std::vector<ProbeEntry>& entries);

    const ConnectivityGraph& graph_;
    NodeId s_;
    NodeId t_;
    Amount demand_;
    std::size_t k_;
    CapacityMatrix probed_;    // C
    CapacityMatrix residual_;  // C'
    PathSet paths_;
    Path pending_;  // path awaiting its probe reply
    Amount flow_ = 0;
    std::size_t probes_ = 0;
    std::size_t iterations_ = 0;
    bool done_ = false;
};

// Runs the full search against a synchronous prober. With demand
// kUnboundedDemand it keeps augmenting until the path budget or the
// residual graph is exhausted (success is then never reported).
EkResult modified_edmonds_karp(const ConnectivityGraph& graph, NodeId s, NodeId t,
                               Amount demand, std::size_t k, Prober& prober);

}  // namespace flash

#endif  // FLASH_FLOWPATH_HPP
