#ifndef FLASH_TOPOLOGY_HPP
#define FLASH_TOPOLOGY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flash/types.hpp"

namespace flash {

struct ChannelDirState {
    Amount balance = 0;  // >= 0 at all times
    FeeSchedule fee;
};

// Connectivity-only view of a topology: adjacency with sorted neighbor
// lists and no balance information. This is the "local view" every node
// holds; routers must path-find on this, never on live balances.
class ConnectivityGraph {
  public:
    ConnectivityGraph() = default;

    void add_edge(NodeId u, NodeId v);

    const std::vector<NodeId>& neighbors(NodeId u) const;
    const std::vector<NodeId>& nodes() const { return nodes_; }
    bool has_node(NodeId u) const { return adjacency_.count(u) > 0; }
    bool has_edge(NodeId u, NodeId v) const;
    std::size_t node_count() const { return nodes_.size(); }

    // True when a directed path u -> v exists.
    bool reachable(NodeId u, NodeId v) const;

    void finalize();  // sorts neighbor lists; call after the last add_edge

  private:
    std::map<NodeId, std::vector<NodeId>> adjacency_;
    std::vector<NodeId> nodes_;
};

// Directed payment-channel topology with per-direction balances and fee
// schedules. Channels are bidirectional: (u,v) open implies (v,u) open.
class Topology {
  public:
    Topology() = default;

    void add_node(NodeId id);

    // Opens both directions of channel {u,v} with zero balances.
    void open_channel(NodeId u, NodeId v);

    bool has_channel(NodeId u, NodeId v) const { return channels_.count({u, v}) > 0; }

    Amount balance(NodeId u, NodeId v) const;
    void set_balance(NodeId u, NodeId v, Amount amount);

    const FeeSchedule& fee(NodeId u, NodeId v) const;
    void set_fee(NodeId u, NodeId v, const FeeSchedule& fee);

    // Removes `amount` from balance(u->v) if available. Returns false on
    // insufficient balance (the COMMIT_NACK signal), leaving state intact.
    bool withdraw(NodeId u, NodeId v, Amount amount);

    // Adds `amount` to balance(u->v).
    void deposit(NodeId u, NodeId v, Amount amount);

    // Settled transfer: balance(u->v) -= amount, balance(v->u) += amount.
    // Returns false (no change) when amount exceeds balance(u->v).
    bool apply_payment_delta(NodeId u, NodeId v, Amount amount);

    const std::vector<NodeId>& nodes() const { return node_list_; }
    const std::vector<NodeId>& neighbors(NodeId u) const;
    std::size_t node_count() const { return node_list_.size(); }

    // Channel directions in canonical (u,v) order.
    const std::map<std::pair<NodeId, NodeId>, ChannelDirState>& channels() const {
        return channels_;
    }

    // Undirected channel count (half the direction count).
    std::size_t channel_count() const { return channels_.size() / 2; }

    ConnectivityGraph connectivity() const;

    // Sum of both direction balances per undirected channel, keyed (min,max).
    std::map<std::pair<NodeId, NodeId>, Amount> channel_totals() const;

  private:
    ChannelDirState& dir(NodeId u, NodeId v);
    const ChannelDirState& dir(NodeId u, NodeId v) const;

    std::map<std::pair<NodeId, NodeId>, ChannelDirState> channels_;
    std::map<NodeId, std::vector<NodeId>> adjacency_;
    std::vector<NodeId> node_list_;
};

// Connected Watts-Strogatz small-world graph: ring lattice of degree
// `ring_degree` with each clockwise edge rewired with probability `beta`.
// Balances are left at zero until funded. Rewiring that disconnects the
// graph is retried with incremented seeds a bounded number of times.
Topology watts_strogatz(std::size_t n, std::size_t ring_degree, double beta,
                        std::uint64_t seed);

// Draws each undirected channel's total capacity uniformly from [low, high)
// and splits it evenly over both directions; an odd unit goes to the
// low-id -> high-id direction.
void fund_uniform(Topology& topology, Amount low, Amount high, std::uint64_t seed);

// Multiplies every direction balance by `factor`, rounding down.
void scale_capacities(Topology& topology, const Ratio& factor);

// Assigns per-direction fee rates: with probability `high_fraction` the
// rate is drawn from [high_lo, high_hi) ppm, otherwise from [lo, hi) ppm.
struct FeeDistribution {
    std::uint64_t low_ppm_min = 1'000;    // 0.1%
    std::uint64_t low_ppm_max = 10'000;   // 1%
    std::uint64_t high_ppm_min = 10'000;  // 1%
    std::uint64_t high_ppm_max = 100'000; // 10%
    double high_fraction = 0.10;
    Amount base = 0;
};

void assign_fees(Topology& topology, const FeeDistribution& dist, std::uint64_t seed);

// Line-oriented text format, one channel per line:
//   u v balance_uv balance_vu rate_uv rate_vu base_uv base_vu
// Rates are decimal fractions (e.g. 0.005), stored at ppm precision.
// '#' starts a comment.
Topology load_topology(const std::string& path, bool iterative_prune = false);
void save_topology(const Topology& topology, const std::string& path);

// Drops zero-fund channels, then nodes left with fewer than two neighbors.
// With `iterative` the pass repeats until a fixed point.
Topology prune_topology(const Topology& topology, bool iterative);

}  // namespace flash

#endif  // FLASH_TOPOLOGY_HPP
