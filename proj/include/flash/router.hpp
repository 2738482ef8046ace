#ifndef FLASH_ROUTER_HPP
#define FLASH_ROUTER_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flash/flowpath.hpp"
#include "flash/protocol.hpp"
#include "flash/topology.hpp"
#include "flash/types.hpp"
#include "flash/workload.hpp"

namespace flash {

// flash-seq is flash with the greedy first-fit split in place of the
// fee-optimal one; it exists as the cost baseline.
enum class RouterKind { Flash, FlashSeq, Sp, Spider };

RouterKind parse_router_kind(const std::string& name);
const char* router_kind_name(RouterKind kind);

enum class RouteStatus { Success, Failure };

enum class FailReason {
    None,
    NoPath,
    InsufficientFlow,
    SplitInfeasible,
    InsufficientCapacity,
    PathsExhausted,
    CommitAborted,
    Timeout,
};

const char* fail_reason_name(FailReason reason);

struct RoutingOutcome {
    RouteStatus status = RouteStatus::Failure;
    FailReason reason = FailReason::None;
    SizeClass size_class = SizeClass::Elephant;  // pipeline that handled it
    Amount delivered = 0;                        // = demand on success, else 0
    std::size_t probes_sent = 0;     // path probe exchanges the router issued
    std::size_t probe_messages = 0;  // PROBE frames delivered on its behalf
    std::size_t messages_sent = 0;   // all frames delivered on its behalf
    std::size_t paths_used = 0;      // confirmed sub-payments
    Amount fee_paid = 0;

    bool ok() const { return status == RouteStatus::Success; }
    bool operator==(const RoutingOutcome&) const = default;
};

struct RouterConfig {
    std::size_t k = 20;          // elephant path budget
    std::size_t m = 4;           // mice paths per receiver; 0 = route all as elephants
    double mice_fraction = 0.9;  // size-percentile threshold q
    std::uint64_t table_timeout = 4096;  // idle logical time before an entry expires
    std::uint64_t seed = 1;
};

// Throws InvalidParameter unless k >= 1, m <= k and q is in [0, 1].
void validate_config(const RouterConfig& config);

struct TableEntry {
    std::vector<Path> paths;         // <= m, owner to receiver
    std::size_t next_yen_index = 0;  // ranks consumed from the Yen ordering
    std::uint64_t last_access = 0;
};

// Per-sender cache of mice paths, keyed by receiver.
struct RoutingTable {
    NodeId owner = 0;
    std::map<NodeId, TableEntry> entries;
};

// Returns the owner->receiver entry, recomputing it on a miss or after
// table_timeout idle logical time, and touches last_access.
TableEntry& table_fetch(RoutingTable& table, const ConnectivityGraph& graph, NodeId receiver,
                        const RouterConfig& config, std::uint64_t now);

// Recomputes every entry on the current graph; entries idle past
// table_timeout are evicted instead.
void refresh_table(RoutingTable& table, const ConnectivityGraph& graph,
                   const RouterConfig& config, std::uint64_t now);

// Swaps a dead path out of the entry for the next-ranked Yen path, if the
// ranking has one left, and advances the cursor.
std::optional<Path> replace_path(RoutingTable& table, const ConnectivityGraph& graph,
                                 NodeId receiver, const Path& dead, const RouterConfig& config);

using FeeView = std::map<std::pair<NodeId, NodeId>, FeeSchedule>;

// Snapshot of the advertised fee schedules (public, unlike balances).
FeeView fee_view(const Topology& topology);

// Fee for a set of sub-payments under the same rounding the split
// optimizer charges: base fees per used hop plus one ceiled proportional
// term over the summed rate numerators.
Amount total_fee(const std::vector<std::pair<Path, Amount>>& subs, const FeeView& fees);

// Unit-block waterfilling in closed form: hand each next unit to the path
// with the largest remaining bottleneck, ties to the smallest index.
// nullopt when the bottlenecks sum below the demand.
std::optional<std::vector<Amount>> waterfill(const std::vector<Amount>& bottlenecks,
                                             Amount demand);

// One payment in flight, advanced by the harness. start() yields the
// opening messages; every reply the session owns is fed back through
// on_message(); on_quiescent() fires when the network drained while the
// session still waits (the logical-timeout hook) and must make progress
// or resolve. Once done(), outcome() is final except for the delivery
// counters, which the harness fills.
class PaymentSession {
  public:
    virtual ~PaymentSession() = default;
    virtual std::vector<Outbound> start() = 0;
    virtual std::vector<Outbound> on_message(const Message& message) = 0;
    virtual std::vector<Outbound> on_quiescent() = 0;
    virtual bool owns(std::uint64_t trans_id) const = 0;
    virtual bool done() const = 0;
    virtual NodeId sender() const = 0;
    virtual RoutingOutcome outcome() const = 0;
};

struct SessionContext {
    NodeEngine& engine;              // the sender's protocol engine
    const ConnectivityGraph& graph;  // balance-free local view
    const FeeView& fees;
    RoutingTable& table;  // sender-owned, persistent across payments
    const RouterConfig& config;
    std::uint64_t now = 0;  // logical time for table bookkeeping
};

std::unique_ptr<PaymentSession> make_session(RouterKind kind, const Payment& payment,
                                             SizeClass size_class,
                                             const SessionContext& context);

}  // namespace flash

#endif  // FLASH_ROUTER_HPP
