#ifndef FLASH_SIMNET_HPP
#define FLASH_SIMNET_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "flash/protocol.hpp"
#include "flash/router.hpp"
#include "flash/topology.hpp"
#include "flash/types.hpp"
#include "flash/workload.hpp"

namespace flash {

struct SimEvent {
    std::uint64_t tick = 0;
    std::uint64_t seq = 0;  // global enqueue order, the FIFO tie-break
    NodeId to = 0;
    Message message;
};

struct Delivery {
    std::uint64_t tick = 0;
    NodeId to = 0;
    MsgType type = MsgType::Probe;
    std::uint64_t trans_id = 0;
};

// Discrete-event message fabric: one protocol engine per topology node,
// every hop costs one tick, deliveries happen in (tick, seq) order.
// Deterministic for a fixed topology and message sequence.
class SimNet {
  public:
    explicit SimNet(Topology& topology);

    NodeEngine& engine(NodeId id);
    bool has_node(NodeId id) const { return engines_.count(id) > 0; }

    // Queues sends one hop out, at clock + 1.
    void post(const std::vector<Outbound>& outbound);

    // Delivers the earliest event to its destination engine and queues
    // whatever the handler produced. Handler faults (malformed paths,
    // unknown destinations) are tallied, never thrown.
    std::optional<Delivery> deliver_next();

    void run_to_quiescence();

    // Runs one payment session to completion, drains the network, and
    // fills the outcome's delivery counters.
    RoutingOutcome drive(PaymentSession& session);

    std::uint64_t clock() const { return clock_; }
    std::size_t queue_size() const { return queue_.size(); }
    const std::deque<SimEvent>& queue() const { return queue_; }
    std::size_t delivered_total() const { return delivered_total_; }
    std::size_t delivered(MsgType type) const {
        return delivered_by_type_[static_cast<std::size_t>(type)];
    }
    std::size_t handler_faults() const { return handler_faults_; }
    std::size_t protocol_errors() const;  // summed over engines
    bool any_live_holds() const;

  private:
    Topology& topology_;
    std::map<NodeId, NodeEngine> engines_;
    std::deque<SimEvent> queue_;
    std::uint64_t clock_ = 0;
    std::uint64_t next_seq_ = 0;
    std::size_t delivered_total_ = 0;
    std::array<std::size_t, 10> delivered_by_type_{};
    std::size_t handler_faults_ = 0;
};

struct WorkloadOptions {
    RouterKind router = RouterKind::Flash;
    RouterConfig config;
    // Payments in flight at once. 1 reproduces strictly serialized
    // processing: the queue drains and conservation is checked between
    // payments. Higher values overlap payments to stress atomicity.
    std::size_t overlap = 1;
    bool conservation_checks = true;
};

struct WorkloadRun {
    std::vector<RoutingOutcome> outcomes;     // input order
    std::vector<SizeClass> classes;           // by demand percentile, m-independent
    std::vector<std::uint64_t> settle_ticks;  // per payment
    std::size_t delivered_messages = 0;
    std::size_t probe_messages = 0;  // PROBE frames delivered
    std::size_t protocol_errors = 0;
    std::uint64_t final_tick = 0;
};

// Classifies payments by the demand percentile q (endpoints: q <= 0 means
// all elephants, q >= 1 all mice), builds one session per payment, and
// runs them to completion through the network in arrival order.
WorkloadRun run_workload(Topology& topology, const std::vector<Payment>& payments,
                         const WorkloadOptions& options);

}  // namespace flash

#endif  // FLASH_SIMNET_HPP
