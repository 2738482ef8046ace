#include "flash/simnet.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace flash {

SimNet::SimNet(Topology& topology) : topology_(topology) {
    for (NodeId node : topology.nodes())
        engines_.emplace(std::piecewise_construct, std::forward_as_tuple(node),
                         std::forward_as_tuple(node, topology));
}

NodeEngine& SimNet::engine(NodeId id) {
    auto it = engines_.find(id);
    if (it == engines_.end()) throw InvalidParameter("unknown node id");
    return it->second;
}

void SimNet::post(const std::vector<Outbound>& outbound) {
    for (const Outbound& out : outbound)
        queue_.push_back(SimEvent{clock_ + 1, next_seq_++, out.to, out.message});
}

std::optional<Delivery> SimNet::deliver_next() {
    if (queue_.empty()) return std::nullopt;
    SimEvent event = std::move(queue_.front());
    queue_.pop_front();
    clock_ = std::max(clock_, event.tick);
    ++delivered_total_;
    delivered_by_type_[static_cast<std::size_t>(event.message.type)] += 1;
    Delivery delivery{clock_, event.to, event.message.type, event.message.trans_id};
    auto it = engines_.find(event.to);
    if (it == engines_.end()) {
        ++handler_faults_;
        return delivery;
    }
    try {
        post(it->second.handle(event.message));
    } catch (const InvalidParameter&) {
        ++handler_faults_;
    }
    return delivery;
}

void SimNet::run_to_quiescence() {
    while (deliver_next()) {
    }
}

std::size_t SimNet::protocol_errors() const {
    std::size_t total = 0;
    for (const auto& [id, engine] : engines_) total += engine.protocol_errors();
    return total;
}

bool SimNet::any_live_holds() const {
    for (const auto& [id, engine] : engines_)
        if (engine.live_holds()) return true;
    return false;
}

RoutingOutcome SimNet::drive(PaymentSession& session) {
    const std::size_t messages_before = delivered_total_;
    const std::size_t probes_before = delivered(MsgType::Probe);
    post(session.start());
    while (!session.done()) {
        auto delivery = deliver_next();
        if (!delivery) {
            auto out = session.on_quiescent();
            post(out);
            if (!session.done() && out.empty())
                throw std::logic_error("payment session stalled");
            continue;
        }
        if (delivery->to != session.sender()) continue;
        for (const Message& message : engine(delivery->to).take_inbox())
            if (session.owns(message.trans_id)) post(session.on_message(message));
    }
    run_to_quiescence();
    RoutingOutcome outcome = session.outcome();
    outcome.messages_sent = delivered_total_ - messages_before;
    outcome.probe_messages = delivered(MsgType::Probe) - probes_before;
    return outcome;
}

namespace {

std::vector<SizeClass> classify_workload(const std::vector<Payment>& payments, double q) {
    std::vector<SizeClass> classes(payments.size(), SizeClass::Elephant);
    if (payments.empty()) return classes;
    if (q >= 1.0) {
        std::fill(classes.begin(), classes.end(), SizeClass::Mice);
        return classes;
    }
    if (q <= 0.0) return classes;
    std::vector<Amount> demands;
    demands.reserve(payments.size());
    for (const Payment& p : payments) demands.push_back(p.demand);
    Amount threshold = percentile_threshold(demands, q);
    for (std::size_t i = 0; i < payments.size(); ++i)
        classes[i] = classify(payments[i].demand, threshold);
    return classes;
}

struct ActivePayment {
    std::unique_ptr<PaymentSession> session;
    std::size_t index = 0;
    std::uint64_t start_tick = 0;
    std::size_t messages = 0;
    std::size_t probe_messages = 0;
};

}  // namespace

WorkloadRun run_workload(Topology& topology, const std::vector<Payment>& payments,
                         const WorkloadOptions& options) {
    validate_config(options.config);
    if (options.overlap < 1) throw InvalidParameter("overlap must be at least 1");

    SimNet net(topology);
    const ConnectivityGraph graph = topology.connectivity();
    const FeeView fees = fee_view(topology);
    const auto initial_totals =
        options.conservation_checks ? topology.channel_totals()
                                    : std::map<std::pair<NodeId, NodeId>, Amount>{};

    WorkloadRun run;
    run.classes = classify_workload(payments, options.config.mice_fraction);
    run.outcomes.resize(payments.size());
    run.settle_ticks.resize(payments.size(), 0);

    std::map<NodeId, RoutingTable> tables;
    std::vector<ActivePayment> active;
    std::size_t next = 0;

    auto finalize = [&](ActivePayment& entry) {
        RoutingOutcome outcome = entry.session->outcome();
        outcome.messages_sent = entry.messages;
        outcome.probe_messages = entry.probe_messages;
        const Payment& payment = payments[entry.index];
        if (outcome.ok() && outcome.delivered != payment.demand)
            throw std::logic_error("success delivered a partial amount");
        if (!outcome.ok() && outcome.delivered != 0)
            throw std::logic_error("failure left a nonzero delivery");
        run.outcomes[entry.index] = outcome;
        run.settle_ticks[entry.index] = net.clock() - entry.start_tick;
    };

    while (true) {
        std::erase_if(active, [&](ActivePayment& entry) {
            if (!entry.session->done()) return false;
            finalize(entry);
            return true;
        });

        if (active.empty() && net.queue_size() == 0) {
            if (options.conservation_checks) {
                if (net.any_live_holds())
                    throw std::logic_error("live holds at a payment boundary");
                if (topology.channel_totals() != initial_totals)
                    throw std::logic_error("channel totals drifted");
            }
            if (next >= payments.size()) break;
        }

        while (active.size() < options.overlap && next < payments.size() &&
               (options.overlap > 1 || net.queue_size() == 0)) {
            const Payment& payment = payments[next];
            SizeClass pipeline =
                options.config.m == 0 ? SizeClass::Elephant : run.classes[next];
            RoutingTable& table =
                tables.try_emplace(payment.sender, RoutingTable{payment.sender, {}})
                    .first->second;
            SessionContext context{net.engine(payment.sender), graph, fees,
                                   table,                      options.config, payment.seq};
            ActivePayment entry{make_session(options.router, payment, pipeline, context),
                                next, net.clock(), 0, 0};
            ++next;
            net.post(entry.session->start());
            active.push_back(std::move(entry));
        }

        auto delivery = net.deliver_next();
        if (!delivery) {
            bool progressed = false;
            for (ActivePayment& entry : active) {
                if (entry.session->done()) {
                    // finished on its own output (e.g. a local abort right
                    // at start): the reap at the loop top is the progress
                    progressed = true;
                    continue;
                }
                auto out = entry.session->on_quiescent();
                if (!out.empty() || entry.session->done()) progressed = true;
                net.post(out);
            }
            if (!active.empty() && !progressed && net.queue_size() == 0)
                throw std::logic_error("simulation stalled");
            continue;
        }

        for (ActivePayment& entry : active) {
            if (!entry.session->owns(delivery->trans_id)) continue;
            entry.messages += 1;
            if (delivery->type == MsgType::Probe) entry.probe_messages += 1;
            break;
        }
        if (!net.has_node(delivery->to)) continue;
        for (const Message& message : net.engine(delivery->to).take_inbox()) {
            for (ActivePayment& entry : active) {
                if (entry.session->sender() != delivery->to) continue;
                if (!entry.session->owns(message.trans_id)) continue;
                net.post(entry.session->on_message(message));
                break;
            }
        }
    }

    run.delivered_messages = net.delivered_total();
    run.probe_messages = net.delivered(MsgType::Probe);
    run.protocol_errors = net.protocol_errors() + net.handler_faults();
    run.final_tick = net.clock();
    return run;
}

}  // namespace flash
