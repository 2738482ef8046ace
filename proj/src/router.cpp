#include "flash/router.hpp"

#include <algorithm>
#include <set>
#include <variant>

#include "flash/feeopt.hpp"
#include "flash/rng.hpp"

namespace flash {

namespace {

constexpr std::uint64_t kMiceOrderStream = 0x6d696365;  // mice path shuffle
constexpr std::size_t kSpiderPathCount = 4;

}  // namespace

RouterKind parse_router_kind(const std::string& name) {
    if (name == "flash") return RouterKind::Flash;
    if (name == "flash-seq") return RouterKind::FlashSeq;
    if (name == "sp") return RouterKind::Sp;
    if (name == "spider") return RouterKind::Spider;
    throw InvalidParameter("unknown router: " + name);
}

const char* router_kind_name(RouterKind kind) {
    switch (kind) {
        case RouterKind::Flash: return "flash";
        case RouterKind::FlashSeq: return "flash-seq";
        case RouterKind::Sp: return "sp";
        case RouterKind::Spider: return "spider";
    }
    return "?";
}

const char* fail_reason_name(FailReason reason) {
    switch (reason) {
        case FailReason::None: return "none";
        case FailReason::NoPath: return "no-path";
        case FailReason::InsufficientFlow: return "insufficient-flow";
        case FailReason::SplitInfeasible: return "split-infeasible";
        case FailReason::InsufficientCapacity: return "insufficient-capacity";
        case FailReason::PathsExhausted: return "paths-exhausted";
        case FailReason::CommitAborted: return "commit-aborted";
        case FailReason::Timeout: return "timeout";
    }
    return "?";
}

void validate_config(const RouterConfig& config) {
    if (config.k < 1) throw InvalidParameter("path budget k must be at least 1");
    if (config.m > config.k) throw InvalidParameter("mice path count m must not exceed k");
    if (config.mice_fraction < 0.0 || config.mice_fraction > 1.0)
        throw InvalidParameter("mice fraction must lie in [0, 1]");
}

TableEntry& table_fetch(RoutingTable& table, const ConnectivityGraph& graph, NodeId receiver,
                        const RouterConfig& config, std::uint64_t now) {
    auto it = table.entries.find(receiver);
    bool stale = it == table.entries.end() ||
                 (now >= it->second.last_access &&
                  now - it->second.last_access > config.table_timeout);
    if (stale) {
        TableEntry entry;
        entry.paths = yen_k_shortest(graph, table.owner, receiver, config.m);
        entry.next_yen_index = entry.paths.size();
        entry.last_access = now;
        it = table.entries.insert_or_assign(receiver, std::move(entry)).first;
    } else {
        it->second.last_access = now;
    }
    return it->second;
}

void refresh_table(RoutingTable& table, const ConnectivityGraph& graph,
                   const RouterConfig& config, std::uint64_t now) {
    for (auto it = table.entries.begin(); it != table.entries.end();) {
        if (now >= it->second.last_access &&
            now - it->second.last_access > config.table_timeout) {
            it = table.entries.erase(it);
            continue;
        }
        it->second.paths = yen_k_shortest(graph, table.owner, it->first, config.m);
        it->second.next_yen_index = it->second.paths.size();
        ++it;
    }
}

std::optional<Path> replace_path(RoutingTable& table, const ConnectivityGraph& graph,
                                 NodeId receiver, const Path& dead,
                                 const RouterConfig& config) {
    auto it = table.entries.find(receiver);
    if (it == table.entries.end()) return std::nullopt;
    TableEntry& entry = it->second;
    std::erase(entry.paths, dead);
    // Yen ranking is prefix-stable, so one extra rank is the continuation.
    auto ranked = yen_k_shortest(graph, table.owner, receiver, entry.next_yen_index + 1);
    if (ranked.size() <= entry.next_yen_index) return std::nullopt;
    Path fresh = ranked.back();
    entry.next_yen_index += 1;
    entry.paths.push_back(fresh);
    while (entry.paths.size() > config.m) entry.paths.erase(entry.paths.begin());
    return fresh;
}

FeeView fee_view(const Topology& topology) {
    FeeView fees;
    for (const auto& [dir, state] : topology.channels()) fees.emplace(dir, state.fee);
    return fees;
}

Amount total_fee(const std::vector<std::pair<Path, Amount>>& subs, const FeeView& fees) {
    __int128 bases = 0;
    __int128 proportional = 0;
    for (const auto& [path, amount] : subs) {
        if (amount < 0) throw InvalidParameter("negative sub-payment amount");
        if (amount == 0) continue;
        if (!path_is_simple(path)) throw InvalidParameter("sub-payment path not simple");
        std::uint64_t rate_sum = 0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            auto it = fees.find({path[i], path[i + 1]});
            if (it == fees.end()) throw InvalidParameter("fee schedule missing for hop");
            bases += it->second.base;
            rate_sum += it->second.rate_ppm;
        }
        proportional += static_cast<__int128>(amount) * rate_sum;
    }
    __int128 fee = bases + (proportional + kPpmScale - 1) / kPpmScale;
    return static_cast<Amount>(fee);
}

std::optional<std::vector<Amount>> waterfill(const std::vector<Amount>& bottlenecks,
                                             Amount demand) {
    if (demand <= 0) throw InvalidParameter("demand must be positive");
    __int128 total = 0;
    Amount top = 0;
    for (Amount b : bottlenecks) {
        if (b < 0) throw InvalidParameter("negative bottleneck");
        total += b;
        top = std::max(top, b);
    }
    if (total < demand) return std::nullopt;

    // Taking every path down to level t removes drained(t) units; the
    // unit-by-unit process stops at the smallest level still removing at
    // most the demand, then takes the shortfall one unit each from the
    // lowest-indexed paths at that level.
    auto drained = [&](Amount level) {
        __int128 sum = 0;
        for (Amount b : bottlenecks)
            if (b > level) sum += b - level;
        return sum;
    };
    Amount lo = 0, hi = top;
    while (lo < hi) {
        Amount mid = lo + (hi - lo) / 2;
        if (drained(mid) <= demand)
            hi = mid;
        else
            lo = mid + 1;
    }
    Amount level = lo;
    Amount extra = demand - static_cast<Amount>(drained(level));
    std::vector<Amount> take(bottlenecks.size(), 0);
    for (std::size_t i = 0; i < bottlenecks.size(); ++i)
        take[i] = std::max<Amount>(bottlenecks[i] - level, 0);
    for (std::size_t i = 0; i < bottlenecks.size() && extra > 0; ++i) {
        if (bottlenecks[i] >= level && level >= 1) {
            take[i] += 1;
            --extra;
        }
    }
    return take;
}

namespace {

class SessionBase : public PaymentSession {
  public:
    SessionBase(const Payment& payment, SizeClass size_class, const SessionContext& context)
        : payment_(payment),
          engine_(context.engine),
          graph_(context.graph),
          fees_(context.fees),
          table_(context.table),
          config_(context.config),
          now_(context.now) {
        out_.size_class = size_class;
    }

    bool owns(std::uint64_t trans_id) const override { return owned_.count(trans_id) > 0; }
    bool done() const override { return done_; }
    NodeId sender() const override { return payment_.sender; }
    RoutingOutcome outcome() const override { return out_; }

  protected:
    void own(std::uint64_t trans_id) { owned_.insert(trans_id); }

    void fail(FailReason reason) {
        out_.status = RouteStatus::Failure;
        out_.reason = reason;
        out_.delivered = 0;
        engine_.forget_settled();
        done_ = true;
    }

    void succeed(std::size_t paths_used, Amount fee) {
        out_.status = RouteStatus::Success;
        out_.reason = FailReason::None;
        out_.delivered = payment_.demand;
        out_.paths_used = paths_used;
        out_.fee_paid = fee;
        engine_.forget_settled();
        done_ = true;
    }

    Outbound probe_outbound(std::uint64_t trans_id, const Path& path) {
        own(trans_id);
        out_.probes_sent += 1;
        return Outbound{path[1], engine_.originate_probe(trans_id, path)};
    }

    Payment payment_;
    NodeEngine& engine_;
    const ConnectivityGraph& graph_;
    const FeeView& fees_;
    RoutingTable& table_;
    RouterConfig config_;
    std::uint64_t now_ = 0;
    RoutingOutcome out_;
    bool done_ = false;
    std::set<std::uint64_t> owned_;
};

Amount min_forward(const std::vector<ProbeEntry>& entries) {
    Amount bottleneck = kUnboundedDemand;
    for (const ProbeEntry& e : entries) bottleneck = std::min(bottleneck, e.forward);
    return entries.empty() ? 0 : bottleneck;
}

// Timed-out commit phase: restore the sender-side holds and push REVERSE
// down every unresolved sub-payment so stranded holds drain too.
std::vector<Outbound> reverse_unsettled(NodeEngine& engine, const CommitCoordinator& coord) {
    std::vector<Outbound> out;
    for (const SubPayment& sub : coord.subs()) {
        if (sub.status != SubStatus::InFlight && sub.status != SubStatus::Acked) continue;
        out.push_back(Outbound{sub.path[1], engine.originate_reverse(sub.trans_id, sub.path)});
    }
    return out;
}

// Elephant pipeline: probe-driven max-flow search, fee-aware split,
// atomic multipath commit.
class ElephantSession final : public SessionBase {
  public:
    ElephantSession(const Payment& payment, const SessionContext& context, bool optimal_split)
        : SessionBase(payment, SizeClass::Elephant, context),
          finder_(context.graph, payment.sender, payment.receiver, payment.demand,
                  context.config.k),
          optimal_split_(optimal_split) {}

    std::vector<Outbound> start() override { return step(finder_.next(std::nullopt)); }

    std::vector<Outbound> on_message(const Message& message) override {
        if (done_) return {};
        if (!committing_) {
            if (message.type != MsgType::ProbeAck || message.trans_id != pending_probe_)
                return {};
            return step(finder_.next(message.capacity));
        }
        auto out = coordinator_->on_reply(message);
        if (coordinator_->settled()) conclude();
        return out;
    }

    std::vector<Outbound> on_quiescent() override {
        if (done_) return {};
        if (!committing_) {
            // lost probe: the path reads as zero capacity
            std::vector<ProbeEntry> zeros(pending_hops_);
            return step(finder_.next(zeros));
        }
        auto out = reverse_unsettled(engine_, *coordinator_);
        fail(FailReason::Timeout);
        return out;
    }

  private:
    std::vector<Outbound> step(std::variant<ProbeRequest, EkResult> state) {
        if (const auto* request = std::get_if<ProbeRequest>(&state)) {
            pending_probe_ = engine_.alloc_trans_id();
            pending_hops_ = request->path.size() - 1;
            return {probe_outbound(pending_probe_, request->path)};
        }
        EkResult result = std::move(std::get<EkResult>(state));
        if (!result.success) {
            fail(FailReason::InsufficientFlow);
            return {};
        }
        SplitProblem problem;
        problem.paths = std::move(result.paths);
        problem.capacities = std::move(result.probed);
        problem.fees = fees_;
        problem.demand = payment_.demand;
        SplitSolution solution =
            optimal_split_ ? solve_min_fee_split(problem) : sequential_fill_split(problem);
        if (!solution.feasible) {
            fail(FailReason::SplitInfeasible);
            return {};
        }
        fee_ = solution.cost;
        std::vector<std::pair<Path, Amount>> subs;
        for (std::size_t p = 0; p < problem.paths.size(); ++p) {
            Amount amount = solution.allocation.amounts[p];
            if (amount > 0) subs.emplace_back(problem.paths.paths[p], amount);
        }
        committing_ = true;
        coordinator_.emplace(engine_);
        auto out = coordinator_->begin(subs);
        for (const SubPayment& sub : coordinator_->subs()) own(sub.trans_id);
        if (coordinator_->settled()) conclude();
        return out;
    }

    void conclude() {
        if (coordinator_->succeeded())
            succeed(coordinator_->subs().size(), fee_);
        else
            fail(FailReason::CommitAborted);
    }

    EkPathfinder finder_;
    bool optimal_split_;
    bool committing_ = false;
    std::uint64_t pending_probe_ = 0;
    std::size_t pending_hops_ = 0;
    Amount fee_ = 0;
    std::optional<CommitCoordinator> coordinator_;
};

// Mice pipeline: cached paths in seeded random order, full demand blind
// first, probe only after a NACK, partial fills, one terminal round.
class MiceSession final : public SessionBase {
  public:
    MiceSession(const Payment& payment, const SessionContext& context)
        : SessionBase(payment, SizeClass::Mice, context),
          rng_(Rng::derive(context.config.seed, kMiceOrderStream, payment.id)) {}

    std::vector<Outbound> start() override {
        TableEntry& entry = table_fetch(table_, graph_, payment_.receiver, config_, now_);
        trial_ = entry.paths;
        rng_.shuffle(trial_);
        remaining_ = payment_.demand;
        return advance();
    }

    std::vector<Outbound> on_message(const Message& message) override {
        if (done_) return {};
        switch (waiting_) {
            case Waiting::CommitReply: {
                if (message.trans_id != pending_trans_) return {};
                if (message.type == MsgType::CommitAck) {
                    SubPayment& sub = *find_sub(pending_trans_);
                    sub.status = SubStatus::Acked;
                    remaining_ -= sub.amount;
                    next_path();
                    return advance();
                }
                if (message.type == MsgType::CommitNack) {
                    find_sub(pending_trans_)->status = SubStatus::Nacked;
                    return after_nack();
                }
                return {};
            }
            case Waiting::ProbeReply: {
                if (message.trans_id != pending_trans_ || message.type != MsgType::ProbeAck)
                    return {};
                Amount bottleneck = min_forward(message.capacity);
                if (bottleneck <= 0) {
                    drop_dead_path();
                    return advance();
                }
                probed_bottleneck_ = bottleneck;
                waiting_ = Waiting::Nothing;
                return advance();
            }
            case Waiting::ConfirmAcks: {
                if (message.type != MsgType::ConfirmAck) return {};
                SubPayment* sub = find_sub(message.trans_id);
                if (!sub || sub->status != SubStatus::Acked) return {};
                sub->status = SubStatus::Confirmed;
                if (--pending_acks_ == 0) {
                    std::vector<std::pair<Path, Amount>> confirmed;
                    for (const SubPayment& s : subs_)
                        if (s.status == SubStatus::Confirmed)
                            confirmed.emplace_back(s.path, s.amount);
                    succeed(confirmed.size(), total_fee(confirmed, fees_));
                }
                return {};
            }
            case Waiting::ReverseAcks: {
                if (message.type != MsgType::ReverseAck) return {};
                SubPayment* sub = find_sub(message.trans_id);
                if (!sub || sub->status != SubStatus::Acked) return {};
                sub->status = SubStatus::Reversed;
                if (--pending_acks_ == 0) fail(FailReason::PathsExhausted);
                return {};
            }
            case Waiting::Nothing: return {};
        }
        return {};
    }

    std::vector<Outbound> on_quiescent() override {
        if (done_) return {};
        switch (waiting_) {
            case Waiting::CommitReply: {
                // the reply is lost: claw back the hold before moving on
                SubPayment& sub = *find_sub(pending_trans_);
                sub.status = SubStatus::Nacked;
                std::vector<Outbound> out{Outbound{
                    sub.path[1], engine_.originate_reverse(sub.trans_id, sub.path)}};
                auto follow = after_nack();
                out.insert(out.end(), follow.begin(), follow.end());
                return out;
            }
            case Waiting::ProbeReply:
                drop_dead_path();
                return advance();
            default:
                fail(FailReason::Timeout);
                return {};
        }
    }

  private:
    enum class Waiting { Nothing, CommitReply, ProbeReply, ConfirmAcks, ReverseAcks };

    SubPayment* find_sub(std::uint64_t trans_id) {
        for (SubPayment& sub : subs_)
            if (sub.trans_id == trans_id) return &sub;
        return nullptr;
    }

    // Issues the next commit: blind full demand on fresh paths, the
    // probed bottleneck share otherwise.
    std::vector<Outbound> advance() {
        while (true) {
            if (remaining_ == 0) return start_confirm();
            if (cursor_ >= trial_.size()) return start_reverse();
            const Path& path = trial_[cursor_];
            Amount send = probed_bottleneck_ ? std::min(remaining_, *probed_bottleneck_)
                                             : remaining_;
            std::uint64_t trans_id = engine_.alloc_trans_id();
            own(trans_id);
            auto message = engine_.originate_commit(trans_id, path, send);
            if (!message) {
                // local zero-message NACK
                if (!probed_bottleneck_) {
                    auto out = begin_probe(path);
                    if (!out.empty()) return out;
                    continue;  // already probed once: path skipped
                }
                next_path();
                continue;
            }
            subs_.push_back(SubPayment{trans_id, path, send, SubStatus::InFlight});
            waiting_ = Waiting::CommitReply;
            pending_trans_ = trans_id;
            return {Outbound{path[1], *message}};
        }
    }

    std::vector<Outbound> after_nack() {
        const Path& path = trial_[cursor_];
        if (!probed_bottleneck_) {
            auto out = begin_probe(path);
            if (!out.empty()) return out;
        } else {
            next_path();
        }
        return advance();
    }

    std::vector<Outbound> begin_probe(const Path& path) {
        if (!probed_.insert(path).second) {
            next_path();
            return {};
        }
        pending_trans_ = engine_.alloc_trans_id();
        waiting_ = Waiting::ProbeReply;
        return {probe_outbound(pending_trans_, path)};
    }

    void drop_dead_path() {
        if (replacements_ < config_.m) {
            auto fresh =
                replace_path(table_, graph_, payment_.receiver, trial_[cursor_], config_);
            if (fresh) {
                ++replacements_;
                trial_.push_back(*fresh);
            }
        }
        next_path();
    }

    void next_path() {
        ++cursor_;
        probed_bottleneck_.reset();
        waiting_ = Waiting::Nothing;
    }

    std::vector<Outbound> start_confirm() {
        std::vector<Outbound> out;
        pending_acks_ = 0;
        for (SubPayment& sub : subs_) {
            if (sub.status != SubStatus::Acked) continue;
            out.push_back(
                Outbound{sub.path[1], engine_.originate_confirm(sub.trans_id, sub.path)});
            ++pending_acks_;
        }
        waiting_ = Waiting::ConfirmAcks;
        if (pending_acks_ == 0) fail(FailReason::PathsExhausted);  // unreachable: demand > 0
        return out;
    }

    std::vector<Outbound> start_reverse() {
        std::vector<Outbound> out;
        pending_acks_ = 0;
        for (SubPayment& sub : subs_) {
            if (sub.status != SubStatus::Acked) continue;
            out.push_back(
                Outbound{sub.path[1], engine_.originate_reverse(sub.trans_id, sub.path)});
            ++pending_acks_;
        }
        waiting_ = Waiting::ReverseAcks;
        if (pending_acks_ == 0) fail(FailReason::PathsExhausted);
        return out;
    }

    Rng rng_;
    std::vector<Path> trial_;
    std::size_t cursor_ = 0;
    Amount remaining_ = 0;
    std::optional<Amount> probed_bottleneck_;
    std::set<Path> probed_;
    std::size_t replacements_ = 0;
    std::vector<SubPayment> subs_;
    Waiting waiting_ = Waiting::Nothing;
    std::uint64_t pending_trans_ = 0;
    std::size_t pending_acks_ = 0;
};

// Fewest-hop single path, full demand, no probing.
class SpSession final : public SessionBase {
  public:
    SpSession(const Payment& payment, SizeClass size_class, const SessionContext& context)
        : SessionBase(payment, size_class, context) {}

    std::vector<Outbound> start() override {
        static const CapacityMatrix kNoKnowledge;
        auto path = bfs_feasible_shortest(graph_, kNoKnowledge, payment_.sender,
                                          payment_.receiver);
        if (!path) {
            fail(FailReason::NoPath);
            return {};
        }
        path_ = std::move(*path);
        coordinator_.emplace(engine_);
        auto out = coordinator_->begin({{path_, payment_.demand}});
        for (const SubPayment& sub : coordinator_->subs()) own(sub.trans_id);
        if (coordinator_->settled()) conclude();
        return out;
    }

    std::vector<Outbound> on_message(const Message& message) override {
        if (done_) return {};
        auto out = coordinator_->on_reply(message);
        if (coordinator_->settled()) conclude();
        return out;
    }

    std::vector<Outbound> on_quiescent() override {
        if (done_) return {};
        auto out = reverse_unsettled(engine_, *coordinator_);
        fail(FailReason::Timeout);
        return out;
    }

  private:
    void conclude() {
        if (coordinator_->succeeded())
            succeed(1, total_fee({{path_, payment_.demand}}, fees_));
        else
            fail(FailReason::CommitAborted);
    }

    Path path_;
    std::optional<CommitCoordinator> coordinator_;
};

// Probes up to four edge-disjoint shortest paths, waterfills the demand
// across the reported bottlenecks, commits atomically.
class SpiderSession final : public SessionBase {
  public:
    SpiderSession(const Payment& payment, SizeClass size_class, const SessionContext& context)
        : SessionBase(payment, size_class, context) {}

    std::vector<Outbound> start() override {
        paths_ = edge_disjoint_shortest_paths(graph_, payment_.sender, payment_.receiver,
                                              kSpiderPathCount);
        if (paths_.empty()) {
            fail(FailReason::InsufficientCapacity);
            return {};
        }
        bottlenecks_.assign(paths_.size(), -1);
        std::vector<Outbound> out;
        for (std::size_t i = 0; i < paths_.size(); ++i) {
            std::uint64_t trans_id = engine_.alloc_trans_id();
            pending_probes_.emplace(trans_id, i);
            out.push_back(probe_outbound(trans_id, paths_[i]));
        }
        return out;
    }

    std::vector<Outbound> on_message(const Message& message) override {
        if (done_) return {};
        if (!committing_) {
            if (message.type != MsgType::ProbeAck) return {};
            auto it = pending_probes_.find(message.trans_id);
            if (it == pending_probes_.end()) return {};
            bottlenecks_[it->second] = std::max<Amount>(min_forward(message.capacity), 0);
            pending_probes_.erase(it);
            if (pending_probes_.empty()) return allocate();
            return {};
        }
        auto out = coordinator_->on_reply(message);
        if (coordinator_->settled()) conclude();
        return out;
    }

    std::vector<Outbound> on_quiescent() override {
        if (done_) return {};
        if (!committing_) {
            // lost probes read as zero capacity
            for (const auto& [trans_id, index] : pending_probes_) bottlenecks_[index] = 0;
            pending_probes_.clear();
            return allocate();
        }
        auto out = reverse_unsettled(engine_, *coordinator_);
        fail(FailReason::Timeout);
        return out;
    }

  private:
    std::vector<Outbound> allocate() {
        auto take = waterfill(bottlenecks_, payment_.demand);
        if (!take) {
            fail(FailReason::InsufficientCapacity);
            return {};
        }
        std::vector<std::pair<Path, Amount>> subs;
        for (std::size_t i = 0; i < paths_.size(); ++i)
            if ((*take)[i] > 0) subs.emplace_back(paths_[i], (*take)[i]);
        subs_ = subs;
        committing_ = true;
        coordinator_.emplace(engine_);
        auto out = coordinator_->begin(subs);
        for (const SubPayment& sub : coordinator_->subs()) own(sub.trans_id);
        if (coordinator_->settled()) conclude();
        return out;
    }

    void conclude() {
        if (coordinator_->succeeded())
            succeed(subs_.size(), total_fee(subs_, fees_));
        else
            fail(FailReason::CommitAborted);
    }

    std::vector<Path> paths_;
    std::vector<Amount> bottlenecks_;
    std::map<std::uint64_t, std::size_t> pending_probes_;
    std::vector<std::pair<Path, Amount>> subs_;
    bool committing_ = false;
    std::optional<CommitCoordinator> coordinator_;
};

}  // namespace

std::unique_ptr<PaymentSession> make_session(RouterKind kind, const Payment& payment,
                                             SizeClass size_class,
                                             const SessionContext& context) {
    validate_config(context.config);
    if (payment.demand <= 0) throw InvalidParameter("payment demand must be positive");
    if (payment.sender == payment.receiver)
        throw InvalidParameter("sender equals receiver");
    switch (kind) {
        case RouterKind::Sp:
            return std::make_unique<SpSession>(payment, size_class, context);
        case RouterKind::Spider:
            return std::make_unique<SpiderSession>(payment, size_class, context);
        case RouterKind::Flash:
        case RouterKind::FlashSeq:
            if (size_class == SizeClass::Mice) {
                if (context.config.m < 1)
                    throw InvalidParameter("mice pipeline requires m >= 1");
                return std::make_unique<MiceSession>(payment, context);
            }
            return std::make_unique<ElephantSession>(payment, context,
                                                     kind == RouterKind::Flash);
    }
    throw InvalidParameter("unknown router kind");
}

}  // namespace flash
