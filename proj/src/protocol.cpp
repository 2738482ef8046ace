#include "flash/protocol.hpp"

#include <algorithm>
#include <cstring>

namespace flash {

namespace {

constexpr std::size_t kFixedPayload = 21;  // trans_id + type + two counts + commit

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

bool probe_family(MsgType type) {
    return type == MsgType::Probe || type == MsgType::ProbeAck;
}

constexpr std::uint64_t kAmountLimit = static_cast<std::uint64_t>(1) << 63;

}  // namespace

const char* msg_type_name(MsgType type) {
    switch (type) {
        case MsgType::Probe: return "PROBE";
        case MsgType::ProbeAck: return "PROBE_ACK";
        case MsgType::Commit: return "COMMIT";
        case MsgType::CommitAck: return "COMMIT_ACK";
        case MsgType::CommitNack: return "COMMIT_NACK";
        case MsgType::Confirm: return "CONFIRM";
        case MsgType::ConfirmAck: return "CONFIRM_ACK";
        case MsgType::Reverse: return "REVERSE";
        case MsgType::ReverseAck: return "REVERSE_ACK";
    }
    return "UNKNOWN";
}

std::vector<std::uint8_t> encode(const Message& message) {
    if (message.path.empty()) throw InvalidParameter("encode: empty path");
    if (message.path.size() > 0xffff) throw InvalidParameter("encode: path too long");
    if (message.capacity.size() + 1 > message.path.size())
        throw InvalidParameter("encode: capacity list longer than path-1");
    if (message.commit < 0) throw InvalidParameter("encode: negative commit");
    if (probe_family(message.type) && message.commit != 0)
        throw InvalidParameter("encode: probe messages carry no commit amount");
    for (const ProbeEntry& entry : message.capacity)
        if (entry.forward < 0 || entry.reverse < 0)
            throw InvalidParameter("encode: negative capacity entry");

    std::size_t payload =
        kFixedPayload + 4 * message.path.size() + 32 * message.capacity.size();
    std::vector<std::uint8_t> out;
    out.reserve(payload + 4);
    put_u32(out, static_cast<std::uint32_t>(payload));
    put_u64(out, message.trans_id);
    out.push_back(static_cast<std::uint8_t>(message.type));
    put_u16(out, static_cast<std::uint16_t>(message.path.size()));
    for (NodeId id : message.path) put_u32(out, id);
    put_u16(out, static_cast<std::uint16_t>(message.capacity.size()));
    for (const ProbeEntry& entry : message.capacity) {
        put_u64(out, static_cast<std::uint64_t>(entry.forward));
        put_u64(out, static_cast<std::uint64_t>(entry.reverse));
        put_u64(out, entry.forward_rate_ppm);
        put_u64(out, entry.reverse_rate_ppm);
    }
    put_u64(out, static_cast<std::uint64_t>(message.commit));
    return out;
}

std::variant<Message, DecodeError> decode(const std::vector<std::uint8_t>& frame) {
    if (frame.size() < 4) return DecodeError{"truncated length prefix"};
    std::uint32_t declared = get_u32(frame.data());
    if (frame.size() != static_cast<std::size_t>(declared) + 4)
        return DecodeError{"frame size does not match length prefix"};
    if (declared < kFixedPayload) return DecodeError{"payload shorter than fixed fields"};

    const std::uint8_t* p = frame.data() + 4;
    Message msg;
    msg.trans_id = get_u64(p);
    std::uint8_t raw_type = p[8];
    if (raw_type < 1 || raw_type > 9) return DecodeError{"unknown message type"};
    msg.type = static_cast<MsgType>(raw_type);

    std::size_t path_len = get_u16(p + 9);
    if (path_len == 0) return DecodeError{"empty path"};
    if (declared < kFixedPayload + 4 * path_len) return DecodeError{"truncated path"};
    std::size_t offset = 11;
    msg.path.reserve(path_len);
    for (std::size_t i = 0; i < path_len; ++i, offset += 4)
        msg.path.push_back(get_u32(p + offset));

    std::size_t cap_count = get_u16(p + offset);
    offset += 2;
    if (declared != kFixedPayload + 4 * path_len + 32 * cap_count)
        return DecodeError{"length prefix disagrees with field counts"};
    if (cap_count + 1 > path_len) return DecodeError{"capacity list longer than path-1"};
    msg.capacity.reserve(cap_count);
    for (std::size_t i = 0; i < cap_count; ++i) {
        std::uint64_t fwd = get_u64(p + offset);
        std::uint64_t rev = get_u64(p + offset + 8);
        if (fwd >= kAmountLimit || rev >= kAmountLimit)
            return DecodeError{"capacity amount out of range"};
        ProbeEntry entry;
        entry.forward = static_cast<Amount>(fwd);
        entry.reverse = static_cast<Amount>(rev);
        entry.forward_rate_ppm = get_u64(p + offset + 16);
        entry.reverse_rate_ppm = get_u64(p + offset + 24);
        msg.capacity.push_back(entry);
        offset += 32;
    }

    std::uint64_t commit = get_u64(p + offset);
    if (commit >= kAmountLimit) return DecodeError{"commit amount out of range"};
    msg.commit = static_cast<Amount>(commit);
    if (probe_family(msg.type) && msg.commit != 0)
        return DecodeError{"probe message carries a commit amount"};
    return msg;
}

void FrameBuffer::feed(const std::uint8_t* data, std::size_t size) {
    buffer_.insert(buffer_.end(), data, data + size);
}

std::optional<std::vector<std::uint8_t>> FrameBuffer::next_frame() {
    std::size_t avail = buffer_.size() - consumed_;
    if (avail < 4) return std::nullopt;
    std::uint32_t declared = get_u32(buffer_.data() + consumed_);
    if (declared > kMaxFrame) throw IoError("frame length exceeds limit");
    std::size_t total = static_cast<std::size_t>(declared) + 4;
    if (avail < total) return std::nullopt;
    std::vector<std::uint8_t> frame(buffer_.begin() + consumed_,
                                    buffer_.begin() + consumed_ + total);
    consumed_ += total;
    if (consumed_ == buffer_.size() || consumed_ > 65536) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + consumed_);
        consumed_ = 0;
    }
    return frame;
}

std::size_t NodeEngine::position_on(const Path& path) const {
    for (std::size_t i = 0; i < path.size(); ++i)
        if (path[i] == id_) return i;
    return path.size();
}

std::vector<Outbound> NodeEngine::handle(const Message& message) {
    switch (message.type) {
        case MsgType::Probe: return on_probe(message);
        case MsgType::Commit: return on_commit(message);
        case MsgType::CommitNack: return on_commit_nack(message);
        case MsgType::Confirm: return on_confirm(message);
        case MsgType::ConfirmAck: return on_confirm_ack(message);
        case MsgType::Reverse: return on_reverse(message);
        case MsgType::ProbeAck:
        case MsgType::CommitAck:
        case MsgType::ReverseAck: return relay_or_deliver(message);
    }
    ++protocol_errors_;
    return {};
}

std::vector<Message> NodeEngine::take_inbox() {
    std::vector<Message> out;
    out.swap(inbox_);
    return out;
}

// Pure relays: acks travel their (already reversed) path; the node at the
// far end is the original sender and consumes the message.
std::vector<Outbound> NodeEngine::relay_or_deliver(const Message& message) {
    std::size_t pos = position_on(message.path);
    if (pos >= message.path.size()) {
        ++protocol_errors_;
        return {};
    }
    if (pos + 1 == message.path.size()) {
        inbox_.push_back(message);
        return {};
    }
    return {Outbound{message.path[pos + 1], message}};
}

std::vector<Outbound> NodeEngine::on_probe(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last || message.capacity.size() != pos - 1) {
        ++protocol_errors_;
        return {};
    }
    NodeId prev = message.path[pos - 1];
    if (!topology_.has_channel(prev, id_)) {
        ++protocol_errors_;  // probe dropped; sender times out
        return {};
    }
    Message next = message;
    ProbeEntry entry;
    entry.forward = topology_.balance(prev, id_);
    entry.reverse = topology_.balance(id_, prev);
    entry.forward_rate_ppm = topology_.fee(prev, id_).rate_ppm;
    entry.reverse_rate_ppm = topology_.fee(id_, prev).rate_ppm;
    next.capacity.push_back(entry);

    if (pos < last) {
        if (!topology_.has_channel(id_, message.path[pos + 1])) {
            ++protocol_errors_;
            return {};
        }
        return {Outbound{message.path[pos + 1], next}};
    }
    next.type = MsgType::ProbeAck;
    std::reverse(next.path.begin(), next.path.end());
    return {Outbound{next.path[1], next}};
}

std::vector<Outbound> NodeEngine::on_commit(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last || message.commit <= 0) {
        ++protocol_errors_;
        return {};
    }
    if (pos == last) {
        // Receiver: acknowledge along the reversed path.
        Message ack = message;
        ack.type = MsgType::CommitAck;
        std::reverse(ack.path.begin(), ack.path.end());
        return {Outbound{ack.path[1], ack}};
    }
    if (holds_.count(message.trans_id)) {
        ++protocol_errors_;  // duplicate COMMIT, idempotent rejection
        return {};
    }
    NodeId next_hop = message.path[pos + 1];
    bool held = topology_.has_channel(id_, next_hop) &&
                topology_.withdraw(id_, next_hop, message.commit);
    if (!held) {
        Message nack;
        nack.trans_id = message.trans_id;
        nack.type = MsgType::CommitNack;
        nack.path.assign(message.path.rend() - (pos + 1), message.path.rend());
        nack.commit = message.commit;
        return {Outbound{nack.path[1], nack}};
    }
    holds_[message.trans_id] =
        PendingHold{message.trans_id, id_, next_hop, message.commit, HoldPhase::Committed};
    return {Outbound{next_hop, message}};
}

// The NACK path is the reversed prefix of the forward path, so each node
// it visits (other than the origin) holds funds for this trans_id and
// releases them while relaying upstream.
std::vector<Outbound> NodeEngine::on_commit_nack(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last) {
        ++protocol_errors_;
        return {};
    }
    auto it = holds_.find(message.trans_id);
    if (it != holds_.end() && it->second.phase == HoldPhase::Committed) {
        topology_.deposit(it->second.from, it->second.to, it->second.amount);
        it->second.phase = HoldPhase::Reversed;
    } else {
        ++protocol_errors_;
    }
    if (pos == last) {
        inbox_.push_back(message);
        return {};
    }
    return {Outbound{message.path[pos + 1], message}};
}

std::vector<Outbound> NodeEngine::on_confirm(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last) {
        ++protocol_errors_;
        return {};
    }
    if (pos == last) {
        Message ack = message;
        ack.type = MsgType::ConfirmAck;
        std::reverse(ack.path.begin(), ack.path.end());
        return {Outbound{ack.path[1], ack}};
    }
    if (!holds_.count(message.trans_id)) {
        ++protocol_errors_;  // unknown trans_id: log and drop
        return {};
    }
    return {Outbound{message.path[pos + 1], message}};
}

// Funds move on the ack pass: each hold owner credits the reverse
// direction of its outgoing channel, completing the transfer.
std::vector<Outbound> NodeEngine::on_confirm_ack(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last) {
        ++protocol_errors_;
        return {};
    }
    auto it = holds_.find(message.trans_id);
    if (it != holds_.end() && it->second.phase == HoldPhase::Committed) {
        topology_.deposit(it->second.to, it->second.from, it->second.amount);
        it->second.phase = HoldPhase::Confirmed;
    } else if (it == holds_.end()) {
        ++protocol_errors_;
    }
    if (pos == last) {
        inbox_.push_back(message);
        return {};
    }
    return {Outbound{message.path[pos + 1], message}};
}

std::vector<Outbound> NodeEngine::on_reverse(const Message& message) {
    std::size_t pos = position_on(message.path);
    std::size_t last = message.path.size() - 1;
    if (pos == 0 || pos > last) {
        ++protocol_errors_;
        return {};
    }
    if (pos == last) {
        Message ack = message;
        ack.type = MsgType::ReverseAck;
        std::reverse(ack.path.begin(), ack.path.end());
        return {Outbound{ack.path[1], ack}};
    }
    auto it = holds_.find(message.trans_id);
    if (it != holds_.end() && it->second.phase == HoldPhase::Committed) {
        topology_.deposit(it->second.from, it->second.to, it->second.amount);
        it->second.phase = HoldPhase::Reversed;
    } else if (it == holds_.end()) {
        ++protocol_errors_;
    }
    return {Outbound{message.path[pos + 1], message}};
}

Message NodeEngine::originate_probe(std::uint64_t trans_id, const Path& path) const {
    if (!path_is_simple(path) || path.front() != id_)
        throw InvalidParameter("probe path must start at this node");
    Message msg;
    msg.trans_id = trans_id;
    msg.type = MsgType::Probe;
    msg.path = path;
    return msg;
}

std::optional<Message> NodeEngine::originate_commit(std::uint64_t trans_id,
                                                    const Path& path, Amount amount) {
    if (!path_is_simple(path) || path.front() != id_)
        throw InvalidParameter("commit path must start at this node");
    if (amount <= 0) throw InvalidParameter("commit amount must be positive");
    if (holds_.count(trans_id)) throw InvalidParameter("trans_id already in use");
    if (!topology_.has_channel(id_, path[1]) ||
        !topology_.withdraw(id_, path[1], amount))
        return std::nullopt;
    holds_[trans_id] = PendingHold{trans_id, id_, path[1], amount, HoldPhase::Committed};
    Message msg;
    msg.trans_id = trans_id;
    msg.type = MsgType::Commit;
    msg.path = path;
    msg.commit = amount;
    return msg;
}

Message NodeEngine::originate_confirm(std::uint64_t trans_id, const Path& path) {
    auto it = holds_.find(trans_id);
    if (it == holds_.end() || it->second.phase != HoldPhase::Committed)
        throw InvalidParameter("confirm without a live hold");
    Message msg;
    msg.trans_id = trans_id;
    msg.type = MsgType::Confirm;
    msg.path = path;
    msg.commit = it->second.amount;
    return msg;
}

Message NodeEngine::originate_reverse(std::uint64_t trans_id, const Path& path) {
    auto it = holds_.find(trans_id);
    if (it == holds_.end() || it->second.phase != HoldPhase::Committed)
        throw InvalidParameter("reverse without a live hold");
    topology_.deposit(it->second.from, it->second.to, it->second.amount);
    it->second.phase = HoldPhase::Reversed;
    Message msg;
    msg.trans_id = trans_id;
    msg.type = MsgType::Reverse;
    msg.path = path;
    msg.commit = it->second.amount;
    return msg;
}

bool NodeEngine::live_holds() const {
    for (const auto& [id, hold] : holds_)
        if (hold.phase == HoldPhase::Committed) return true;
    return false;
}

void NodeEngine::forget_settled() {
    for (auto it = holds_.begin(); it != holds_.end();) {
        if (it->second.phase == HoldPhase::Committed)
            ++it;
        else
            it = holds_.erase(it);
    }
}

std::vector<Outbound> CommitCoordinator::begin(
    const std::vector<std::pair<Path, Amount>>& subs) {
    if (begun_) throw InvalidParameter("coordinator reused");
    begun_ = true;
    std::vector<Outbound> out;
    for (const auto& [path, amount] : subs) {
        SubPayment sub;
        sub.trans_id = engine_.alloc_trans_id();
        sub.path = path;
        sub.amount = amount;
        auto msg = engine_.originate_commit(sub.trans_id, path, amount);
        if (msg) {
            sub.status = SubStatus::InFlight;
            out.push_back(Outbound{path[1], *msg});
        } else {
            sub.status = SubStatus::Nacked;  // local zero-message NACK
            abort_ = true;
        }
        subs_.push_back(std::move(sub));
    }
    auto follow = finalize_if_ready();
    out.insert(out.end(), follow.begin(), follow.end());
    return out;
}

std::vector<Outbound> CommitCoordinator::on_reply(const Message& message) {
    SubPayment* sub = nullptr;
    for (SubPayment& s : subs_)
        if (s.trans_id == message.trans_id) sub = &s;
    if (!sub) return {};

    switch (message.type) {
        case MsgType::CommitAck:
            if (sub->status == SubStatus::InFlight) sub->status = SubStatus::Acked;
            break;
        case MsgType::CommitNack:
            if (sub->status == SubStatus::InFlight) {
                sub->status = SubStatus::Nacked;
                abort_ = true;
            }
            break;
        case MsgType::ConfirmAck:
            if (sub->status == SubStatus::Acked) sub->status = SubStatus::Confirmed;
            break;
        case MsgType::ReverseAck:
            if (sub->status == SubStatus::Acked) sub->status = SubStatus::Reversed;
            break;
        default: return {};
    }
    return finalize_if_ready();
}

std::vector<Outbound> CommitCoordinator::finalize_if_ready() {
    if (finalizing_) return {};
    for (const SubPayment& sub : subs_)
        if (sub.status == SubStatus::InFlight) return {};
    finalizing_ = true;
    std::vector<Outbound> out;
    for (SubPayment& sub : subs_) {
        if (sub.status != SubStatus::Acked) continue;
        Message msg = abort_ ? engine_.originate_reverse(sub.trans_id, sub.path)
                             : engine_.originate_confirm(sub.trans_id, sub.path);
        out.push_back(Outbound{sub.path[1], msg});
    }
    return out;
}

bool CommitCoordinator::settled() const {
    if (!begun_) return false;
    for (const SubPayment& sub : subs_) {
        if (sub.status == SubStatus::InFlight || sub.status == SubStatus::Acked)
            return false;
    }
    return true;
}

bool CommitCoordinator::succeeded() const {
    if (!settled() || abort_) return false;
    for (const SubPayment& sub : subs_)
        if (sub.status != SubStatus::Confirmed) return false;
    return true;
}

}  // namespace flash
