#ifndef FLASH_PROTOCOL_HPP
#define FLASH_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flash/flowpath.hpp"
#include "flash/topology.hpp"
#include "flash/types.hpp"

namespace flash {

// Wire format, fixed field order, big-endian throughout:
//   u32 frame length (bytes after the prefix)
//   u64 trans_id
//   u8  type
//   u16 path length, then u32 node ids
//   u16 capacity count, then per entry 4 x u64
//       (forward amount, reverse amount, forward rate ppm, reverse rate ppm)
//   u64 commit amount
// Payload length is always 21 + 4*path + 32*capacity.

enum class MsgType : std::uint8_t {
    Probe = 1,
    ProbeAck = 2,
    Commit = 3,
    CommitAck = 4,
    CommitNack = 5,
    Confirm = 6,
    ConfirmAck = 7,
    Reverse = 8,
    ReverseAck = 9,
};

const char* msg_type_name(MsgType type);

struct Message {
    std::uint64_t trans_id = 0;
    MsgType type = MsgType::Probe;
    Path path;
    std::vector<ProbeEntry> capacity;  // in forward hop order of the original path
    Amount commit = 0;

    bool operator==(const Message&) const = default;
};

struct DecodeError {
    std::string reason;
};

// Throws InvalidParameter when the message breaks its invariants: empty
// path, capacity list longer than path-1, negative amounts, or a nonzero
// commit on a probe-family message.
std::vector<std::uint8_t> encode(const Message& message);

// Expects exactly one complete frame including the length prefix; every
// malformed input comes back as a DecodeError value, never an exception.
std::variant<Message, DecodeError> decode(const std::vector<std::uint8_t>& frame);

// Incremental splitter for frames arriving over a byte stream.
class FrameBuffer {
  public:
    static constexpr std::size_t kMaxFrame = 1 << 20;

    void feed(const std::uint8_t* data, std::size_t size);
    void feed(const std::vector<std::uint8_t>& data) { feed(data.data(), data.size()); }

    // Next complete frame (prefix included), or nullopt until more bytes
    // arrive. Throws ParseError if the stream declares an absurd length;
    // the stream is unrecoverable at that point.
    std::optional<std::vector<std::uint8_t>> next_frame();

    std::size_t buffered() const { return buffer_.size() - consumed_; }

  private:
    std::vector<std::uint8_t> buffer_;
    std::size_t consumed_ = 0;
};

enum class HoldPhase { Committed, Confirmed, Reversed };

// Funds a node subtracted from one of its outgoing channel directions at
// COMMIT time, waiting for the payment to settle one way or the other.
struct PendingHold {
    std::uint64_t trans_id = 0;
    NodeId from = 0;
    NodeId to = 0;
    Amount amount = 0;
    HoldPhase phase = HoldPhase::Committed;
};

struct Outbound {
    NodeId to = 0;
    Message message;
};

// Per-node protocol state machine. Every node runs one; the harness
// serializes calls. The engine mutates only channel directions owned by
// this node (plus the reverse credit of its own outgoing hop, which the
// channel's other endpoint observes but never races on under serialized
// delivery).
class NodeEngine {
  public:
    NodeEngine(NodeId id, Topology& topology) : id_(id), topology_(topology) {}

    NodeId id() const { return id_; }

    std::uint64_t alloc_trans_id() {
        return (static_cast<std::uint64_t>(id_) << 32) | counter_++;
    }

    // Relay/terminal handling for a delivered message. Replies destined
    // for this node as the original sender land in the inbox instead.
    std::vector<Outbound> handle(const Message& message);

    std::vector<Message> take_inbox();

    Message originate_probe(std::uint64_t trans_id, const Path& path) const;

    // Decrements the first hop's balance and records the hold. Returns
    // nullopt when the local balance is short: a zero-message NACK.
    std::optional<Message> originate_commit(std::uint64_t trans_id, const Path& path,
                                            Amount amount);

    Message originate_confirm(std::uint64_t trans_id, const Path& path);

    // Restores this node's hold immediately (the reverse pass starts
    // here) and returns the REVERSE message for the rest of the path.
    Message originate_reverse(std::uint64_t trans_id, const Path& path);

    const std::map<std::uint64_t, PendingHold>& holds() const { return holds_; }
    bool live_holds() const;
    // Drops settled hold records; live ones stay.
    void forget_settled();

    std::size_t protocol_errors() const { return protocol_errors_; }

  private:
    std::size_t position_on(const Path& path) const;
    std::vector<Outbound> on_probe(const Message& message);
    std::vector<Outbound> on_commit(const Message& message);
    std::vector<Outbound> on_commit_nack(const Message& message);
    std::vector<Outbound> on_confirm(const Message& message);
    std::vector<Outbound> on_confirm_ack(const Message& message);
    std::vector<Outbound> on_reverse(const Message& message);
    std::vector<Outbound> relay_or_deliver(const Message& message);

    NodeId id_;
    Topology& topology_;
    std::uint32_t counter_ = 1;
    std::map<std::uint64_t, PendingHold> holds_;
    std::vector<Message> inbox_;
    std::size_t protocol_errors_ = 0;
};

enum class SubStatus { InFlight, Acked, Nacked, Confirmed, Reversed };

struct SubPayment {
    std::uint64_t trans_id = 0;
    Path path;
    Amount amount = 0;
    SubStatus status = SubStatus::InFlight;
};

// Sender-side two-phase commit across the sub-payments of one payment:
// COMMIT everything, then CONFIRM all iff every sub-payment acked, else
// REVERSE the acked ones. Atomicity holds because committed funds only
// move on CONFIRM_ACK.
class CommitCoordinator {
  public:
    explicit CommitCoordinator(NodeEngine& engine) : engine_(engine) {}

    // Issues the COMMIT fan-out. Sub-payments failing the local first-hop
    // balance check are Nacked on the spot with zero messages.
    std::vector<Outbound> begin(const std::vector<std::pair<Path, Amount>>& subs);

    // Feed one terminal reply from the engine inbox; returns the follow-up
    // fan-out when the commit phase resolves.
    std::vector<Outbound> on_reply(const Message& message);

    bool settled() const;
    bool succeeded() const;
    const std::vector<SubPayment>& subs() const { return subs_; }

  private:
    std::vector<Outbound> finalize_if_ready();

    NodeEngine& engine_;
    std::vector<SubPayment> subs_;
    bool begun_ = false;
    bool finalizing_ = false;
    bool abort_ = false;
};

}  // namespace flash

#endif  // FLASH_PROTOCOL_HPP
