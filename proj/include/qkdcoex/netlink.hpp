#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qkdcoex/bitvec.hpp"

namespace qkdcoex::net {

// ---------------------------------------------------------------------------
// Wire format. One frame on the byte stream is
//
//   "QKDL"  magic                     4 bytes
//   version                           1 byte
//   body length                       u32, little endian
//   body = type byte + payload        length bytes
//   CRC-32 of magic..body             u32, little endian
//
// All multi-byte integers are little endian; doubles travel as the little
// endian bytes of their IEEE-754 representation. Bit vectors travel as a
// u64 bit count followed by the packed bytes (LSB first, zero-padded tail).
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kProtocolVersion = 1;

// Upper bound on the frame body accepted by the decoder; a length field
// beyond this is treated as stream garbage rather than a huge allocation.
inline constexpr std::uint32_t kMaxBodyBytes = 1u << 26;

enum class MsgType : std::uint8_t {
    hello = 1,
    detections_announce = 2,
    sift_decision = 3,
    sample_disclose = 4,
    param_estimate = 5,
    ec_reveal = 6,
    pa_seed = 7,
    key_confirm = 8,
    abort = 9,
};

enum class Role : std::uint8_t { alice = 0, bob = 1 };

// Opening handshake. Both endpoints state who they are and fingerprint the
// run they expect; any disagreement aborts before quantum data moves.
struct Hello {
    Role role = Role::alice;
    std::uint64_t n_frames = 0;
    std::uint32_t frames_per_batch = 0;
    std::uint64_t config_hash = 0;  // fingerprint of the shared parameters
};

// One receiver click on the data line, addressed by position in the frame
// grid of its batch. slot_in_pair is the raw key bit the receiver will use
// if the transmitter keeps this pair.
struct DataClick {
    std::uint16_t frame_off = 0;  // frame index within the batch
    std::uint8_t pair = 0;
    std::uint8_t slot_in_pair = 0;
};

// One receiver click on the monitor line (interferometer output).
struct MonitorClick {
    std::uint16_t frame_off = 0;
    std::uint8_t slot = 0;
};

// Receiver -> transmitter: everything detected in one batch of frames, in
// time order. Carries positions only, never measured values beyond the
// slot index the protocol is allowed to reveal.
struct DetectionsAnnounce {
    std::uint32_t batch = 0;
    std::vector<DataClick> data;
    std::vector<MonitorClick> monitor;
};

// Transmitter -> receiver: keep verdict per announced data click, in the
// order announced. Dropped clicks are decoy pairs and ambiguous doubles.
struct SiftDecision {
    std::uint32_t batch = 0;
    BitVec keep;
};

// Receiver -> transmitter: the random subset of sifted positions it
// discloses for error estimation, with the receiver's bit values.
struct SampleDisclose {
    std::vector<std::uint32_t> indices;  // strictly increasing
    BitVec bits;                         // one per index
};

// Transmitter -> receiver: agreed channel estimates. Both sides apply the
// same abort thresholds and key-length arithmetic to these numbers.
struct ParamEstimate {
    double qber = 0.0;
    double visibility = 0.0;
    std::uint64_t interfering_clicks = 0;
    std::uint64_t noninterfering_clicks = 0;
    std::uint64_t interfering_opportunities = 0;
    std::uint64_t noninterfering_opportunities = 0;
};

// Transmitter -> receiver: reconciliation payload. Error correction is
// modeled as a transfer of the transmitter's undisclosed bits; its real
// cost is charged in the key-length arithmetic, not on the wire.
struct EcReveal {
    BitVec bits;
};

// Transmitter -> receiver: output length and hashing seed for privacy
// amplification. m_total == 0 announces that no key is distillable and
// completes the session cleanly.
struct PaSeed {
    std::uint32_t m_total = 0;
    BitVec seed;
};

// Receiver -> transmitter: the confirmation tag (the tail of the hashed
// key). The transmitter answers with a clean end of stream when the tags
// agree, so a byte-level corruption can never fake a confirmation.
struct KeyConfirm {
    std::uint64_t tag = 0;
};

enum class AbortReason : std::uint8_t {
    qber_limit = 1,         // error rate above the configured threshold
    visibility_limit = 2,   // fringe visibility below the threshold
    insufficient_sample = 3,
    integrity = 4,          // checksum or framing failure on a frame
    protocol = 5,           // well-formed but unexpected or inconsistent
    confirm_mismatch = 6,   // key confirmation tags disagree
    transport = 7,          // stream ended or broke mid-session
    peer = 8,               // the other endpoint announced an abort
};

struct Abort {
    AbortReason reason = AbortReason::protocol;
    std::string text;
};

using Message = std::variant<Hello, DetectionsAnnounce, SiftDecision,
                             SampleDisclose, ParamEstimate, EcReveal, PaSeed,
                             KeyConfirm, Abort>;

MsgType type_of(const Message& m);
const char* to_string(MsgType t);
const char* to_string(AbortReason r);

// Serializes one message into a complete wire frame.
std::vector<std::uint8_t> encode_frame(const Message& m);

// Parses one complete wire frame. Throws FramingError on malformed
// structure, VersionError on a foreign protocol version, IntegrityError on
// a checksum mismatch, ProtocolError on an unknown message type.
Message decode_frame(const std::uint8_t* data, std::size_t len);

// ---------------------------------------------------------------------------
// Transports: ordered, reliable byte streams.
// ---------------------------------------------------------------------------

class Transport {
  public:
    virtual ~Transport() = default;

    // Delivers the whole buffer, preserving order. Throws TransportError
    // on a broken stream.
    virtual void send(const std::uint8_t* data, std::size_t len) = 0;

    // Blocks until at least one byte is available and returns up to
    // max_len of them; returns 0 only at the end of the stream. Throws
    // TransportError on timeouts and broken streams.
    virtual std::size_t recv_some(std::uint8_t* buf, std::size_t max_len) = 0;

    // Ends the stream: the peer drains buffered bytes, then sees EOF.
    // Idempotent.
    virtual void close() = 0;
};

// Sends one message as a single frame.
void write_frame(Transport& t, const Message& m);

// Reads exactly one frame. Returns nullopt at a clean end of stream
// between frames; throws TransportError if the stream ends inside a frame,
// plus anything decode_frame throws.
std::optional<Message> read_frame(Transport& t);

// Connected pair of in-process stream endpoints. Bytes sent on one end
// come out of the other, unbounded buffering, safe for one reader and one
// writer thread per direction. Sending after the peer closed discards the
// bytes, mirroring a half-closed socket. A finite recv_timeout_s bounds
// each read like a socket receive timeout.
std::pair<std::shared_ptr<Transport>, std::shared_ptr<Transport>> make_pipe(
    double recv_timeout_s = std::numeric_limits<double>::infinity());

// Fault injection: simulates an abnormal termination (connection reset) of
// an in-process pipe, as opposed to the deliberate close(). Both
// directions fail immediately — buffered bytes are forfeit, reads on
// either end throw TransportError, writes are discarded. A reset is never
// mistakable for the clean end of stream that close() produces, exactly as
// on a real socket. Throws ValidationError if the transport is not a pipe
// end.
void pipe_fail(Transport& end);

// TCP client connection. Retries refused connections until the timeout so
// the two endpoints may start in either order; throws TransportError when
// the deadline passes. recv_timeout_s bounds each later read.
std::unique_ptr<Transport> tcp_connect(const std::string& host,
                                       std::uint16_t port,
                                       double connect_timeout_s = 10.0,
                                       double recv_timeout_s = 30.0);

// TCP accept side. Binds immediately (port 0 picks an ephemeral port).
class TcpListener {
  public:
    explicit TcpListener(std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }

    // Waits for one connection; throws TransportError on timeout.
    std::unique_ptr<Transport> accept(double timeout_s = 30.0,
                                      double recv_timeout_s = 30.0);

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// ---------------------------------------------------------------------------
// Classical-bandwidth shaping.
// ---------------------------------------------------------------------------

// Token-bucket pacing of the send direction. An infinite rate is a
// passthrough; otherwise long-run goodput converges to rate_bit_s
// regardless of write sizes (a send larger than the bucket waits for the
// deficit, it is never rejected).
struct ShaperConfig {
    double rate_bit_s = std::numeric_limits<double>::infinity();
    double burst_bits = 8.0 * 65536;
};

void validate(const ShaperConfig& c);

class ShapedTransport : public Transport {
  public:
    ShapedTransport(std::shared_ptr<Transport> inner, ShaperConfig config);

    void send(const std::uint8_t* data, std::size_t len) override;
    std::size_t recv_some(std::uint8_t* buf, std::size_t max_len) override;
    void close() override;

  private:
    std::shared_ptr<Transport> inner_;
    ShaperConfig config_;
    // Virtual release clock: the monotonic instant the bucket next frees
    // up. Sleeping until an absolute deadline keeps the long-run goodput
    // exact even when individual sleeps overshoot.
    std::int64_t next_free_ns_ = 0;
};

} // namespace qkdcoex::net
