#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mce::wire {

// Datagram layout, all multi-byte fields little-endian. This table is
// normative; golden-bytes tests pin it.
//
//   header (13 bytes) : magic[4] = "MCE1" | msg_type[1] | request_id[8]
//   PriceRequest 0x01 : header | option_count[1] | option_count * WireOption
//       WireOption (53 bytes): spot[8] strike[8] rate[8] volatility[8]
//                              expiry[8] kind[1] paths[4] seed[8]
//   PriceResponse 0x02: header | option_count[1] |
//                       option_count * (price[8] std_error[8] status[1])
//   Ping 0x03 / Pong 0x04: header only
//   Error 0x05        : header | code[1] | detail_len[2] | detail (UTF-8)
//
// Every frame fits in a single datagram of at most kMaxDatagram bytes.

inline constexpr std::array<std::uint8_t, 4> kMagic = {0x4D, 0x43, 0x45, 0x31};
inline constexpr std::size_t kHeaderSize = 13;
inline constexpr std::size_t kWireOptionSize = 53;
inline constexpr std::size_t kWireResultSize = 17;
inline constexpr std::size_t kMaxDatagram = 1400;
inline constexpr unsigned kDefaultLaneCount = 7;

// Hard structural cap: the largest option count whose PriceRequest still
// fits in one datagram. Nodes enforce their (smaller) lane bound themselves.
inline constexpr unsigned kMaxOptionsPerFrame =
    static_cast<unsigned>((kMaxDatagram - kHeaderSize - 1) / kWireOptionSize);

enum class MsgType : std::uint8_t {
  kPriceRequest = 0x01,
  kPriceResponse = 0x02,
  kPing = 0x03,
  kPong = 0x04,
  kError = 0x05,
};

enum class OptionStatus : std::uint8_t {
  kOk = 0,
  kInvalidOption = 1,
  kLaneError = 2,
};

// Error-frame codes emitted by the accelerator node.
enum class NodeError : std::uint8_t {
  kFrameTooLarge = 1,
  kMalformed = 2,
  kUnsupported = 3,
};

struct WireOption {
  double spot = 0;
  double strike = 0;
  double rate = 0;
  double volatility = 0;
  double expiry = 0;
  std::uint8_t kind = 0;  // 0 = call, 1 = put
  std::uint32_t paths = 0;
  std::uint64_t seed = 0;

  bool operator==(const WireOption&) const = default;
};

struct WireResult {
  double price = 0;
  double std_error = 0;
  OptionStatus status = OptionStatus::kOk;

  bool operator==(const WireResult&) const = default;
};

struct Ping {
  bool operator==(const Ping&) const = default;
};
struct Pong {
  bool operator==(const Pong&) const = default;
};
struct PriceRequest {
  std::vector<WireOption> options;
  bool operator==(const PriceRequest&) const = default;
};
struct PriceResponse {
  std::vector<WireResult> results;
  bool operator==(const PriceResponse&) const = default;
};
struct ErrorInfo {
  std::uint8_t code = 0;
  std::string detail;
  bool operator==(const ErrorInfo&) const = default;
};

using FrameBody = std::variant<Ping, Pong, PriceRequest, PriceResponse, ErrorInfo>;

struct AccelFrame {
  std::uint64_t request_id = 0;
  FrameBody body;

  bool operator==(const AccelFrame&) const = default;
};

MsgType frame_type(const AccelFrame& frame);

enum class ProtocolError : std::uint8_t {
  kBadMagic,
  kBadType,
  kBadLength,
  kBadValue,
};

const char* to_string(ProtocolError error);

class EncodeError : public std::runtime_error {
 public:
  enum class Kind { kFrameTooLarge, kBadFrame };

  EncodeError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Deterministic serialization per the layout above. Throws EncodeError:
// kFrameTooLarge when a request/response carries zero options or more than
// max_options, kBadFrame on non-finite floats, bad kind/status bytes, or an
// error detail that would overflow the datagram.
std::vector<std::uint8_t> encode(const AccelFrame& frame,
                                 unsigned max_options = kDefaultLaneCount);

// Total decoder: never throws, never reads out of bounds, classifies every
// input as a frame or a ProtocolError.
struct DecodeResult {
  std::optional<AccelFrame> frame;
  ProtocolError error = ProtocolError::kBadMagic;

  bool ok() const { return frame.has_value(); }
};

DecodeResult decode(std::span<const std::uint8_t> bytes);

// Reads magic + request_id without touching the body. Used by the node to
// answer malformed-but-addressable datagrams in-band.
std::optional<std::uint64_t> peek_request_id(std::span<const std::uint8_t> bytes);

}  // namespace mce::wire
