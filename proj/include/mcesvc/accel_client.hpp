#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "mcesvc/wire.hpp"

namespace mce {

// Worker-level failure: the backend could not produce results at all
// (accel timeout after the retransmit, protocol violation, node-reported
// frame error). Per-option domain problems are reported in-band instead.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& message)
      : std::runtime_error(message) {}
};

struct AccelClientConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7771;
  double timeout_s = 0.5;    // budget per attempt
  unsigned retransmits = 1;  // extra attempts after the first
  unsigned max_options = wire::kDefaultLaneCount;
};

// UDP request/response client for one accelerator node. Each price() call
// is a single datagram exchange. A timed-out attempt is retried under a
// fresh request_id, so late or duplicated responses to an abandoned
// attempt are recognized by id and discarded.
class AccelClient {
 public:
  explicit AccelClient(AccelClientConfig config);
  ~AccelClient();

  AccelClient(const AccelClient&) = delete;
  AccelClient& operator=(const AccelClient&) = delete;

  // Opens the socket and exchanges one Ping/Pong. This is the whole
  // warm-up cost of the remote backend; price() calls it lazily if needed.
  void warm_up();
  bool warm() const { return fd_ >= 0; }

  // One frame round trip. Throws BackendError on timeout (after the
  // retransmit), on a node Error frame, or on a malformed response.
  wire::PriceResponse price(const wire::PriceRequest& request);

 private:
  wire::AccelFrame exchange(const wire::FrameBody& body,
                            wire::MsgType expected);
  void close_socket();

  AccelClientConfig config_;
  int fd_ = -1;
  std::uint64_t next_id_;
};

}  // namespace mce
