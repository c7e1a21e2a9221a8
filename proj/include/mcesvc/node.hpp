#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mcesvc/wire.hpp"

namespace mce {

enum class Pacing { kNative, kModeled };

struct NodeConfig {
  std::string bind_host = "127.0.0.1";
  std::uint16_t port = 7771;
  unsigned lanes = 7;
  double per_lane_rate = 0;  // paths/second; 0 disables the throughput model
  Pacing pacing = Pacing::kNative;
  unsigned max_inflight_frames = 4;
  unsigned mc_threads = 1;  // path-level threads per lane pricing call
  bool log_frames = false;

  // Fault injection for loss/duplication testing. dup_responses sends each
  // response that many times; drop_every suppresses the response to every
  // Nth priced frame (0 disables).
  unsigned dup_responses = 1;
  unsigned drop_every = 0;
};

// Throws ValidationError on out-of-domain settings (lanes < 1, modeled
// pacing without a rate, ...).
void validate(const NodeConfig& config);

struct NodeStats {
  std::uint64_t frames_served = 0;
  std::uint64_t options_served = 0;
  std::uint64_t errors = 0;
  std::uint64_t dropped_datagrams = 0;
  double busy_time_s = 0;
};

std::string to_json(const NodeStats& stats);

// Prices one wire option. Domain violations map to kInvalidOption with
// zeroed price fields; anything unexpected maps to kLaneError.
wire::WireResult price_option(const wire::WireOption& option,
                              unsigned mc_threads = 1);

// Semantic contract of one frame: result i corresponds to option i, each
// priced independently. The daemon produces the same results through its
// lane pool.
wire::PriceResponse process_frame(const wire::PriceRequest& request,
                                  const NodeConfig& config);

// The UDP daemon: one receiver loop, a pool of `lanes` lane executors, and
// up to max_inflight_frames frames being assembled concurrently.
class AccelNode {
 public:
  explicit AccelNode(NodeConfig config);
  ~AccelNode();

  AccelNode(const AccelNode&) = delete;
  AccelNode& operator=(const AccelNode&) = delete;

  // Binds the socket and spawns the service threads. Throws
  // std::system_error when the address cannot be bound.
  void start();
  void stop();

  bool running() const { return running_; }
  std::uint16_t port() const { return bound_port_; }
  NodeStats stats() const;

 private:
  struct FrameState;
  struct OptionJob {
    std::shared_ptr<FrameState> frame;
    std::size_t index = 0;
  };

  void receive_loop();
  void dispatch_loop();
  void lane_loop();
  void handle_datagram(const std::uint8_t* data, std::size_t len,
                       const void* from_addr, std::uint32_t from_len);
  void send_datagram(const std::vector<std::uint8_t>& bytes,
                     const void* to_addr, std::uint32_t to_len);
  void send_error(std::uint64_t request_id, wire::NodeError code,
                  const std::string& detail, const void* to, std::uint32_t tolen);

  NodeConfig config_;
  int fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};

  std::thread receiver_;
  std::vector<std::thread> dispatchers_;
  std::vector<std::thread> lane_workers_;

  std::mutex frame_mu_;
  std::condition_variable frame_cv_;
  std::deque<std::shared_ptr<FrameState>> frame_queue_;

  std::mutex lane_mu_;
  std::condition_variable lane_cv_;
  std::deque<OptionJob> lane_queue_;

  std::mutex log_mu_;
  std::atomic<std::uint64_t> frames_served_{0};
  std::atomic<std::uint64_t> options_served_{0};
  std::atomic<std::uint64_t> errors_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> priced_frame_seq_{0};
  std::atomic<std::int64_t> busy_time_us_{0};
};

}  // namespace mce
