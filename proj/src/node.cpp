#include "mcesvc/node.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <system_error>

#include "mcesvc/pricing.hpp"

namespace mce {

namespace {

using Clock = std::chrono::steady_clock;

OptionSpec to_spec(const wire::WireOption& opt) {
  OptionSpec spec;
  spec.spot = opt.spot;
  spec.strike = opt.strike;
  spec.rate = opt.rate;
  spec.volatility = opt.volatility;
  spec.expiry = opt.expiry;
  spec.kind = opt.kind == 0 ? OptionKind::kCall : OptionKind::kPut;
  return spec;
}

}  // namespace

void validate(const NodeConfig& config) {
  if (config.lanes < 1) {
    throw ValidationError("lanes", "lane count must be at least 1");
  }
  if (config.lanes > wire::kMaxOptionsPerFrame) {
    throw ValidationError("lanes", "lane count exceeds per-frame option cap");
  }
  if (config.per_lane_rate < 0 || !std::isfinite(config.per_lane_rate)) {
    throw ValidationError("rate", "per-lane rate must be non-negative");
  }
  if (config.pacing == Pacing::kModeled && config.per_lane_rate <= 0) {
    throw ValidationError("rate", "modeled pacing requires a positive rate");
  }
  if (config.max_inflight_frames < 1) {
    throw ValidationError("max-inflight", "in-flight frame limit must be at least 1");
  }
}

std::string to_json(const NodeStats& stats) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"frames_served\":%llu,\"options_served\":%llu,"
                "\"errors\":%llu,\"dropped_datagrams\":%llu,"
                "\"busy_time_s\":%.6f}",
                static_cast<unsigned long long>(stats.frames_served),
                static_cast<unsigned long long>(stats.options_served),
                static_cast<unsigned long long>(stats.errors),
                static_cast<unsigned long long>(stats.dropped_datagrams),
                stats.busy_time_s);
  return buf;
}

wire::WireResult price_option(const wire::WireOption& option,
                              unsigned mc_threads) {
  wire::WireResult result;
  try {
    const SimParams sim{option.paths, option.seed};
    const PriceEstimate est = price_mc(to_spec(option), sim, mc_threads);
    result.price = est.price;
    result.std_error = est.std_error;
    result.status = wire::OptionStatus::kOk;
  } catch (const ValidationError&) {
    result = {0.0, 0.0, wire::OptionStatus::kInvalidOption};
  } catch (...) {
    result = {0.0, 0.0, wire::OptionStatus::kLaneError};
  }
  return result;
}

wire::PriceResponse process_frame(const wire::PriceRequest& request,
                                  const NodeConfig& config) {
  wire::PriceResponse response;
  response.results.reserve(request.options.size());
  for (const wire::WireOption& opt : request.options) {
    response.results.push_back(price_option(opt, config.mc_threads));
  }
  return response;
}

struct AccelNode::FrameState {
  std::uint64_t request_id = 0;
  wire::PriceRequest request;
  wire::PriceResponse response;
  Clock::time_point receipt;
  sockaddr_in from{};
  socklen_t from_len = 0;
  std::atomic<std::size_t> pending{0};
  std::mutex mu;
  std::condition_variable done_cv;
};

AccelNode::AccelNode(NodeConfig config) : config_(std::move(config)) {
  validate(config_);
}

AccelNode::~AccelNode() { stop(); }

void AccelNode::start() {
  if (running_) return;
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) {
    throw std::system_error(errno, std::generic_category(), "socket");
  }

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    throw std::system_error(EINVAL, std::generic_category(),
                            "bad bind address: " + config_.bind_host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw std::system_error(err, std::generic_category(),
                            "bind " + config_.bind_host);
  }
  socklen_t alen = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
  bound_port_ = ntohs(addr.sin_port);

  timeval tv{};
  tv.tv_usec = 50 * 1000;  // poll the stop flag every 50ms
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  stopping_ = false;
  running_ = true;
  receiver_ = std::thread(&AccelNode::receive_loop, this);
  for (unsigned i = 0; i < config_.max_inflight_frames; ++i) {
    dispatchers_.emplace_back(&AccelNode::dispatch_loop, this);
  }
  for (unsigned i = 0; i < config_.lanes; ++i) {
    lane_workers_.emplace_back(&AccelNode::lane_loop, this);
  }
}

void AccelNode::stop() {
  if (!running_) return;
  stopping_ = true;
  frame_cv_.notify_all();
  lane_cv_.notify_all();
  if (receiver_.joinable()) receiver_.join();
  for (auto& t : dispatchers_) t.join();
  dispatchers_.clear();
  for (auto& t : lane_workers_) t.join();
  lane_workers_.clear();
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  running_ = false;
}

NodeStats AccelNode::stats() const {
  NodeStats s;
  s.frames_served = frames_served_;
  s.options_served = options_served_;
  s.errors = errors_;
  s.dropped_datagrams = dropped_;
  s.busy_time_s = static_cast<double>(busy_time_us_) * 1e-6;
  return s;
}

void AccelNode::send_datagram(const std::vector<std::uint8_t>& bytes,
                              const void* to_addr, std::uint32_t to_len) {
  ::sendto(fd_, bytes.data(), bytes.size(), 0,
           static_cast<const sockaddr*>(to_addr), to_len);
}

void AccelNode::send_error(std::uint64_t request_id, wire::NodeError code,
                           const std::string& detail, const void* to,
                           std::uint32_t tolen) {
  errors_.fetch_add(1, std::memory_order_relaxed);
  wire::AccelFrame frame;
  frame.request_id = request_id;
  frame.body = wire::ErrorInfo{static_cast<std::uint8_t>(code), detail};
  send_datagram(wire::encode(frame), to, tolen);
}

void AccelNode::receive_loop() {
  std::vector<std::uint8_t> buf(4096);
  sockaddr_in from{};
  while (!stopping_) {
    socklen_t from_len = sizeof from;
    const ssize_t n =
        ::recvfrom(fd_, buf.data(), buf.size(), 0,
                   reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      break;
    }
    handle_datagram(buf.data(), static_cast<std::size_t>(n), &from, from_len);
  }
}

void AccelNode::handle_datagram(const std::uint8_t* data, std::size_t len,
                                const void* from_addr, std::uint32_t from_len) {
  const auto receipt = Clock::now();
  const std::span<const std::uint8_t> bytes(data, len);
  const wire::DecodeResult decoded = wire::decode(bytes);

  if (!decoded.ok()) {
    // Datagrams that do not even carry our magic are treated as line noise
    // and dropped, mimicking hardware filtering. Addressable garbage gets an
    // in-band error.
    const auto id = wire::peek_request_id(bytes);
    if (!id) {
      dropped_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    send_error(*id, wire::NodeError::kMalformed, to_string(decoded.error),
               from_addr, from_len);
    return;
  }

  const wire::AccelFrame& frame = *decoded.frame;
  switch (wire::frame_type(frame)) {
    case wire::MsgType::kPing: {
      wire::AccelFrame pong;
      pong.request_id = frame.request_id;
      pong.body = wire::Pong{};
      send_datagram(wire::encode(pong), from_addr, from_len);
      return;
    }
    case wire::MsgType::kPriceRequest: {
      const auto& request = std::get<wire::PriceRequest>(frame.body);
      if (request.options.size() > config_.lanes) {
        send_error(frame.request_id, wire::NodeError::kFrameTooLarge,
                   "option count exceeds lane count", from_addr, from_len);
        return;
      }
      auto state = std::make_shared<FrameState>();
      state->request_id = frame.request_id;
      state->request = request;
      state->receipt = receipt;
      std::memcpy(&state->from, from_addr, from_len);
      state->from_len = from_len;
      {
        // Bounding the queue applies backpressure through the socket buffer
        // once max_inflight_frames frames are being assembled.
        std::unique_lock lock(frame_mu_);
        frame_cv_.wait(lock, [&] {
          return stopping_ ||
                 frame_queue_.size() < config_.max_inflight_frames;
        });
        if (stopping_) return;
        frame_queue_.push_back(std::move(state));
      }
      frame_cv_.notify_all();
      return;
    }
    default:
      send_error(frame.request_id, wire::NodeError::kUnsupported,
                 "unexpected message type", from_addr, from_len);
      return;
  }
}

void AccelNode::dispatch_loop() {
  while (true) {
    std::shared_ptr<FrameState> frame;
    {
      std::unique_lock lock(frame_mu_);
      frame_cv_.wait(lock, [&] { return stopping_ || !frame_queue_.empty(); });
      if (stopping_) return;
      frame = std::move(frame_queue_.front());
      frame_queue_.pop_front();
    }
    frame_cv_.notify_all();

    const std::size_t n = frame->request.options.size();
    frame->response.results.resize(n);
    frame->pending = n;
    {
      std::lock_guard lock(lane_mu_);
      for (std::size_t i = 0; i < n; ++i) {
        lane_queue_.push_back(OptionJob{frame, i});
      }
    }
    lane_cv_.notify_all();
    {
      std::unique_lock lock(frame->mu);
      frame->done_cv.wait(lock, [&] { return frame->pending.load() == 0; });
    }

    if (config_.pacing == Pacing::kModeled && config_.per_lane_rate > 0) {
      std::uint32_t max_paths = 0;
      for (const auto& opt : frame->request.options) {
        max_paths = std::max(max_paths, opt.paths);
      }
      const auto target =
          frame->receipt + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(
                                   max_paths / config_.per_lane_rate));
      std::this_thread::sleep_until(target);
    }

    const std::uint64_t seq =
        priced_frame_seq_.fetch_add(1, std::memory_order_relaxed) + 1;
    const bool drop =
        config_.drop_every > 0 && seq % config_.drop_every == 0;
    if (!drop) {
      wire::AccelFrame out;
      out.request_id = frame->request_id;
      out.body = frame->response;
      const auto bytes = wire::encode(out, config_.lanes);
      for (unsigned i = 0; i < std::max(1u, config_.dup_responses); ++i) {
        send_datagram(bytes, &frame->from, frame->from_len);
      }
    }

    const double service_us =
        std::chrono::duration<double, std::micro>(Clock::now() - frame->receipt)
            .count();
    frames_served_.fetch_add(1, std::memory_order_relaxed);
    options_served_.fetch_add(n, std::memory_order_relaxed);
    busy_time_us_.fetch_add(static_cast<std::int64_t>(service_us),
                            std::memory_order_relaxed);
    if (config_.log_frames) {
      std::lock_guard lock(log_mu_);
      std::printf("frame request_id=%llu options=%zu service_time_us=%.0f%s\n",
                  static_cast<unsigned long long>(frame->request_id), n,
                  service_us, drop ? " dropped=1" : "");
      std::fflush(stdout);
    }
  }
}

void AccelNode::lane_loop() {
  while (true) {
    OptionJob job;
    {
      std::unique_lock lock(lane_mu_);
      lane_cv_.wait(lock, [&] { return stopping_ || !lane_queue_.empty(); });
      if (stopping_) return;
      job = std::move(lane_queue_.front());
      lane_queue_.pop_front();
    }
    const wire::WireOption& opt = job.frame->request.options[job.index];
    const wire::WireResult result = price_option(opt, config_.mc_threads);
    {
      std::lock_guard lock(job.frame->mu);
      job.frame->response.results[job.index] = result;
      if (job.frame->pending.fetch_sub(1) == 1) {
        job.frame->done_cv.notify_all();
      }
    }
  }
}

}  // namespace mce
