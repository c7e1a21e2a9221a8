#include "mcesvc/accel_client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <random>

namespace mce {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t random_id_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

}  // namespace

AccelClient::AccelClient(AccelClientConfig config)
    : config_(std::move(config)), next_id_(random_id_seed()) {}

AccelClient::~AccelClient() { close_socket(); }

void AccelClient::close_socket() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void AccelClient::warm_up() {
  if (fd_ < 0) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) {
      throw BackendError("accel: socket() failed");
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
      close_socket();
      throw BackendError("accel: bad endpoint address: " + config_.host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      close_socket();
      throw BackendError("accel: connect() failed for " + config_.host);
    }
  }
  exchange(wire::Ping{}, wire::MsgType::kPong);
}

wire::PriceResponse AccelClient::price(const wire::PriceRequest& request) {
  if (fd_ < 0) warm_up();
  const wire::AccelFrame reply =
      exchange(request, wire::MsgType::kPriceResponse);
  const auto& response = std::get<wire::PriceResponse>(reply.body);
  if (response.results.size() != request.options.size()) {
    throw BackendError("accel: response option count mismatch");
  }
  return response;
}

wire::AccelFrame AccelClient::exchange(const wire::FrameBody& body,
                                       wire::MsgType expected) {
  std::vector<std::uint8_t> buf(4096);
  for (unsigned attempt = 0; attempt <= config_.retransmits; ++attempt) {
    wire::AccelFrame frame;
    frame.request_id = next_id_++;
    frame.body = body;
    std::vector<std::uint8_t> out;
    try {
      out = wire::encode(frame, config_.max_options);
    } catch (const wire::EncodeError& e) {
      throw BackendError(std::string("accel: encode failed: ") + e.what());
    }
    if (::send(fd_, out.data(), out.size(), 0) < 0) {
      throw BackendError("accel: send() failed");
    }

    const auto deadline =
        Clock::now() + std::chrono::duration<double>(config_.timeout_s);
    for (;;) {
      const auto remaining = deadline - Clock::now();
      if (remaining <= Clock::duration::zero()) break;  // attempt timed out
      const auto remaining_us =
          std::chrono::duration_cast<std::chrono::microseconds>(remaining);
      timeval tv{};
      tv.tv_sec = remaining_us.count() / 1000000;
      tv.tv_usec = std::max<long>(remaining_us.count() % 1000000, 1000);
      ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

      const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
          continue;
        }
        throw BackendError("accel: recv() failed");
      }
      const wire::DecodeResult decoded =
          wire::decode({buf.data(), static_cast<std::size_t>(n)});
      if (!decoded.ok()) {
        throw BackendError(std::string("accel: bad response frame: ") +
                           wire::to_string(decoded.error));
      }
      // Responses to abandoned attempts and duplicated datagrams carry a
      // request_id we are no longer waiting on; drop them and keep reading.
      if (decoded.frame->request_id != frame.request_id) continue;
      const wire::MsgType type = wire::frame_type(*decoded.frame);
      if (type == wire::MsgType::kError) {
        const auto& err = std::get<wire::ErrorInfo>(decoded.frame->body);
        throw BackendError("accel: node error code=" +
                           std::to_string(err.code) + " detail=" + err.detail);
      }
      if (type != expected) {
        throw BackendError("accel: unexpected response type");
      }
      return *decoded.frame;
    }
  }
  throw BackendError("accel: timed out after " +
                     std::to_string(1 + config_.retransmits) + " attempts to " +
                     config_.host + ":" + std::to_string(config_.port));
}

}  // namespace mce
