#include "mcesvc/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace mce::wire {

namespace {

static_assert(std::endian::native == std::endian::little,
              "codec assumes a little-endian host");

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t u8() { return bytes_[pos_++]; }

  std::uint16_t u16() {
    std::uint16_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 2);
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool magic_matches(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kMagic.size() &&
         std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) == 0;
}

void check(bool ok, EncodeError::Kind kind, const char* message) {
  if (!ok) throw EncodeError(kind, message);
}

void check_finite(double v, const char* message) {
  check(std::isfinite(v), EncodeError::Kind::kBadFrame, message);
}

}  // namespace

MsgType frame_type(const AccelFrame& frame) {
  struct Visitor {
    MsgType operator()(const Ping&) const { return MsgType::kPing; }
    MsgType operator()(const Pong&) const { return MsgType::kPong; }
    MsgType operator()(const PriceRequest&) const { return MsgType::kPriceRequest; }
    MsgType operator()(const PriceResponse&) const { return MsgType::kPriceResponse; }
    MsgType operator()(const ErrorInfo&) const { return MsgType::kError; }
  };
  return std::visit(Visitor{}, frame.body);
}

const char* to_string(ProtocolError error) {
  switch (error) {
    case ProtocolError::kBadMagic: return "bad_magic";
    case ProtocolError::kBadType: return "bad_type";
    case ProtocolError::kBadLength: return "bad_length";
    case ProtocolError::kBadValue: return "bad_value";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode(const AccelFrame& frame, unsigned max_options) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u8(out, static_cast<std::uint8_t>(frame_type(frame)));
  put_u64(out, frame.request_id);

  if (const auto* req = std::get_if<PriceRequest>(&frame.body)) {
    const std::size_t n = req->options.size();
    check(n >= 1 && n <= max_options && n <= kMaxOptionsPerFrame,
          EncodeError::Kind::kFrameTooLarge,
          "option count out of [1, lane_count]");
    put_u8(out, static_cast<std::uint8_t>(n));
    for (const WireOption& opt : req->options) {
      check_finite(opt.spot, "spot must be finite");
      check_finite(opt.strike, "strike must be finite");
      check_finite(opt.rate, "rate must be finite");
      check_finite(opt.volatility, "volatility must be finite");
      check_finite(opt.expiry, "expiry must be finite");
      check(opt.kind <= 1, EncodeError::Kind::kBadFrame, "kind must be 0 or 1");
      put_f64(out, opt.spot);
      put_f64(out, opt.strike);
      put_f64(out, opt.rate);
      put_f64(out, opt.volatility);
      put_f64(out, opt.expiry);
      put_u8(out, opt.kind);
      put_u32(out, opt.paths);
      put_u64(out, opt.seed);
    }
  } else if (const auto* resp = std::get_if<PriceResponse>(&frame.body)) {
    const std::size_t n = resp->results.size();
    check(n >= 1 && n <= max_options && n <= kMaxOptionsPerFrame,
          EncodeError::Kind::kFrameTooLarge,
          "result count out of [1, lane_count]");
    put_u8(out, static_cast<std::uint8_t>(n));
    for (const WireResult& res : resp->results) {
      check_finite(res.price, "price must be finite");
      check_finite(res.std_error, "std_error must be finite");
      check(static_cast<std::uint8_t>(res.status) <= 2,
            EncodeError::Kind::kBadFrame, "unknown result status");
      put_f64(out, res.price);
      put_f64(out, res.std_error);
      put_u8(out, static_cast<std::uint8_t>(res.status));
    }
  } else if (const auto* err = std::get_if<ErrorInfo>(&frame.body)) {
    check(err->detail.size() <= kMaxDatagram - kHeaderSize - 3,
          EncodeError::Kind::kBadFrame, "error detail too long");
    put_u8(out, err->code);
    put_u16(out, static_cast<std::uint16_t>(err->detail.size()));
    out.insert(out.end(), err->detail.begin(), err->detail.end());
  }
  // Ping/Pong carry no body.

  check(out.size() <= kMaxDatagram, EncodeError::Kind::kFrameTooLarge,
        "frame exceeds datagram limit");
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  if (!magic_matches(bytes)) return {std::nullopt, ProtocolError::kBadMagic};
  if (bytes.size() < kHeaderSize || bytes.size() > kMaxDatagram) {
    return {std::nullopt, ProtocolError::kBadLength};
  }

  Reader r(bytes.subspan(kMagic.size()));
  const std::uint8_t type = r.u8();
  if (type < static_cast<std::uint8_t>(MsgType::kPriceRequest) ||
      type > static_cast<std::uint8_t>(MsgType::kError)) {
    return {std::nullopt, ProtocolError::kBadType};
  }

  AccelFrame frame;
  frame.request_id = r.u64();
  const std::size_t body_len = r.remaining();

  switch (static_cast<MsgType>(type)) {
    case MsgType::kPing:
    case MsgType::kPong: {
      if (body_len != 0) return {std::nullopt, ProtocolError::kBadLength};
      if (static_cast<MsgType>(type) == MsgType::kPing) {
        frame.body = Ping{};
      } else {
        frame.body = Pong{};
      }
      return {frame, {}};
    }
    case MsgType::kPriceRequest: {
      if (body_len < 1) return {std::nullopt, ProtocolError::kBadLength};
      const std::uint8_t count = r.u8();
      if (body_len != 1 + static_cast<std::size_t>(count) * kWireOptionSize) {
        return {std::nullopt, ProtocolError::kBadLength};
      }
      if (count == 0) return {std::nullopt, ProtocolError::kBadValue};
      PriceRequest req;
      req.options.reserve(count);
      for (unsigned i = 0; i < count; ++i) {
        WireOption opt;
        opt.spot = r.f64();
        opt.strike = r.f64();
        opt.rate = r.f64();
        opt.volatility = r.f64();
        opt.expiry = r.f64();
        opt.kind = r.u8();
        opt.paths = r.u32();
        opt.seed = r.u64();
        if (!std::isfinite(opt.spot) || !std::isfinite(opt.strike) ||
            !std::isfinite(opt.rate) || !std::isfinite(opt.volatility) ||
            !std::isfinite(opt.expiry) || opt.kind > 1) {
          return {std::nullopt, ProtocolError::kBadValue};
        }
        req.options.push_back(opt);
      }
      frame.body = std::move(req);
      return {std::move(frame), {}};
    }
    case MsgType::kPriceResponse: {
      if (body_len < 1) return {std::nullopt, ProtocolError::kBadLength};
      const std::uint8_t count = r.u8();
      if (body_len != 1 + static_cast<std::size_t>(count) * kWireResultSize) {
        return {std::nullopt, ProtocolError::kBadLength};
      }
      if (count == 0) return {std::nullopt, ProtocolError::kBadValue};
      PriceResponse resp;
      resp.results.reserve(count);
      for (unsigned i = 0; i < count; ++i) {
        WireResult res;
        res.price = r.f64();
        res.std_error = r.f64();
        const std::uint8_t status = r.u8();
        if (!std::isfinite(res.price) || !std::isfinite(res.std_error) ||
            status > 2) {
          return {std::nullopt, ProtocolError::kBadValue};
        }
        res.status = static_cast<OptionStatus>(status);
        resp.results.push_back(res);
      }
      frame.body = std::move(resp);
      return {std::move(frame), {}};
    }
    case MsgType::kError: {
      if (body_len < 3) return {std::nullopt, ProtocolError::kBadLength};
      ErrorInfo err;
      err.code = r.u8();
      const std::uint16_t detail_len = r.u16();
      if (body_len != 3 + static_cast<std::size_t>(detail_len)) {
        return {std::nullopt, ProtocolError::kBadLength};
      }
      err.detail.resize(detail_len);
      for (unsigned i = 0; i < detail_len; ++i) {
        err.detail[i] = static_cast<char>(r.u8());
      }
      frame.body = std::move(err);
      return {std::move(frame), {}};
    }
  }
  return {std::nullopt, ProtocolError::kBadType};
}

std::optional<std::uint64_t> peek_request_id(std::span<const std::uint8_t> bytes) {
  if (!magic_matches(bytes) || bytes.size() < kHeaderSize) return std::nullopt;
  std::uint64_t id = 0;
  std::memcpy(&id, bytes.data() + 5, 8);
  return id;
}

}  // namespace mce::wire
