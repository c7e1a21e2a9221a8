#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "mcesvc/wire.hpp"

using namespace mce::wire;

namespace {

std::vector<std::uint8_t> le64(std::uint64_t v) {
  std::vector<std::uint8_t> out(8);
  std::memcpy(out.data(), &v, 8);
  return out;
}

std::vector<std::uint8_t> le_double(double v) {
  return le64(std::bit_cast<std::uint64_t>(v));
}

WireOption sample_option() {
  WireOption opt;
  opt.spot = 100.0;
  opt.strike = 95.5;
  opt.rate = 0.05;
  opt.volatility = 0.2;
  opt.expiry = 1.5;
  opt.kind = 1;
  opt.paths = 500000;
  opt.seed = 0x1122334455667788ULL;
  return opt;
}

}  // namespace

TEST_CASE("golden bytes: ping and pong headers") {
  AccelFrame ping;
  ping.request_id = 0;
  ping.body = Ping{};
  const auto bytes = encode(ping);
  const std::vector<std::uint8_t> expected = {0x4D, 0x43, 0x45, 0x31, 0x03,
                                              0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(bytes == expected);

  ping.request_id = 1;
  auto with_id = encode(ping);
  CHECK(with_id.size() == 13);
  CHECK(with_id[5] == 0x01);  // least-significant id byte right after type
  for (std::size_t i = 6; i < 13; ++i) CHECK(with_id[i] == 0);

  AccelFrame pong;
  pong.request_id = 9;
  pong.body = Pong{};
  const auto pong_bytes = encode(pong);
  CHECK(pong_bytes.size() == 13);
  CHECK(pong_bytes[4] == 0x04);
  CHECK(pong_bytes[5] == 0x09);
}

TEST_CASE("golden bytes: one-option request layout") {
  AccelFrame frame;
  frame.request_id = 0x0102030405060708ULL;
  PriceRequest req;
  req.options.push_back(sample_option());
  frame.body = req;

  const auto bytes = encode(frame);
  REQUIRE(bytes.size() == kHeaderSize + 1 + kWireOptionSize);  // 67

  std::vector<std::uint8_t> expected = {0x4D, 0x43, 0x45, 0x31, 0x01};
  const auto id = le64(0x0102030405060708ULL);
  expected.insert(expected.end(), id.begin(), id.end());
  expected.push_back(0x01);  // option_count
  for (const double field : {100.0, 95.5, 0.05, 0.2, 1.5}) {
    const auto enc = le_double(field);
    expected.insert(expected.end(), enc.begin(), enc.end());
  }
  expected.push_back(0x01);                                      // kind
  expected.insert(expected.end(), {0x20, 0xA1, 0x07, 0x00});     // paths LE
  const auto seed = le64(0x1122334455667788ULL);
  expected.insert(expected.end(), seed.begin(), seed.end());
  CHECK(bytes == expected);
}

TEST_CASE("golden sizes: full frames") {
  AccelFrame req;
  req.request_id = 7;
  PriceRequest body;
  for (int i = 0; i < 7; ++i) body.options.push_back(sample_option());
  req.body = body;
  CHECK(encode(req).size() == 385);  // 13 + 1 + 7*53

  AccelFrame resp;
  resp.request_id = 7;
  PriceResponse rbody;
  for (int i = 0; i < 7; ++i) rbody.results.push_back({10.5, 0.01, OptionStatus::kOk});
  resp.body = rbody;
  CHECK(encode(resp).size() == 13 + 1 + 7 * 17);

  AccelFrame err;
  err.request_id = 1;
  err.body = ErrorInfo{2, "boom"};
  CHECK(encode(err).size() == 13 + 1 + 2 + 4);
}

TEST_CASE("decode inverts encode on hand-built frames") {
  AccelFrame frame;
  frame.request_id = 9;
  frame.body = Pong{};
  const auto decoded = decode(encode(frame));
  REQUIRE(decoded.ok());
  CHECK(*decoded.frame == frame);

  AccelFrame err;
  err.request_id = 0xFFFFFFFFFFFFFFFFULL;
  err.body = ErrorInfo{3, "unsupported message type"};
  const auto decoded_err = decode(encode(err));
  REQUIRE(decoded_err.ok());
  CHECK(*decoded_err.frame == err);
}

TEST_CASE("round-trip identity over randomized frames") {
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> real(-1000, 1000);
  std::uniform_int_distribution<int> type_pick(0, 4);

  for (int trial = 0; trial < 10000; ++trial) {
    AccelFrame frame;
    frame.request_id = gen();
    switch (type_pick(gen)) {
      case 0:
        frame.body = Ping{};
        break;
      case 1:
        frame.body = Pong{};
        break;
      case 2: {
        PriceRequest req;
        const unsigned n = 1 + gen() % kMaxOptionsPerFrame;
        for (unsigned i = 0; i < n; ++i) {
          WireOption opt;
          opt.spot = real(gen);
          opt.strike = real(gen);
          opt.rate = real(gen);
          opt.volatility = real(gen);
          opt.expiry = real(gen);
          opt.kind = static_cast<std::uint8_t>(gen() % 2);
          opt.paths = static_cast<std::uint32_t>(gen());
          opt.seed = gen();
          req.options.push_back(opt);
        }
        frame.body = std::move(req);
        break;
      }
      case 3: {
        PriceResponse resp;
        const unsigned n = 1 + gen() % kMaxOptionsPerFrame;
        for (unsigned i = 0; i < n; ++i) {
          resp.results.push_back({real(gen), std::abs(real(gen)),
                                  static_cast<OptionStatus>(gen() % 3)});
        }
        frame.body = std::move(resp);
        break;
      }
      default: {
        std::string detail(gen() % 200, 'x');
        for (char& c : detail) c = static_cast<char>(gen() % 256);
        frame.body = ErrorInfo{static_cast<std::uint8_t>(gen() % 256),
                               std::move(detail)};
        break;
      }
    }
    const auto bytes = encode(frame, kMaxOptionsPerFrame);
    const auto decoded = decode(bytes);
    REQUIRE(decoded.ok());
    CHECK(*decoded.frame == frame);
  }
}

TEST_CASE("decoder survives random byte strings") {
  std::mt19937_64 gen(777);
  std::size_t decoded_ok = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t len = gen() % 120;
    std::vector<std::uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
    // Half the trials get a valid magic so body parsing is exercised too.
    if (trial % 2 == 0 && len >= 4) {
      std::memcpy(bytes.data(), kMagic.data(), 4);
    }
    const auto result = decode(bytes);
    if (result.ok()) decoded_ok += 1;
  }
  // Totality is the point; the count just keeps the loop observable.
  CHECK(decoded_ok < 100000);
}

TEST_CASE("decode classifies malformed input") {
  AccelFrame frame;
  frame.request_id = 5;
  frame.body = Ping{};
  auto bytes = encode(frame);

  SUBCASE("flipped magic byte") {
    bytes[0] = 0x4E;
    CHECK(decode(bytes).error == ProtocolError::kBadMagic);
  }
  SUBCASE("empty and short inputs") {
    CHECK(decode(std::vector<std::uint8_t>{}).error == ProtocolError::kBadMagic);
    CHECK(decode(std::vector<std::uint8_t>{0x4D, 0x43}).error ==
          ProtocolError::kBadMagic);
    std::vector<std::uint8_t> short_header(bytes.begin(), bytes.begin() + 8);
    CHECK(decode(short_header).error == ProtocolError::kBadLength);
  }
  SUBCASE("unknown message type") {
    bytes[4] = 0x00;
    CHECK(decode(bytes).error == ProtocolError::kBadType);
    bytes[4] = 0x06;
    CHECK(decode(bytes).error == ProtocolError::kBadType);
  }
  SUBCASE("ping with a trailing body") {
    bytes.push_back(0);
    CHECK(decode(bytes).error == ProtocolError::kBadLength);
  }
  SUBCASE("request body truncated by one byte") {
    AccelFrame req;
    req.request_id = 1;
    PriceRequest body;
    body.options.push_back(sample_option());
    req.body = body;
    auto full = encode(req);
    full.pop_back();
    CHECK(decode(full).error == ProtocolError::kBadLength);
  }
  SUBCASE("request with zero options") {
    std::vector<std::uint8_t> zero = {0x4D, 0x43, 0x45, 0x31, 0x01,
                                      0, 0, 0, 0, 0, 0, 0, 0, 0x00};
    CHECK(decode(zero).error == ProtocolError::kBadValue);
  }
  SUBCASE("non-finite float rejected") {
    AccelFrame req;
    req.request_id = 1;
    PriceRequest body;
    body.options.push_back(sample_option());
    req.body = body;
    auto full = encode(req);
    const auto nan_bytes = le_double(std::nan(""));
    std::memcpy(full.data() + 14, nan_bytes.data(), 8);  // overwrite spot
    CHECK(decode(full).error == ProtocolError::kBadValue);
  }
  SUBCASE("bad kind byte rejected") {
    AccelFrame req;
    req.request_id = 1;
    PriceRequest body;
    body.options.push_back(sample_option());
    req.body = body;
    auto full = encode(req);
    full[14 + 40] = 2;  // kind sits after five 8-byte floats
    CHECK(decode(full).error == ProtocolError::kBadValue);
  }
  SUBCASE("bad status byte rejected") {
    AccelFrame resp;
    resp.request_id = 1;
    PriceResponse body;
    body.results.push_back({1.0, 0.1, OptionStatus::kOk});
    resp.body = body;
    auto full = encode(resp);
    full.back() = 3;
    CHECK(decode(full).error == ProtocolError::kBadValue);
  }
  SUBCASE("error frame with wrong detail length") {
    AccelFrame err;
    err.request_id = 1;
    err.body = ErrorInfo{1, "abc"};
    auto full = encode(err);
    full[14] = 9;  // detail_len low byte, actual detail is 3 bytes
    CHECK(decode(full).error == ProtocolError::kBadLength);
  }
}

TEST_CASE("encode rejects invalid frames") {
  AccelFrame frame;
  frame.request_id = 1;

  PriceRequest empty;
  frame.body = empty;
  CHECK_THROWS_AS(encode(frame), EncodeError);

  PriceRequest eight;
  for (int i = 0; i < 8; ++i) eight.options.push_back(sample_option());
  frame.body = eight;
  CHECK_THROWS_AS(encode(frame, 7), EncodeError);
  CHECK_NOTHROW(encode(frame, 8));

  PriceRequest bad;
  bad.options.push_back(sample_option());
  bad.options[0].spot = std::nan("");
  frame.body = bad;
  CHECK_THROWS_AS(encode(frame), EncodeError);

  bad.options[0] = sample_option();
  bad.options[0].kind = 2;
  frame.body = bad;
  CHECK_THROWS_AS(encode(frame), EncodeError);

  frame.body = ErrorInfo{1, std::string(1500, 'x')};
  CHECK_THROWS_AS(encode(frame), EncodeError);

  // The datagram bound caps option count even when max_options is huge.
  PriceRequest wide;
  for (unsigned i = 0; i < 27; ++i) wide.options.push_back(sample_option());
  frame.body = wide;
  CHECK_THROWS_AS(encode(frame, 1000), EncodeError);
}

TEST_CASE("every encodable request and response fits one datagram") {
  for (unsigned n = 1; n <= 7; ++n) {
    AccelFrame req;
    req.request_id = n;
    PriceRequest body;
    for (unsigned i = 0; i < n; ++i) body.options.push_back(sample_option());
    req.body = body;
    CHECK(encode(req).size() <= kMaxDatagram);

    AccelFrame resp;
    resp.request_id = n;
    PriceResponse rbody;
    for (unsigned i = 0; i < n; ++i) {
      rbody.results.push_back({1.0, 0.1, OptionStatus::kOk});
    }
    resp.body = rbody;
    CHECK(encode(resp).size() <= kMaxDatagram);
  }
}

TEST_CASE("peek_request_id reads the header without the body") {
  AccelFrame frame;
  frame.request_id = 0xDEADBEEFCAFEF00DULL;
  frame.body = Ping{};
  auto bytes = encode(frame);
  auto id = peek_request_id(bytes);
  REQUIRE(id.has_value());
  CHECK(*id == 0xDEADBEEFCAFEF00DULL);

  // Truncated bodies still yield an id as long as the header is whole.
  AccelFrame req;
  req.request_id = 42;
  PriceRequest body;
  body.options.push_back(sample_option());
  req.body = body;
  auto truncated = encode(req);
  truncated.resize(20);
  id = peek_request_id(truncated);
  REQUIRE(id.has_value());
  CHECK(*id == 42);

  bytes[0] = 0;  // magic gone, no id
  CHECK(!peek_request_id(bytes).has_value());
  std::vector<std::uint8_t> tiny = {0x4D, 0x43, 0x45, 0x31, 0x01, 0x00};
  CHECK(!peek_request_id(tiny).has_value());
}
