#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "mcesvc/pricing.hpp"

using mce::OptionKind;
using mce::OptionSpec;
using mce::SimParams;

namespace {

OptionSpec make_spec(double spot, double strike, double rate, double vol,
                     double expiry, OptionKind kind) {
  OptionSpec spec;
  spec.spot = spot;
  spec.strike = strike;
  spec.rate = rate;
  spec.volatility = vol;
  spec.expiry = expiry;
  spec.kind = kind;
  return spec;
}

}  // namespace

// Closed-form values computed independently at 40-digit precision.
TEST_CASE("black-scholes oracle grid") {
  struct Row {
    OptionSpec spec;
    double expected;
  };
  const Row rows[] = {
      {make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kCall),
       10.450583572185567},
      {make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kPut),
       5.5735260222569677},
      {make_spec(100, 80, 0, 0, 1, OptionKind::kCall), 20.0},
      {make_spec(80, 100, 0.05, 0.1, 1, OptionKind::kCall),
       0.14757028598521375},
      {make_spec(80, 100, 0.05, 0.1, 1, OptionKind::kPut),
       15.270512736056615},
      {make_spec(120, 100, 0.05, 0.4, 1, OptionKind::kPut),
       7.3572316596176872},
      {make_spec(100, 100, -0.01, 0.3, 2, OptionKind::kCall),
       15.977786748230598},
      {make_spec(50, 60, 0.02, 0.25, 0.5, OptionKind::kPut),
       10.242866071869519},
      {make_spec(100, 95, 0.03, 0.15, 0.25, OptionKind::kCall),
       6.609999483300545},
  };
  for (const Row& row : rows) {
    CHECK(std::abs(mce::price_bs(row.spec) - row.expected) <=
          1e-12 * std::max(1.0, row.expected));
  }
}

TEST_CASE("normal cdf anchor points") {
  CHECK(std::abs(mce::norm_cdf(0.0) - 0.5) < 1e-15);
  // Phi(1) and Phi(-1), 17 significant digits.
  CHECK(std::abs(mce::norm_cdf(1.0) - 0.84134474606854293) < 1e-13);
  CHECK(std::abs(mce::norm_cdf(-1.0) - 0.15865525393145707) < 1e-13);
  CHECK(std::abs(mce::norm_cdf(1.0) + mce::norm_cdf(-1.0) - 1.0) < 1e-15);
}

TEST_CASE("validation names the offending field") {
  auto field_of = [](OptionSpec spec) {
    try {
      mce::validate(spec);
      return std::string("none");
    } catch (const mce::ValidationError& e) {
      return e.field();
    }
  };
  const OptionSpec good = make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kCall);
  CHECK(field_of(good) == "none");
  OptionSpec bad = good;
  bad.spot = -1;
  CHECK(field_of(bad) == "spot");
  bad = good;
  bad.strike = 0;
  CHECK(field_of(bad) == "strike");
  bad = good;
  bad.volatility = -0.1;
  CHECK(field_of(bad) == "volatility");
  bad = good;
  bad.expiry = 0;
  CHECK(field_of(bad) == "expiry");
  bad = good;
  bad.rate = std::nan("");
  CHECK(field_of(bad) == "rate");

  CHECK_THROWS_AS(mce::validate(SimParams{0, 1}), mce::ValidationError);
  CHECK_THROWS_AS(mce::simulate_terminal(bad, SimParams{10, 1}),
                  mce::ValidationError);
}

TEST_CASE("zero volatility collapses every path to the forward") {
  const OptionSpec flat = make_spec(100, 100, 0, 0, 1, OptionKind::kCall);
  for (const double s : mce::simulate_terminal(flat, SimParams{100, 5})) {
    CHECK(s == 100.0);
  }
  const OptionSpec drift = make_spec(100, 100, 0.05, 0, 2, OptionKind::kCall);
  for (const double s : mce::simulate_terminal(drift, SimParams{100, 5})) {
    CHECK(s == doctest::Approx(110.51709180756476).epsilon(1e-14));
  }
}

TEST_CASE("terminal sample mean honors the forward price") {
  const OptionSpec spec = make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kCall);
  const auto sample = mce::simulate_terminal(spec, SimParams{200000, 42});
  double sum = 0, sum_sq = 0;
  for (const double s : sample) {
    CHECK(s > 0);
    sum += s;
    sum_sq += s * s;
  }
  const double n = static_cast<double>(sample.size());
  const double mean = sum / n;
  const double sd = std::sqrt((sum_sq - n * mean * mean) / (n - 1));
  CHECK(std::abs(mean - 105.1271096376024) <= 3 * sd / std::sqrt(n));
}

TEST_CASE("deterministic payoffs price exactly") {
  const auto call =
      mce::price_mc(make_spec(100, 80, 0, 0, 1, OptionKind::kCall),
                    SimParams{1000, 9});
  CHECK(call.price == doctest::Approx(20).epsilon(1e-14));
  CHECK(call.std_error == 0.0);
  CHECK(call.paths_used == 1000);

  const auto put = mce::price_mc(make_spec(100, 80, 0, 0, 1, OptionKind::kPut),
                                 SimParams{1000, 9});
  CHECK(put.price == 0.0);
}

TEST_CASE("zero-volatility exactness across paths and seeds") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> spot(1, 200), strike(1, 200),
      rate(-0.05, 0.1), expiry(0.1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    OptionSpec spec = make_spec(spot(gen), strike(gen), rate(gen), 0,
                                expiry(gen),
                                trial % 2 ? OptionKind::kPut : OptionKind::kCall);
    const std::uint64_t paths = 1 + gen() % 1000;
    const auto est = mce::price_mc(spec, SimParams{paths, gen()});
    const double fwd = spec.spot * std::exp(spec.rate * spec.expiry);
    const double pay = spec.kind == OptionKind::kCall
                           ? std::max(fwd - spec.strike, 0.0)
                           : std::max(spec.strike - fwd, 0.0);
    const double expected = std::exp(-spec.rate * spec.expiry) * pay;
    CHECK(std::abs(est.price - expected) <= 1e-12 * std::max(1.0, expected));
    CHECK(est.std_error == 0.0);
  }
}

TEST_CASE("put-call parity on common random numbers") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> spot(10, 200), strike(10, 200),
      rate(-0.05, 0.1), vol(0.05, 0.8), expiry(0.1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    OptionSpec call = make_spec(spot(gen), strike(gen), rate(gen), vol(gen),
                                expiry(gen), OptionKind::kCall);
    OptionSpec put = call;
    put.kind = OptionKind::kPut;
    const SimParams sim{4096, gen()};

    const double c = mce::price_mc(call, sim).price;
    const double p = mce::price_mc(put, sim).price;

    // Same seed, same sample: C - P = disc * (mean(S_T) - K) exactly, up to
    // floating-point accumulation.
    const auto sample = mce::simulate_terminal(call, sim);
    double mean = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      mean += (sample[i] - mean) / static_cast<double>(i + 1);
    }
    const double disc = std::exp(-call.rate * call.expiry);
    const double expected = disc * (mean - call.strike);
    const double scale = std::max({1.0, std::abs(c), std::abs(p)});
    CHECK(std::abs((c - p) - expected) <= 1e-10 * scale);
  }
}

TEST_CASE("closed-form parity") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> spot(10, 200), strike(10, 200),
      rate(-0.05, 0.1), vol(0.05, 0.8), expiry(0.1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    OptionSpec call = make_spec(spot(gen), strike(gen), rate(gen), vol(gen),
                                expiry(gen), OptionKind::kCall);
    OptionSpec put = call;
    put.kind = OptionKind::kPut;
    const double lhs = mce::price_bs(call) - mce::price_bs(put);
    const double rhs =
        call.spot - call.strike * std::exp(-call.rate * call.expiry);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("monte carlo converges to the closed form on a fixed grid") {
  int hits = 0, total = 0;
  std::uint64_t seed = 1000;
  for (const double spot : {80.0, 100.0, 120.0}) {
    for (const double vol : {0.1, 0.4}) {
      for (const OptionKind kind : {OptionKind::kCall, OptionKind::kPut}) {
        const OptionSpec spec = make_spec(spot, 100, 0.05, vol, 1, kind);
        const auto est = mce::price_mc(spec, SimParams{200000, seed++});
        total += 1;
        if (std::abs(est.price - mce::price_bs(spec)) <= 3 * est.std_error) {
          hits += 1;
        }
      }
    }
  }
  CHECK(total == 12);
  CHECK(hits >= 11);
}

TEST_CASE("standard error shrinks like one over root paths") {
  const OptionSpec spec = make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kCall);
  const double se_n = mce::price_mc(spec, SimParams{50000, 5}).std_error;
  const double se_4n = mce::price_mc(spec, SimParams{200000, 5}).std_error;
  CHECK(se_4n <= se_n * 0.6);
}

TEST_CASE("price is bit-identical across repeats and thread counts") {
  const OptionSpec spec = make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kCall);
  const SimParams sim{200000, 777};
  const auto a = mce::price_mc(spec, sim, 1);
  const auto b = mce::price_mc(spec, sim, 1);
  const auto c = mce::price_mc(spec, sim, 3);
  const auto d = mce::price_mc(spec, sim, 8);
  CHECK(a.price == b.price);
  CHECK(a.std_error == b.std_error);
  CHECK(a.price == c.price);
  CHECK(a.std_error == c.std_error);
  CHECK(a.price == d.price);
  CHECK(a.std_error == d.std_error);
}

TEST_CASE("estimates are non-negative with positive standard error") {
  const OptionSpec spec = make_spec(100, 100, 0.05, 0.2, 1, OptionKind::kPut);
  const auto est = mce::price_mc(spec, SimParams{4096, 3});
  CHECK(est.price >= 0);
  CHECK(est.std_error > 0);
  // A single path has no variance estimate.
  const auto one = mce::price_mc(spec, SimParams{1, 3});
  CHECK(one.std_error == 0.0);
}
