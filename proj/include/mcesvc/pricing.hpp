#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mce {

enum class OptionKind : std::uint8_t { kCall = 0, kPut = 1 };

const char* to_string(OptionKind kind);

// One European option contract. Rates are continuously compounded and may
// be negative; expiry is in years.
struct OptionSpec {
  double spot = 0;
  double strike = 0;
  double rate = 0;
  double volatility = 0;
  double expiry = 0;
  OptionKind kind = OptionKind::kCall;
};

struct SimParams {
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
};

struct PriceEstimate {
  double price = 0;
  double std_error = 0;
  std::uint64_t paths_used = 0;
};

// Thrown when an option or simulation parameter is out of domain. The
// message names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Requires finite inputs, spot/strike/expiry > 0, volatility >= 0.
void validate(const OptionSpec& spec);
void validate(const SimParams& sim);

// Terminal GBM prices S_T = spot * exp((rate - vol^2/2)*T + vol*sqrt(T)*Z_i)
// for i in [0, paths). Z_i is draw i of the counter stream keyed by
// sim.seed (see rng.hpp), so the result is a pure function of (spec, sim).
std::vector<double> simulate_terminal(const OptionSpec& spec,
                                      const SimParams& sim);

// Discounted Monte-Carlo price and standard error.
//
// Payoffs accumulate through a single-pass Welford mean/variance recurrence
// over fixed blocks of kPathBlock paths, merged in block order, so the
// result is bit-identical for any thread count (including 1). `threads`
// only controls how many blocks run concurrently.
PriceEstimate price_mc(const OptionSpec& spec, const SimParams& sim,
                       unsigned threads = 1);

inline constexpr std::uint64_t kPathBlock = 65536;

// Black-Scholes closed form. volatility == 0 falls back to the discounted
// deterministic payoff. Used as the verification oracle for price_mc.
double price_bs(const OptionSpec& spec);

// Standard normal CDF, accurate to well below 1e-12 absolute.
double norm_cdf(double x);

}  // namespace mce
