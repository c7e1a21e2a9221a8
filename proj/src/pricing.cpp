#include "mcesvc/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mcesvc/rng.hpp"

namespace mce {

const char* to_string(OptionKind kind) {
  return kind == OptionKind::kCall ? "call" : "put";
}

namespace {

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

struct Welford {
  std::uint64_t n = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  // Chan's pairwise combination. Applied sequentially in block order so the
  // merged result does not depend on which thread ran which block.
  void merge(const Welford& rhs) {
    if (rhs.n == 0) return;
    if (n == 0) {
      *this = rhs;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(rhs.n);
    const double delta = rhs.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += rhs.m2 + delta * delta * na * nb / total;
    n += rhs.n;
  }

  double variance() const {
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }
};

struct GbmTerms {
  double drift;      // (rate - vol^2/2) * expiry
  double vol_sqrt_t; // vol * sqrt(expiry)
};

GbmTerms gbm_terms(const OptionSpec& spec) {
  return {(spec.rate - 0.5 * spec.volatility * spec.volatility) * spec.expiry,
          spec.volatility * std::sqrt(spec.expiry)};
}

double payoff(const OptionSpec& spec, double terminal) {
  const double intrinsic = spec.kind == OptionKind::kCall
                               ? terminal - spec.strike
                               : spec.strike - terminal;
  return intrinsic > 0.0 ? intrinsic : 0.0;
}

// Welford accumulation of discounted-payoff inputs over paths
// [first, first + count).
Welford run_block(const OptionSpec& spec, const GbmTerms& terms,
                  std::uint64_t seed, std::uint64_t first,
                  std::uint64_t count) {
  Welford acc;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double z = normal_at(seed, first + i);
    const double terminal = spec.spot * std::exp(terms.drift + terms.vol_sqrt_t * z);
    acc.add(payoff(spec, terminal));
  }
  return acc;
}

}  // namespace

void validate(const OptionSpec& spec) {
  require(std::isfinite(spec.spot) && spec.spot > 0, "spot",
          "spot must be positive and finite");
  require(std::isfinite(spec.strike) && spec.strike > 0, "strike",
          "strike must be positive and finite");
  require(std::isfinite(spec.rate), "rate", "rate must be finite");
  require(std::isfinite(spec.volatility) && spec.volatility >= 0, "volatility",
          "volatility must be non-negative and finite");
  require(std::isfinite(spec.expiry) && spec.expiry > 0, "expiry",
          "expiry must be positive and finite");
}

void validate(const SimParams& sim) {
  require(sim.paths >= 1, "paths", "paths must be at least 1");
}

std::vector<double> simulate_terminal(const OptionSpec& spec,
                                      const SimParams& sim) {
  validate(spec);
  validate(sim);
  const GbmTerms terms = gbm_terms(spec);
  std::vector<double> out(sim.paths);
  for (std::uint64_t i = 0; i < sim.paths; ++i) {
    const double z = normal_at(sim.seed, i);
    out[i] = spec.spot * std::exp(terms.drift + terms.vol_sqrt_t * z);
  }
  return out;
}

PriceEstimate price_mc(const OptionSpec& spec, const SimParams& sim,
                       unsigned threads) {
  validate(spec);
  validate(sim);
  const GbmTerms terms = gbm_terms(spec);

  const std::uint64_t blocks = (sim.paths + kPathBlock - 1) / kPathBlock;
  std::vector<Welford> partial(blocks);

  auto run_range = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t b = lo; b < hi; ++b) {
      const std::uint64_t first = b * kPathBlock;
      const std::uint64_t count = std::min(kPathBlock, sim.paths - first);
      partial[b] = run_block(spec, terms, sim.seed, first, count);
    }
  };

  if (threads <= 1 || blocks <= 1) {
    run_range(0, blocks);
  } else {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      // Contiguous block ranges; each block lands in its own slot, so the
      // partition does not affect the merged result.
      const std::uint64_t lo = blocks * w / workers;
      const std::uint64_t hi = blocks * (w + 1) / workers;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  Welford total;
  for (const Welford& p : partial) total.merge(p);

  const double discount = std::exp(-spec.rate * spec.expiry);
  PriceEstimate est;
  est.paths_used = sim.paths;
  est.price = discount * total.mean;
  est.std_error =
      discount * std::sqrt(total.variance() / static_cast<double>(sim.paths));
  return est;
}

double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double price_bs(const OptionSpec& spec) {
  validate(spec);
  const double discount = std::exp(-spec.rate * spec.expiry);
  if (spec.volatility == 0.0) {
    const double forward = spec.spot * std::exp(spec.rate * spec.expiry);
    return discount * payoff(spec, forward);
  }
  const double vol_sqrt_t = spec.volatility * std::sqrt(spec.expiry);
  const double d1 = (std::log(spec.spot / spec.strike) +
                     (spec.rate + 0.5 * spec.volatility * spec.volatility) *
                         spec.expiry) /
                    vol_sqrt_t;
  const double d2 = d1 - vol_sqrt_t;
  if (spec.kind == OptionKind::kCall) {
    return spec.spot * norm_cdf(d1) - spec.strike * discount * norm_cdf(d2);
  }
  return spec.strike * discount * norm_cdf(-d2) - spec.spot * norm_cdf(-d1);
}

}  // namespace mce
