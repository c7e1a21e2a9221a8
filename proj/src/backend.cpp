#include "mcesvc/backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "mcesvc/node.hpp"

namespace mce {

namespace {

using Clock = std::chrono::steady_clock;

void sleep_s(double seconds) {
  if (seconds > 0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }
}

OptionResult price_one(const OptionSpec& spec, std::uint32_t paths,
                       std::uint64_t seed, unsigned mc_threads) {
  OptionResult result;
  try {
    const PriceEstimate est = price_mc(spec, SimParams{paths, seed}, mc_threads);
    result.price = est.price;
    result.std_error = est.std_error;
  } catch (const ValidationError&) {
    result = {0, 0, ResultStatus::kInvalidOption};
  } catch (...) {
    result = {0, 0, ResultStatus::kLaneError};
  }
  return result;
}

class LocalCpuBackend : public Backend {
 public:
  explicit LocalCpuBackend(BackendProfile profile)
      : Backend(std::move(profile)) {}

 protected:
  std::vector<OptionResult> do_price(const SubBatch& batch) override {
    std::vector<OptionResult> results;
    results.reserve(batch.options.size());
    for (std::size_t i = 0; i < batch.options.size(); ++i) {
      results.push_back(price_one(batch.options[i], batch.paths,
                                  batch.seeds[i], profile_.mc_threads));
    }
    return results;
  }
};

class ModeledBackend : public Backend {
 public:
  explicit ModeledBackend(BackendProfile profile)
      : Backend(std::move(profile)) {}

 protected:
  std::vector<OptionResult> do_price(const SubBatch& batch) override {
    sleep_s(profile_.per_request_overhead_s +
            static_cast<double>(batch.paths) * profile_.per_path_cost_s);
    std::vector<OptionResult> results;
    results.reserve(batch.options.size());
    for (std::size_t i = 0; i < batch.options.size(); ++i) {
      results.push_back(price_one(batch.options[i], batch.paths,
                                  batch.seeds[i], profile_.mc_threads));
    }
    return results;
  }
};

class RemoteAccelBackend : public Backend {
 public:
  explicit RemoteAccelBackend(BackendProfile profile)
      : Backend(std::move(profile)) {
    AccelClientConfig cfg;
    const auto colon = profile_.endpoint.rfind(':');
    cfg.host = profile_.endpoint.substr(0, colon);
    cfg.port =
        static_cast<std::uint16_t>(std::stoul(profile_.endpoint.substr(colon + 1)));
    cfg.timeout_s = profile_.timeout_s;
    cfg.max_options = profile_.chunk_size;
    client_ = std::make_unique<AccelClient>(cfg);
  }

 protected:
  void do_warm_up() override { client_->warm_up(); }

  std::vector<OptionResult> do_price(const SubBatch& batch) override {
    wire::PriceRequest request;
    request.options.reserve(batch.options.size());
    for (std::size_t i = 0; i < batch.options.size(); ++i) {
      const OptionSpec& spec = batch.options[i];
      wire::WireOption opt;
      opt.spot = spec.spot;
      opt.strike = spec.strike;
      opt.rate = spec.rate;
      opt.volatility = spec.volatility;
      opt.expiry = spec.expiry;
      opt.kind = spec.kind == OptionKind::kCall ? 0 : 1;
      opt.paths = batch.paths;
      opt.seed = batch.seeds[i];
      request.options.push_back(opt);
    }
    const wire::PriceResponse response = client_->price(request);
    std::vector<OptionResult> results;
    results.reserve(response.results.size());
    for (const wire::WireResult& r : response.results) {
      results.push_back(
          {r.price, r.std_error, static_cast<ResultStatus>(r.status)});
    }
    return results;
  }

 private:
  std::unique_ptr<AccelClient> client_;
};

}  // namespace

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kLocalCpu: return "local_cpu";
    case BackendKind::kRemoteAccel: return "remote_accel";
    case BackendKind::kModeled: return "modeled";
  }
  return "?";
}

BackendKind backend_kind_from_string(const std::string& name) {
  if (name == "local_cpu" || name == "local-cpu") return BackendKind::kLocalCpu;
  if (name == "remote_accel" || name == "remote-accel") {
    return BackendKind::kRemoteAccel;
  }
  if (name == "modeled") return BackendKind::kModeled;
  throw ValidationError("kind", "unknown backend kind: " + name);
}

const char* to_string(Lifecycle lifecycle) {
  switch (lifecycle) {
    case Lifecycle::kUninitialized: return "uninitialized";
    case Lifecycle::kWarming: return "warming";
    case Lifecycle::kWarm: return "warm";
  }
  return "?";
}

const char* to_string(ResultStatus status) {
  switch (status) {
    case ResultStatus::kOk: return "ok";
    case ResultStatus::kInvalidOption: return "invalid_option";
    case ResultStatus::kLaneError: return "lane_error";
    case ResultStatus::kBackendError: return "backend_error";
  }
  return "?";
}

void validate(const BackendProfile& profile) {
  if (profile.name.empty()) {
    throw ValidationError("name", "backend name must not be empty");
  }
  if (!(profile.cold_penalty_s >= 0) || !std::isfinite(profile.cold_penalty_s)) {
    throw ValidationError("cold_penalty_s", "cold penalty must be >= 0");
  }
  if (profile.chunk_size < 1) {
    throw ValidationError("chunk_size", "chunk size must be >= 1");
  }
  if (profile.kind == BackendKind::kRemoteAccel) {
    const auto colon = profile.endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 ||
        colon + 1 == profile.endpoint.size()) {
      throw ValidationError("endpoint",
                            "remote backend needs an endpoint host:port");
    }
    if (profile.chunk_size > wire::kMaxOptionsPerFrame) {
      throw ValidationError("chunk_size",
                            "chunk size exceeds the single-datagram limit");
    }
    if (!(profile.timeout_s > 0)) {
      throw ValidationError("timeout_s", "timeout must be positive");
    }
  }
  if (profile.kind == BackendKind::kModeled) {
    if (!(profile.per_request_overhead_s >= 0) ||
        !(profile.per_path_cost_s >= 0)) {
      throw ValidationError("per_request_overhead_s",
                            "modeled costs must be >= 0");
    }
  }
}

Lifecycle Backend::lifecycle() const {
  std::lock_guard lock(mu_);
  return lifecycle_;
}

std::uint64_t Backend::served() const {
  std::lock_guard lock(mu_);
  return served_;
}

bool Backend::ensure_warm() {
  std::unique_lock lock(mu_);
  for (;;) {
    if (lifecycle_ == Lifecycle::kWarm) return false;
    if (lifecycle_ == Lifecycle::kWarming) {
      warm_cv_.wait(lock, [&] { return lifecycle_ != Lifecycle::kWarming; });
      continue;
    }
    lifecycle_ = Lifecycle::kWarming;
    lock.unlock();
    // Cold work happens outside the lock so concurrent requests queue on
    // the condition variable instead of the mutex. A failed warm-up re-arms
    // the cold work; Warm is only ever entered on success and never left.
    try {
      do_warm_up();
      sleep_s(profile_.cold_penalty_s);
    } catch (...) {
      lock.lock();
      lifecycle_ = Lifecycle::kUninitialized;
      warm_cv_.notify_all();
      throw;
    }
    lock.lock();
    lifecycle_ = Lifecycle::kWarm;
    warm_cv_.notify_all();
    return true;
  }
}

BackendReply Backend::price(const SubBatch& batch) {
  const auto t0 = Clock::now();
  BackendReply reply;
  reply.was_cold = ensure_warm();
  reply.results = do_price(batch);
  reply.processing_s = std::chrono::duration<double>(Clock::now() - t0).count();
  {
    std::lock_guard lock(mu_);
    served_ += 1;
  }
  return reply;
}

std::unique_ptr<Backend> make_backend(const BackendProfile& profile) {
  validate(profile);
  switch (profile.kind) {
    case BackendKind::kLocalCpu:
      return std::make_unique<LocalCpuBackend>(profile);
    case BackendKind::kModeled:
      return std::make_unique<ModeledBackend>(profile);
    case BackendKind::kRemoteAccel:
      return std::make_unique<RemoteAccelBackend>(profile);
  }
  throw ValidationError("kind", "unknown backend kind");
}

}  // namespace mce
