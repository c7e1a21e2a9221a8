#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mcesvc/backend.hpp"

namespace httplib {
class Server;
}

namespace mce {

inline constexpr std::size_t kMaxBatchOptions = 10000;

struct PricingRequest {
  std::vector<OptionSpec> options;
  std::uint32_t paths = 1;
  std::uint64_t seed_base = 0;
};

// Throws ValidationError naming the offending field ("options[3].spot",
// "paths", ...).
void validate(const PricingRequest& request);

struct RequestTiming {
  double processing_s = 0;  // summed over worker price() calls
  double e2e_s = 0;         // request receipt to response write
};

struct PriceResult {
  std::vector<OptionResult> results;
  RequestTiming timing;
  bool cold = false;  // some worker performed its warm-up during this request
};

// Splitter: cuts a batch into contiguous chunks of at most chunk_size
// options. Option i keeps its global seed seed_base + i, so the chunking is
// invisible to pricing.
std::vector<SubBatch> split(const PricingRequest& request, unsigned chunk_size);

// Raised when no worker exists to serve a request (maps to HTTP 503).
class ServiceUnavailable : public std::runtime_error {
 public:
  explicit ServiceUnavailable(const std::string& message)
      : std::runtime_error(message) {}
};

// A crew of identical workers sharing one backend profile. Sub-batches are
// assigned round-robin; each worker serves one sub-batch at a time; a failed
// sub-batch is retried once on the next worker before its options are marked
// backend_error. reset() swaps in a fresh cold crew (stateless-worker reset
// is replacement, not a lifecycle transition).
class WorkerPool {
 public:
  WorkerPool(BackendProfile profile, unsigned workers);
  // Test hook: a pool over pre-built (possibly misbehaving) backends.
  WorkerPool(BackendProfile profile,
             std::vector<std::unique_ptr<Backend>> backends);

  const BackendProfile& profile() const { return profile_; }
  unsigned size() const;
  std::uint64_t generation() const;
  std::vector<Lifecycle> lifecycles() const;

  // Split + concurrent dispatch + in-order merge. Timing carries the summed
  // processing time; e2e is stamped by the caller.
  PriceResult price(const PricingRequest& request);

  void reset();

 private:
  struct Slot {
    std::shared_ptr<Backend> backend;
    std::shared_ptr<std::mutex> busy;  // one sub-batch at a time per worker
  };

  std::vector<Slot> snapshot() const;

  BackendProfile profile_;
  mutable std::mutex mu_;
  std::vector<Slot> slots_;
  std::atomic<std::uint64_t> rr_counter_{0};
  std::uint64_t generation_ = 0;
};

struct GatewayConfig {
  std::string bind_host = "127.0.0.1";
  std::uint16_t port = 8080;
  unsigned workers = 2;  // per backend pool
  std::string default_backend = "local-cpu";
  std::vector<BackendProfile> profiles;
};

GatewayConfig default_gateway_config();
// Parses the JSON config text; unknown keys rejected, missing ones default.
GatewayConfig parse_gateway_config(const std::string& text);
GatewayConfig load_gateway_config(const std::string& path);
// MCESVC_BIND=host:port overrides the bind address; MCESVC_ACCEL_ENDPOINT
// overrides the endpoint of every remote_accel profile.
void apply_env_overrides(GatewayConfig& config);

// REST front door plus the splitter/balancer plumbing behind it. Endpoints:
//   GET  /v1/price?spot=&strike=&rate=&vol=&expiry=&kind=&paths=&seed=
//   POST /v1/price   {options:[...], paths, seed_base, backend?}
//   GET  /v1/healthz
//   GET  /v1/metrics
//   POST /v1/admin/reset[?backend=NAME]   fresh cold workers
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void start();  // binds and serves on a background thread; throws on failure
  void stop();
  std::uint16_t port() const { return bound_port_; }
  const GatewayConfig& config() const { return config_; }

  // Core request path, also used in-process by tests. backend = "" selects
  // the configured default. Throws ValidationError (bad request; unknown
  // backend) or ServiceUnavailable (no workers).
  PriceResult handle_price(const PricingRequest& request,
                           const std::string& backend = "");

  // Resets the named pool ("" = all). Returns the names reset.
  std::vector<std::string> reset_backends(const std::string& name = "");

  WorkerPool* pool(const std::string& name);
  std::string metrics_json() const;

 private:
  struct BackendMetrics {
    std::uint64_t requests = 0;
    std::uint64_t options = 0;
    std::uint64_t cold_requests = 0;
    double sum_processing_s = 0;
    double sum_e2e_s = 0;
    double last_e2e_s = 0;
  };

  PriceResult priced_from(const PricingRequest& request,
                          const std::string& backend,
                          std::chrono::steady_clock::time_point received);
  void install_routes();

  GatewayConfig config_;
  std::map<std::string, std::unique_ptr<WorkerPool>> pools_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::uint16_t bound_port_ = 0;

  mutable std::mutex metrics_mu_;
  std::map<std::string, BackendMetrics> metrics_;
};

}  // namespace mce
