#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mcesvc/accel_client.hpp"
#include "mcesvc/pricing.hpp"

namespace mce {

enum class BackendKind { kLocalCpu, kRemoteAccel, kModeled };

const char* to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

// Latency/lifecycle model of one backend class. LocalCpu prices in-process;
// RemoteAccel ships sub-batches to an accelerator node over UDP; Modeled
// stands in for a heavyweight stack by sleeping a configured cost before
// pricing in-process.
struct BackendProfile {
  std::string name = "local-cpu";
  BackendKind kind = BackendKind::kLocalCpu;
  double cold_penalty_s = 0;  // extra latency on the first request
  double per_request_overhead_s = 0;  // Modeled only
  double per_path_cost_s = 0;         // Modeled only
  unsigned chunk_size = 7;  // max options per sub-batch
  std::string endpoint;     // RemoteAccel only, "host:port"
  double timeout_s = 0.5;   // RemoteAccel only, per attempt
  unsigned mc_threads = 1;  // pricing-core threads per option
};

void validate(const BackendProfile& profile);

enum class Lifecycle { kUninitialized, kWarming, kWarm };
const char* to_string(Lifecycle lifecycle);

enum class ResultStatus {
  kOk = 0,
  kInvalidOption = 1,
  kLaneError = 2,
  kBackendError = 3,
};
const char* to_string(ResultStatus status);

struct OptionResult {
  double price = 0;
  double std_error = 0;
  ResultStatus status = ResultStatus::kOk;
};

// One splitter output: a contiguous run of the request's options, each
// carrying its own seed so pricing does not depend on how the batch was cut.
struct SubBatch {
  std::vector<OptionSpec> options;
  std::vector<std::uint64_t> seeds;
  std::uint32_t paths = 1;
};

struct BackendReply {
  std::vector<OptionResult> results;
  double processing_s = 0;  // wall time of the price() call, cold work included
  bool was_cold = false;    // this call performed the worker's warm-up
};

// One worker's backend instance. The first price() call performs the cold
// work (configured sleep, or socket + ping for the remote kind) and moves
// the lifecycle Uninitialized -> Warming -> Warm; it never moves backwards.
// A stateless reset is modeled by constructing a fresh instance.
class Backend {
 public:
  virtual ~Backend() = default;

  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendProfile& profile() const { return profile_; }
  Lifecycle lifecycle() const;
  std::uint64_t served() const;

  // Prices one sub-batch. Throws BackendError on worker-level failure;
  // per-option domain errors come back in-band as statuses.
  BackendReply price(const SubBatch& batch);

 protected:
  explicit Backend(BackendProfile profile) : profile_(std::move(profile)) {}

  virtual void do_warm_up() {}
  virtual std::vector<OptionResult> do_price(const SubBatch& batch) = 0;

  BackendProfile profile_;

 private:
  bool ensure_warm();  // true when this call did the warming

  mutable std::mutex mu_;
  std::condition_variable warm_cv_;
  Lifecycle lifecycle_ = Lifecycle::kUninitialized;
  std::uint64_t served_ = 0;
};

std::unique_ptr<Backend> make_backend(const BackendProfile& profile);

}  // namespace mce
