#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mce {

enum class SweepAxis { kPaths, kBatchSize };
const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

// Sweep-level failure that aborts the run (unreachable service, bad spec,
// unwritable output). Per-request failures do not throw; they drop records.
class BenchError : public std::runtime_error {
 public:
  explicit BenchError(const std::string& message)
      : std::runtime_error(message) {}
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::kPaths;
  std::vector<std::uint64_t> values;   // non-empty, strictly increasing
  std::uint32_t fixed_paths = 500000;  // held constant on the batch axis
  std::uint32_t fixed_batch = 1;       // held constant on the paths axis
  std::vector<std::string> backends;   // profile names known to the service
  unsigned repetitions = 100;          // hot runs per cell
  unsigned concurrency = 1;            // client threads issuing hot runs
  std::uint64_t seed_base = 1;
};

void validate(const SweepSpec& spec);

// One observation. repetition 0 is the cold run (fresh workers); dropped
// records mark requests that failed and carry zeroed times.
struct RunRecord {
  std::string backend;
  std::uint64_t value = 0;
  unsigned repetition = 0;
  bool cold = false;
  bool dropped = false;
  double processing_s = 0;
  double e2e_s = 0;
};

struct CellSummary {
  std::string backend;
  std::uint64_t value = 0;
  double cold_s = 0;  // 0 when the cold run was dropped
  double hot_gmean_s = 0;
  double hot_p50_s = 0;
  double hot_p95_s = 0;
  double hot_p99_s = 0;
  double cold_hot_ratio = 0;
  unsigned hot_count = 0;
  unsigned dropped = 0;
  bool missing = false;  // no hot records landed
};

// Cross-backend comparison for one axis value, over cells present there.
struct CrossCell {
  std::uint64_t value = 0;
  std::string best_backend;   // smallest hot gmean E2E
  double best_hot_s = 0;
  std::string worst_backend;  // largest hot gmean E2E
  double worst_hot_s = 0;
  double hot_ratio = 0;       // worst / best
  std::string max_cold_backend;
  double max_cold_s = 0;
  double cold_vs_best_hot = 0;  // max cold / best hot gmean
};

struct Report {
  SweepAxis axis = SweepAxis::kPaths;
  std::vector<CellSummary> cells;
  std::vector<CrossCell> cross;
};

// Drives a full sweep against a running gateway (target_url like
// "http://127.0.0.1:8080"). Per cell: reset the backend's pool over the
// admin endpoint, one cold measurement, unrecorded warm-fill requests so
// every fresh worker has served once, then `repetitions` hot measurements.
// Records use the service-reported processing and E2E times.
std::vector<RunRecord> run_sweep(const SweepSpec& spec,
                                 const std::string& target_url);

double geometric_mean(const std::vector<double>& values);
// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> values, double p);

Report summarize(SweepAxis axis, const std::vector<RunRecord>& records);

// records.csv: backend,axis,value,repetition,cold,dropped,processing_s,e2e_s
void write_records_csv(const std::vector<RunRecord>& records, SweepAxis axis,
                       const std::string& path);
std::vector<RunRecord> read_records_csv(const std::string& path,
                                        SweepAxis* axis);
// summary.csv: backend,axis,value,cold_s,hot_gmean_s,hot_p50_s,hot_p95_s,
//              hot_p99_s,cold_hot_ratio,hot_count,dropped,missing
void write_summary_csv(const Report& report, const std::string& path);
// summary.json: the full report plus raw records.
void write_report_json(const Report& report,
                       const std::vector<RunRecord>& records,
                       const std::string& path);

// Human-readable table of a report.
std::string render_report(const Report& report);

}  // namespace mce
