#include "mcesvc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace mce {

namespace {

using nlohmann::json;

// Every benchmark request prices copies of this contract; the load knobs
// are paths and batch size, not the option itself.
constexpr double kSpot = 100, kStrike = 100, kRate = 0.05, kVol = 0.2,
                 kExpiry = 1.0;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json price_body(const SweepSpec& spec, std::uint64_t value,
                const std::string& backend) {
  const std::uint64_t batch =
      spec.axis == SweepAxis::kBatchSize ? value : spec.fixed_batch;
  const std::uint64_t paths =
      spec.axis == SweepAxis::kPaths ? value : spec.fixed_paths;
  json option = {{"spot", kSpot},   {"strike", kStrike}, {"rate", kRate},
                 {"vol", kVol},     {"expiry", kExpiry}, {"kind", "call"}};
  json options = json::array();
  for (std::uint64_t i = 0; i < batch; ++i) options.push_back(option);
  return json{{"options", options},
              {"paths", paths},
              {"seed_base", spec.seed_base},
              {"backend", backend}};
}

// One POST /v1/price; returns false on any failure (record to be dropped).
bool measure(httplib::Client& client, const json& body, double* processing_s,
             double* e2e_s) {
  const auto res =
      client.Post("/v1/price", body.dump(), "application/json");
  if (!res || res->status != 200) return false;
  try {
    const json reply = json::parse(res->body);
    *processing_s = reply.at("timing").at("processing_s").get<double>();
    *e2e_s = reply.at("timing").at("e2e_s").get<double>();
  } catch (const json::exception&) {
    return false;
  }
  return true;
}

}  // namespace

const char* to_string(SweepAxis axis) {
  return axis == SweepAxis::kPaths ? "paths" : "batch";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "paths") return SweepAxis::kPaths;
  if (name == "batch") return SweepAxis::kBatchSize;
  throw BenchError("unknown sweep axis: " + name);
}

void validate(const SweepSpec& spec) {
  if (spec.values.empty()) {
    throw BenchError("sweep values must not be empty");
  }
  for (std::size_t i = 0; i + 1 < spec.values.size(); ++i) {
    if (spec.values[i] >= spec.values[i + 1]) {
      throw BenchError("sweep values must be strictly increasing");
    }
  }
  for (std::uint64_t v : spec.values) {
    if (v == 0) throw BenchError("sweep values must be positive");
  }
  if (spec.backends.empty()) {
    throw BenchError("at least one backend required");
  }
  if (spec.repetitions < 1) {
    throw BenchError("repetitions must be >= 1");
  }
  if (spec.concurrency < 1) {
    throw BenchError("concurrency must be >= 1");
  }
  if (spec.fixed_paths < 1 || spec.fixed_batch < 1) {
    throw BenchError("fixed paths and batch must be >= 1");
  }
}

std::vector<RunRecord> run_sweep(const SweepSpec& spec,
                                 const std::string& target_url) {
  validate(spec);
  httplib::Client probe(target_url);
  probe.set_read_timeout(600, 0);
  const auto health = probe.Get("/v1/healthz");
  if (!health || health->status != 200) {
    throw BenchError("service unreachable at " + target_url);
  }

  std::vector<RunRecord> records;
  for (const std::string& backend : spec.backends) {
    for (const std::uint64_t value : spec.values) {
      // Fresh cold workers for this cell.
      const auto reset =
          probe.Post("/v1/admin/reset?backend=" + backend, "", "text/plain");
      if (!reset || reset->status != 200) {
        throw BenchError("admin reset failed for backend " + backend);
      }
      unsigned workers = 1;
      try {
        const json body = json::parse(reset->body);
        workers = body.at("reset").at(0).at("workers").get<unsigned>();
      } catch (const json::exception&) {
        throw BenchError("admin reset returned an unexpected body");
      }

      const json body = price_body(spec, value, backend);

      RunRecord cold;
      cold.backend = backend;
      cold.value = value;
      cold.repetition = 0;
      cold.cold = true;
      cold.dropped = !measure(probe, body, &cold.processing_s, &cold.e2e_s);
      records.push_back(cold);

      // Unrecorded warm-fill: round-robin walks the remaining workers, so
      // one request per extra worker leaves the whole crew warm before the
      // hot phase starts.
      for (unsigned i = 1; i < workers; ++i) {
        double ignored_p = 0, ignored_e = 0;
        measure(probe, body, &ignored_p, &ignored_e);
      }

      std::vector<RunRecord> hot(spec.repetitions);
      const unsigned threads = std::min(spec.concurrency, spec.repetitions);
      std::vector<std::thread> crew;
      // Threads own disjoint repetition ranges, so the sink needs no lock
      // and the final record order is by repetition regardless of timing.
      auto run_range = [&](unsigned begin, unsigned end) {
        httplib::Client client(target_url);
        client.set_read_timeout(600, 0);
        for (unsigned rep = begin; rep < end; ++rep) {
          RunRecord r;
          r.backend = backend;
          r.value = value;
          r.repetition = rep + 1;
          r.dropped = !measure(client, body, &r.processing_s, &r.e2e_s);
          hot[rep] = std::move(r);
        }
      };
      const unsigned per = (spec.repetitions + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        const unsigned begin = t * per;
        const unsigned end = std::min(spec.repetitions, begin + per);
        if (begin < end) crew.emplace_back(run_range, begin, end);
      }
      for (auto& t : crew) t.join();
      records.insert(records.end(), hot.begin(), hot.end());
    }
  }
  return records;
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) return 0;
  double log_sum = 0;
  for (double v : values) log_sum += std::log(v);
  return std::exp(log_sum / static_cast<double>(values.size()));
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::min(values.size(), std::max<std::size_t>(rank, 1)) - 1];
}

Report summarize(SweepAxis axis, const std::vector<RunRecord>& records) {
  Report report;
  report.axis = axis;

  std::map<std::pair<std::string, std::uint64_t>, std::vector<const RunRecord*>>
      cells;
  std::vector<std::pair<std::string, std::uint64_t>> order;
  for (const RunRecord& r : records) {
    auto key = std::make_pair(r.backend, r.value);
    if (cells.find(key) == cells.end()) order.push_back(key);
    cells[key].push_back(&r);
  }

  for (const auto& key : order) {
    CellSummary cell;
    cell.backend = key.first;
    cell.value = key.second;
    std::vector<double> hot;
    for (const RunRecord* r : cells[key]) {
      if (r->dropped) {
        cell.dropped += 1;
      } else if (r->cold) {
        cell.cold_s = r->e2e_s;
      } else {
        hot.push_back(r->e2e_s);
      }
    }
    cell.hot_count = static_cast<unsigned>(hot.size());
    cell.missing = hot.empty();
    if (!hot.empty()) {
      cell.hot_gmean_s = geometric_mean(hot);
      cell.hot_p50_s = percentile(hot, 50);
      cell.hot_p95_s = percentile(hot, 95);
      cell.hot_p99_s = percentile(hot, 99);
      if (cell.cold_s > 0) {
        cell.cold_hot_ratio = cell.cold_s / cell.hot_gmean_s;
      }
    }
    report.cells.push_back(cell);
  }

  // Cross-backend view per axis value, over non-missing cells.
  std::set<std::uint64_t> values;
  for (const CellSummary& cell : report.cells) values.insert(cell.value);
  for (const std::uint64_t value : values) {
    CrossCell cross;
    cross.value = value;
    bool any = false;
    for (const CellSummary& cell : report.cells) {
      if (cell.value != value || cell.missing) continue;
      if (!any || cell.hot_gmean_s < cross.best_hot_s) {
        cross.best_hot_s = cell.hot_gmean_s;
        cross.best_backend = cell.backend;
      }
      if (!any || cell.hot_gmean_s > cross.worst_hot_s) {
        cross.worst_hot_s = cell.hot_gmean_s;
        cross.worst_backend = cell.backend;
      }
      if (cell.cold_s > cross.max_cold_s) {
        cross.max_cold_s = cell.cold_s;
        cross.max_cold_backend = cell.backend;
      }
      any = true;
    }
    if (!any) continue;
    cross.hot_ratio = cross.worst_hot_s / cross.best_hot_s;
    cross.cold_vs_best_hot =
        cross.max_cold_s > 0 ? cross.max_cold_s / cross.best_hot_s : 0;
    report.cross.push_back(cross);
  }
  return report;
}

void write_records_csv(const std::vector<RunRecord>& records, SweepAxis axis,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BenchError("cannot write " + path);
  out << "backend,axis,value,repetition,cold,dropped,processing_s,e2e_s\n";
  for (const RunRecord& r : records) {
    out << r.backend << ',' << to_string(axis) << ',' << r.value << ','
        << r.repetition << ',' << (r.cold ? 1 : 0) << ',' << (r.dropped ? 1 : 0)
        << ',' << fmt_double(r.processing_s) << ',' << fmt_double(r.e2e_s)
        << '\n';
  }
  if (!out.good()) throw BenchError("write failed for " + path);
}

std::vector<RunRecord> read_records_csv(const std::string& path,
                                        SweepAxis* axis) {
  std::ifstream in(path);
  if (!in) throw BenchError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw BenchError("empty records file: " + path);
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    RunRecord r;
    std::getline(row, r.backend, ',');
    std::getline(row, field, ',');
    if (axis) *axis = sweep_axis_from_string(field);
    std::getline(row, field, ',');
    r.value = std::stoull(field);
    std::getline(row, field, ',');
    r.repetition = static_cast<unsigned>(std::stoul(field));
    std::getline(row, field, ',');
    r.cold = field == "1";
    std::getline(row, field, ',');
    r.dropped = field == "1";
    std::getline(row, field, ',');
    r.processing_s = std::stod(field);
    std::getline(row, field, ',');
    r.e2e_s = std::stod(field);
    records.push_back(std::move(r));
  }
  return records;
}

void write_summary_csv(const Report& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BenchError("cannot write " + path);
  out << "backend,axis,value,cold_s,hot_gmean_s,hot_p50_s,hot_p95_s,"
         "hot_p99_s,cold_hot_ratio,hot_count,dropped,missing\n";
  for (const CellSummary& cell : report.cells) {
    out << cell.backend << ',' << to_string(report.axis) << ',' << cell.value
        << ',' << fmt_double(cell.cold_s) << ',' << fmt_double(cell.hot_gmean_s)
        << ',' << fmt_double(cell.hot_p50_s) << ','
        << fmt_double(cell.hot_p95_s) << ',' << fmt_double(cell.hot_p99_s)
        << ',' << fmt_double(cell.cold_hot_ratio) << ',' << cell.hot_count
        << ',' << cell.dropped << ',' << (cell.missing ? 1 : 0) << '\n';
  }
  if (!out.good()) throw BenchError("write failed for " + path);
}

namespace {

json cell_to_json(const CellSummary& cell, SweepAxis axis) {
  return json{{"backend", cell.backend},
              {"axis", to_string(axis)},
              {"value", cell.value},
              {"cold_s", cell.cold_s},
              {"hot_gmean_s", cell.hot_gmean_s},
              {"hot_p50_s", cell.hot_p50_s},
              {"hot_p95_s", cell.hot_p95_s},
              {"hot_p99_s", cell.hot_p99_s},
              {"cold_hot_ratio", cell.cold_hot_ratio},
              {"hot_count", cell.hot_count},
              {"dropped", cell.dropped},
              {"missing", cell.missing}};
}

}  // namespace

void write_report_json(const Report& report,
                       const std::vector<RunRecord>& records,
                       const std::string& path) {
  json cells = json::array();
  for (const CellSummary& cell : report.cells) {
    cells.push_back(cell_to_json(cell, report.axis));
  }
  json cross = json::array();
  for (const CrossCell& c : report.cross) {
    cross.push_back({{"value", c.value},
                     {"best_backend", c.best_backend},
                     {"best_hot_s", c.best_hot_s},
                     {"worst_backend", c.worst_backend},
                     {"worst_hot_s", c.worst_hot_s},
                     {"hot_ratio", c.hot_ratio},
                     {"max_cold_backend", c.max_cold_backend},
                     {"max_cold_s", c.max_cold_s},
                     {"cold_vs_best_hot", c.cold_vs_best_hot}});
  }
  json raw = json::array();
  for (const RunRecord& r : records) {
    raw.push_back({{"backend", r.backend},
                   {"value", r.value},
                   {"repetition", r.repetition},
                   {"cold", r.cold},
                   {"dropped", r.dropped},
                   {"processing_s", r.processing_s},
                   {"e2e_s", r.e2e_s}});
  }
  const json doc = {{"axis", to_string(report.axis)},
                    {"cells", cells},
                    {"cross", cross},
                    {"records", raw}};
  std::ofstream out(path);
  if (!out) throw BenchError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out.good()) throw BenchError("write failed for " + path);
}

std::string render_report(const Report& report) {
  std::ostringstream out;
  out << "# Times reflect this machine and the configured latency models;\n"
         "# sweeps validate trend shapes and configured ratios, not absolute"
         " hardware times.\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %10s %12s %12s %12s %12s %10s\n",
                "backend", to_string(report.axis), "cold_s", "hot_gmean_s",
                "p50_s", "p99_s", "cold/hot");
  out << line;
  for (const CellSummary& cell : report.cells) {
    if (cell.missing) {
      std::snprintf(line, sizeof line, "%-14s %10llu %12s\n",
                    cell.backend.c_str(),
                    static_cast<unsigned long long>(cell.value), "missing");
    } else {
      std::snprintf(line, sizeof line,
                    "%-14s %10llu %12.6f %12.6f %12.6f %12.6f %10.3f\n",
                    cell.backend.c_str(),
                    static_cast<unsigned long long>(cell.value), cell.cold_s,
                    cell.hot_gmean_s, cell.hot_p50_s, cell.hot_p99_s,
                    cell.cold_hot_ratio);
    }
    out << line;
  }
  if (!report.cross.empty()) {
    out << "\ncross-backend (per axis value, hot gmean E2E):\n";
    for (const CrossCell& c : report.cross) {
      std::snprintf(line, sizeof line,
                    "  value %-10llu best %s (%.6fs)  worst %s (%.6fs)  "
                    "ratio %.2fx  max-cold %s (%.3fs, %.1fx best-hot)\n",
                    static_cast<unsigned long long>(c.value),
                    c.best_backend.c_str(), c.best_hot_s,
                    c.worst_backend.c_str(), c.worst_hot_s, c.hot_ratio,
                    c.max_cold_backend.c_str(), c.max_cold_s,
                    c.cold_vs_best_hot);
      out << line;
    }
  }
  return out.str();
}

}  // namespace mce
