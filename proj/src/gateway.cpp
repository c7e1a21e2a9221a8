#include "mcesvc/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace mce {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void validate(const PricingRequest& request) {
  if (request.options.empty()) {
    throw ValidationError("options", "batch must contain at least one option");
  }
  if (request.options.size() > kMaxBatchOptions) {
    throw ValidationError("options", "batch exceeds " +
                                         std::to_string(kMaxBatchOptions) +
                                         " options");
  }
  validate(SimParams{request.paths, request.seed_base});
  for (std::size_t i = 0; i < request.options.size(); ++i) {
    try {
      validate(request.options[i]);
    } catch (const ValidationError& e) {
      throw ValidationError(
          "options[" + std::to_string(i) + "]." + e.field(), e.what());
    }
  }
}

std::vector<SubBatch> split(const PricingRequest& request,
                            unsigned chunk_size) {
  const std::size_t chunk = std::max(1u, chunk_size);
  const std::size_t n = request.options.size();
  std::vector<SubBatch> subs;
  subs.reserve((n + chunk - 1) / chunk);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t end = std::min(n, start + chunk);
    SubBatch sub;
    sub.paths = request.paths;
    sub.options.assign(request.options.begin() + start,
                       request.options.begin() + end);
    sub.seeds.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      sub.seeds.push_back(request.seed_base + i);
    }
    subs.push_back(std::move(sub));
  }
  return subs;
}

WorkerPool::WorkerPool(BackendProfile profile, unsigned workers)
    : profile_(std::move(profile)) {
  validate(profile_);
  for (unsigned i = 0; i < workers; ++i) {
    slots_.push_back(
        {make_backend(profile_), std::make_shared<std::mutex>()});
  }
}

WorkerPool::WorkerPool(BackendProfile profile,
                       std::vector<std::unique_ptr<Backend>> backends)
    : profile_(std::move(profile)) {
  for (auto& b : backends) {
    slots_.push_back({std::move(b), std::make_shared<std::mutex>()});
  }
}

unsigned WorkerPool::size() const {
  std::lock_guard lock(mu_);
  return static_cast<unsigned>(slots_.size());
}

std::uint64_t WorkerPool::generation() const {
  std::lock_guard lock(mu_);
  return generation_;
}

std::vector<Lifecycle> WorkerPool::lifecycles() const {
  std::vector<Slot> slots = snapshot();
  std::vector<Lifecycle> out;
  out.reserve(slots.size());
  for (const Slot& s : slots) out.push_back(s.backend->lifecycle());
  return out;
}

std::vector<WorkerPool::Slot> WorkerPool::snapshot() const {
  std::lock_guard lock(mu_);
  return slots_;
}

void WorkerPool::reset() {
  std::vector<Slot> fresh;
  for (unsigned i = 0; i < slots_.size(); ++i) {
    fresh.push_back({make_backend(profile_), std::make_shared<std::mutex>()});
  }
  std::lock_guard lock(mu_);
  slots_ = std::move(fresh);
  generation_ += 1;
  rr_counter_ = 0;
}

PriceResult WorkerPool::price(const PricingRequest& request) {
  const std::vector<Slot> slots = snapshot();
  if (slots.empty()) {
    throw ServiceUnavailable("no workers in pool " + profile_.name);
  }
  const std::vector<SubBatch> subs = split(request, profile_.chunk_size);
  const std::size_t m = subs.size();
  const std::size_t w = slots.size();
  const std::uint64_t base = rr_counter_.fetch_add(m);

  std::vector<BackendReply> replies(m);
  // Round-robin assignment, one serial run per worker: sub-batch i goes to
  // worker (base+i) mod w. Completion order does not matter — replies land
  // in their own slots and are merged by index.
  std::vector<std::vector<std::size_t>> runs(w);
  for (std::size_t i = 0; i < m; ++i) {
    runs[(base + i) % w].push_back(i);
  }

  auto call = [](const Slot& slot, const SubBatch& batch) {
    std::lock_guard busy(*slot.busy);
    return slot.backend->price(batch);
  };
  auto serve = [&](std::size_t worker) {
    for (std::size_t i : runs[worker]) {
      try {
        replies[i] = call(slots[worker], subs[i]);
      } catch (const BackendError&) {
        // One retry on the next worker; a second failure surfaces in-band.
        try {
          replies[i] = call(slots[(worker + 1) % w], subs[i]);
        } catch (const BackendError&) {
          replies[i].results.assign(subs[i].options.size(),
                                    {0, 0, ResultStatus::kBackendError});
          replies[i].processing_s = 0;
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (std::size_t worker = 0; worker < w; ++worker) {
    if (!runs[worker].empty()) {
      threads.emplace_back(serve, worker);
    }
  }
  for (auto& t : threads) t.join();

  PriceResult out;
  out.results.reserve(request.options.size());
  for (const BackendReply& reply : replies) {
    out.results.insert(out.results.end(), reply.results.begin(),
                       reply.results.end());
    out.timing.processing_s += reply.processing_s;
    out.cold = out.cold || reply.was_cold;
  }
  return out;
}

GatewayConfig default_gateway_config() {
  GatewayConfig config;
  BackendProfile local;
  local.name = "local-cpu";
  local.kind = BackendKind::kLocalCpu;
  config.profiles.push_back(local);
  return config;
}

namespace {

void parse_bind(const std::string& text, std::string* host,
                std::uint16_t* port) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ValidationError("bind", "expected host:port, got: " + text);
  }
  const unsigned long p = std::stoul(text.substr(colon + 1));
  if (p > 65535) {
    throw ValidationError("bind", "port out of range: " + text);
  }
  *host = text.substr(0, colon);
  *port = static_cast<std::uint16_t>(p);
}

BackendProfile parse_profile(const json& j) {
  static const char* known[] = {
      "name",       "kind",          "cold_penalty_s", "per_request_overhead_s",
      "per_path_cost_s", "chunk_size", "endpoint",      "timeout_s",
      "mc_threads"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
          return key == k;
        }) == std::end(known)) {
      throw ValidationError("backends", "unknown backend key: " + key);
    }
  }
  BackendProfile p;
  p.name = j.at("name").get<std::string>();
  p.kind = backend_kind_from_string(j.at("kind").get<std::string>());
  p.cold_penalty_s = j.value("cold_penalty_s", 0.0);
  p.per_request_overhead_s = j.value("per_request_overhead_s", 0.0);
  p.per_path_cost_s = j.value("per_path_cost_s", 0.0);
  p.chunk_size = j.value("chunk_size", 7u);
  p.endpoint = j.value("endpoint", std::string());
  p.timeout_s = j.value("timeout_s", 0.5);
  p.mc_threads = j.value("mc_threads", 1u);
  validate(p);
  return p;
}

}  // namespace

GatewayConfig parse_gateway_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("config", std::string("bad JSON: ") + e.what());
  }
  GatewayConfig config;
  if (j.contains("bind")) {
    parse_bind(j.at("bind").get<std::string>(), &config.bind_host,
               &config.port);
  }
  config.workers = j.value("workers", 2u);
  if (config.workers < 1) {
    throw ValidationError("workers", "worker count must be >= 1");
  }
  if (!j.contains("backends") || !j.at("backends").is_array() ||
      j.at("backends").empty()) {
    throw ValidationError("backends", "at least one backend profile required");
  }
  for (const json& backend : j.at("backends")) {
    config.profiles.push_back(parse_profile(backend));
  }
  config.default_backend =
      j.value("default_backend", config.profiles.front().name);
  const bool known = std::any_of(
      config.profiles.begin(), config.profiles.end(),
      [&](const BackendProfile& p) { return p.name == config.default_backend; });
  if (!known) {
    throw ValidationError("default_backend",
                          "no such backend: " + config.default_backend);
  }
  return config;
}

GatewayConfig load_gateway_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("config", "cannot open config file: " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_gateway_config(text.str());
}

void apply_env_overrides(GatewayConfig& config) {
  if (const char* bind = std::getenv("MCESVC_BIND")) {
    parse_bind(bind, &config.bind_host, &config.port);
  }
  if (const char* endpoint = std::getenv("MCESVC_ACCEL_ENDPOINT")) {
    for (BackendProfile& p : config.profiles) {
      if (p.kind == BackendKind::kRemoteAccel) {
        p.endpoint = endpoint;
      }
    }
  }
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {
  if (config_.profiles.empty()) {
    throw ValidationError("backends", "at least one backend profile required");
  }
  for (const BackendProfile& profile : config_.profiles) {
    pools_.emplace(profile.name,
                   std::make_unique<WorkerPool>(profile, config_.workers));
  }
}

Gateway::~Gateway() { stop(); }

WorkerPool* Gateway::pool(const std::string& name) {
  const auto it = pools_.find(name);
  return it == pools_.end() ? nullptr : it->second.get();
}

PriceResult Gateway::handle_price(const PricingRequest& request,
                                  const std::string& backend) {
  return priced_from(request, backend, Clock::now());
}

PriceResult Gateway::priced_from(const PricingRequest& request,
                                 const std::string& backend,
                                 Clock::time_point received) {
  validate(request);
  const std::string name =
      backend.empty() ? config_.default_backend : backend;
  WorkerPool* pool = this->pool(name);
  if (pool == nullptr) {
    throw ValidationError("backend", "unknown backend: " + name);
  }
  PriceResult result = pool->price(request);
  result.timing.e2e_s = seconds_since(received);
  {
    std::lock_guard lock(metrics_mu_);
    BackendMetrics& m = metrics_[name];
    m.requests += 1;
    m.options += request.options.size();
    m.cold_requests += result.cold ? 1 : 0;
    m.sum_processing_s += result.timing.processing_s;
    m.sum_e2e_s += result.timing.e2e_s;
    m.last_e2e_s = result.timing.e2e_s;
  }
  return result;
}

std::vector<std::string> Gateway::reset_backends(const std::string& name) {
  std::vector<std::string> reset;
  if (!name.empty()) {
    WorkerPool* pool = this->pool(name);
    if (pool == nullptr) {
      throw ValidationError("backend", "unknown backend: " + name);
    }
    pool->reset();
    reset.push_back(name);
    return reset;
  }
  for (auto& [pool_name, pool] : pools_) {
    pool->reset();
    reset.push_back(pool_name);
  }
  return reset;
}

std::string Gateway::metrics_json() const {
  json backends = json::object();
  for (const auto& [name, pool] : pools_) {
    json entry;
    entry["workers"] = pool->size();
    entry["generation"] = pool->generation();
    json lifecycles = json::array();
    for (Lifecycle lc : pool->lifecycles()) lifecycles.push_back(to_string(lc));
    entry["lifecycles"] = lifecycles;
    {
      std::lock_guard lock(metrics_mu_);
      const auto it = metrics_.find(name);
      const BackendMetrics m =
          it == metrics_.end() ? BackendMetrics{} : it->second;
      entry["requests"] = m.requests;
      entry["options"] = m.options;
      entry["cold_requests"] = m.cold_requests;
      entry["mean_processing_s"] =
          m.requests ? m.sum_processing_s / m.requests : 0.0;
      entry["mean_e2e_s"] = m.requests ? m.sum_e2e_s / m.requests : 0.0;
      entry["last_e2e_s"] = m.last_e2e_s;
    }
    backends[name] = entry;
  }
  std::uint64_t total = 0;
  {
    std::lock_guard lock(metrics_mu_);
    for (const auto& [_, m] : metrics_) total += m.requests;
  }
  return json{{"requests_total", total}, {"backends", backends}}.dump();
}

namespace {

// ---- HTTP plumbing -------------------------------------------------------

json error_body(const std::string& field, const std::string& message) {
  return json{{"error", {{"field", field}, {"message", message}}}};
}

OptionKind parse_kind(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "call" || lower == "0") return OptionKind::kCall;
  if (lower == "put" || lower == "1") return OptionKind::kPut;
  throw ValidationError("kind", "kind must be call or put, got: " + text);
}

double parse_double(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(field, "not a number: " + text);
  }
}

std::uint64_t parse_u64(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(field, "not an unsigned integer: " + text);
  }
}

std::string required_param(const httplib::Request& req,
                           const std::string& name) {
  if (!req.has_param(name)) {
    throw ValidationError(name, "missing required parameter");
  }
  return req.get_param_value(name);
}

OptionSpec option_from_json(const json& j, std::size_t index) {
  auto field = [&](const char* name) {
    return "options[" + std::to_string(index) + "]." + name;
  };
  auto number = [&](const char* name) {
    if (!j.contains(name) || !j.at(name).is_number()) {
      throw ValidationError(field(name), "missing or non-numeric field");
    }
    return j.at(name).get<double>();
  };
  OptionSpec spec;
  spec.spot = number("spot");
  spec.strike = number("strike");
  spec.rate = number("rate");
  spec.volatility = number("vol");
  spec.expiry = number("expiry");
  if (!j.contains("kind")) {
    throw ValidationError(field("kind"), "missing field");
  }
  const json& kind = j.at("kind");
  try {
    spec.kind = kind.is_number_integer()
                    ? parse_kind(std::to_string(kind.get<int>()))
                    : parse_kind(kind.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(field("kind"), e.what());
  }
  return spec;
}

json result_to_json(const PriceResult& result) {
  json results = json::array();
  for (const OptionResult& r : result.results) {
    results.push_back({{"price", r.price},
                       {"std_error", r.std_error},
                       {"status", to_string(r.status)}});
  }
  return json{{"results", results},
              {"timing",
               {{"processing_s", result.timing.processing_s},
                {"e2e_s", result.timing.e2e_s}}},
              {"cold", result.cold}};
}

}  // namespace

void Gateway::install_routes() {
  auto guarded = [this](const httplib::Request& req, httplib::Response& res,
                        auto&& parse) {
    const auto received = Clock::now();
    try {
      auto [request, backend] = parse(req);
      PriceResult result = priced_from(request, backend, received);
      res.set_content(result_to_json(result).dump(), "application/json");
    } catch (const ValidationError& e) {
      res.status = 400;
      res.set_content(error_body(e.field(), e.what()).dump(),
                      "application/json");
    } catch (const ServiceUnavailable& e) {
      res.status = 503;
      res.set_content(error_body("", e.what()).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_body("", e.what()).dump(), "application/json");
    }
  };

  server_->Get("/v1/price", [guarded](const httplib::Request& req,
                                      httplib::Response& res) {
    guarded(req, res, [](const httplib::Request& r) {
      PricingRequest request;
      OptionSpec spec;
      spec.spot = parse_double("spot", required_param(r, "spot"));
      spec.strike = parse_double("strike", required_param(r, "strike"));
      spec.rate = parse_double("rate", required_param(r, "rate"));
      spec.volatility = parse_double("vol", required_param(r, "vol"));
      spec.expiry = parse_double("expiry", required_param(r, "expiry"));
      spec.kind = parse_kind(required_param(r, "kind"));
      request.options.push_back(spec);
      const std::uint64_t paths =
          parse_u64("paths", required_param(r, "paths"));
      if (paths == 0 || paths > 0xFFFFFFFFull) {
        throw ValidationError("paths", "paths out of range");
      }
      request.paths = static_cast<std::uint32_t>(paths);
      request.seed_base =
          r.has_param("seed") ? parse_u64("seed", r.get_param_value("seed"))
                              : 0;
      const std::string backend =
          r.has_param("backend") ? r.get_param_value("backend") : "";
      return std::pair{request, backend};
    });
  });

  server_->Post("/v1/price", [guarded](const httplib::Request& req,
                                       httplib::Response& res) {
    guarded(req, res, [](const httplib::Request& r) {
      json body;
      try {
        body = json::parse(r.body);
      } catch (const json::exception& e) {
        throw ValidationError("body", std::string("bad JSON: ") + e.what());
      }
      if (!body.contains("options") || !body.at("options").is_array()) {
        throw ValidationError("options", "missing options array");
      }
      PricingRequest request;
      std::size_t index = 0;
      for (const json& opt : body.at("options")) {
        request.options.push_back(option_from_json(opt, index++));
      }
      if (!body.contains("paths") ||
          !body.at("paths").is_number_unsigned()) {
        throw ValidationError("paths", "missing or non-integral paths");
      }
      const std::uint64_t paths = body.at("paths").get<std::uint64_t>();
      if (paths == 0 || paths > 0xFFFFFFFFull) {
        throw ValidationError("paths", "paths out of range");
      }
      request.paths = static_cast<std::uint32_t>(paths);
      request.seed_base = body.value("seed_base", 0ull);
      const std::string backend = body.value("backend", std::string());
      return std::pair{request, backend};
    });
  });

  server_->Get("/v1/healthz",
               [](const httplib::Request&, httplib::Response& res) {
                 res.set_content(json{{"status", "ok"}}.dump(),
                                 "application/json");
               });

  server_->Get("/v1/metrics",
               [this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(metrics_json(), "application/json");
               });

  server_->Post("/v1/admin/reset", [this](const httplib::Request& req,
                                          httplib::Response& res) {
    const std::string name =
        req.has_param("backend") ? req.get_param_value("backend") : "";
    try {
      json reset = json::array();
      for (const std::string& pool_name : reset_backends(name)) {
        reset.push_back({{"backend", pool_name},
                         {"workers", pool(pool_name)->size()}});
      }
      res.set_content(json{{"reset", reset}}.dump(), "application/json");
    } catch (const ValidationError& e) {
      res.status = 400;
      res.set_content(error_body(e.field(), e.what()).dump(),
                      "application/json");
    }
  });
}

void Gateway::start() {
  if (server_) return;
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  if (config_.port == 0) {
    const int port = server_->bind_to_any_port(config_.bind_host);
    if (port < 0) {
      server_.reset();
      throw std::runtime_error("gateway: cannot bind " + config_.bind_host);
    }
    bound_port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!server_->bind_to_port(config_.bind_host, config_.port)) {
      server_.reset();
      throw std::runtime_error("gateway: cannot bind " + config_.bind_host +
                               ":" + std::to_string(config_.port));
    }
    bound_port_ = config_.port;
  }
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Gateway::stop() {
  if (!server_) return;
  server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace mce
