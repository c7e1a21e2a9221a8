// Pricing service gateway: REST front door, request splitter, round-robin
// balancer, and per-backend worker pools.

#include <csignal>
#include <cstdio>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "mcesvc/gateway.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcesvc pricing gateway"};

  std::string config_path;
  std::string bind;
  unsigned workers = 0;
  std::string default_backend;
  app.add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--bind", bind, "override bind address as host:port");
  app.add_option("--workers", workers, "override workers per backend pool");
  app.add_option("--default-backend", default_backend,
                 "override the default backend profile");
  CLI11_PARSE(app, argc, argv);

  try {
    mce::GatewayConfig config = config_path.empty()
                                    ? mce::default_gateway_config()
                                    : mce::load_gateway_config(config_path);
    mce::apply_env_overrides(config);
    if (!bind.empty()) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos || colon == 0) {
        std::fprintf(stderr, "--bind expects host:port, got %s\n",
                     bind.c_str());
        return 2;
      }
      config.bind_host = bind.substr(0, colon);
      config.port =
          static_cast<std::uint16_t>(std::stoul(bind.substr(colon + 1)));
    }
    if (workers > 0) config.workers = workers;
    if (!default_backend.empty()) config.default_backend = default_backend;

    mce::Gateway gateway(std::move(config));
    gateway.start();
    std::printf("svc-gateway listening on %s:%u default_backend=%s\n",
                gateway.config().bind_host.c_str(), gateway.port(),
                gateway.config().default_backend.c_str());
    std::fflush(stdout);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    gateway.stop();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "svc-gateway: %s\n", e.what());
    return 1;
  }
}
