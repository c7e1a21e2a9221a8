// Simulated disaggregated accelerator daemon: listens for pricing frames on
// UDP and serves them through a fixed pool of pricing lanes.

#include <csignal>
#include <cstdio>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "mcesvc/node.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcesvc accelerator node"};

  std::string bind = "127.0.0.1:7771";
  mce::NodeConfig config;
  std::string pacing = "native";
  app.add_option("--bind", bind, "listen address as host:port")
      ->capture_default_str();
  app.add_option("--lanes", config.lanes, "parallel pricing lanes")
      ->capture_default_str();
  app.add_option("--rate", config.per_lane_rate,
                 "modeled per-lane throughput in paths/second (0 = off)")
      ->capture_default_str();
  app.add_option("--pacing", pacing, "native|modeled")
      ->check(CLI::IsMember({"native", "modeled"}))
      ->capture_default_str();
  app.add_option("--max-inflight", config.max_inflight_frames,
                 "frames assembled concurrently")
      ->capture_default_str();
  app.add_option("--mc-threads", config.mc_threads,
                 "pricing threads per lane call")
      ->capture_default_str();
  app.add_flag("--log-frames", config.log_frames,
               "log one line per served frame");
  app.add_option("--dup-responses", config.dup_responses,
                 "send each response N times (loss testing)")
      ->capture_default_str();
  app.add_option("--drop-every", config.drop_every,
                 "suppress the response to every Nth frame (0 = off)")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    std::fprintf(stderr, "--bind expects host:port, got %s\n", bind.c_str());
    return 2;
  }
  config.bind_host = bind.substr(0, colon);
  config.port = static_cast<std::uint16_t>(std::stoul(bind.substr(colon + 1)));
  config.pacing =
      pacing == "modeled" ? mce::Pacing::kModeled : mce::Pacing::kNative;

  try {
    mce::validate(config);
    mce::AccelNode node(config);
    node.start();
    std::printf("accel-node listening on %s:%u lanes=%u pacing=%s\n",
                config.bind_host.c_str(), node.port(), config.lanes,
                pacing.c_str());
    std::fflush(stdout);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    node.stop();
    std::printf("%s\n", mce::to_json(node.stats()).c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "accel-node: %s\n", e.what());
    return 1;
  }
}
