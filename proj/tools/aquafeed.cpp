// SPDX-License-Identifier: Apache-2.0
// aquafeed: control service, tank simulator and offline tools.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "aquafeed/api.hpp"
#include "aquafeed/cli.hpp"
#include "aquafeed/config.hpp"
#include "aquafeed/controller.hpp"
#include "aquafeed/error.hpp"
#include "aquafeed/mqtt.hpp"
#include "aquafeed/sim_adapter.hpp"
#include "aquafeed/tanksim.hpp"
#include "json.hpp"

namespace {

using namespace aquafeed;
using J = nlohmann::ordered_json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct GlobalOptions {
  std::string broker_url;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  double speed = 1.0;
  std::string format = "text";
  std::string log_level = "info";

  cli::OutputFormat output() const { return *cli::output_format_from_string(format); }
};

struct ServeOptions {
  std::optional<std::string> http_host;
  std::optional<int> http_port;
  std::optional<std::string> log_dir;
};

struct SimulateOptions {
  bool offline = false;
  double duration_days = 0.0;
  std::string emit_log;
  std::int64_t step_ms = 60'000;
};

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

int run_serve(const GlobalOptions& g, const ServeOptions& s) {
  ControlConfig cfg = g.config_path.empty() ? ControlConfig{} : load_control_config(g.config_path);
  apply_env_overrides(cfg);
  if (!g.broker_url.empty()) cfg.broker_url = g.broker_url;
  if (s.http_host) cfg.http_host = *s.http_host;
  if (s.http_port) cfg.http_port = *s.http_port;
  if (s.log_dir) cfg.service.log_dir = *s.log_dir;

  const mqtt::BrokerUrl url = mqtt::parse_broker_url(cfg.broker_url);
  mqtt::ClientOptions copts;
  copts.client_id = "aquafeed-control";
  std::unique_ptr<mqtt::Client> client;
  try {
    client = std::make_unique<mqtt::Client>(url, copts);
  } catch (const Error& e) {
    spdlog::error("cannot reach broker {}: {}", cfg.broker_url, e.what());
    return 2;
  }

  install_signal_handlers();
  int rc = 0;
  {
    ControlService service(cfg.tanks, *client, cfg.service);
    for (const auto& id : service.tank_ids()) {
      if (auto c = service.recovery_corruption(id)) {
        spdlog::warn("tank {}: event log damaged at byte {} after seq {} ({}); tail dropped", id,
                     c->byte_offset, c->last_good_seq, c->reason);
      }
    }
    service.start();
    ApiServer api(service);
    const int port = api.start(cfg.http_host, cfg.http_port);
    spdlog::info("control service up: broker {}, http://{}:{}/api/v1, {} tank(s)", cfg.broker_url,
                 cfg.http_host, port, service.tank_ids().size());
    if (g.output() == cli::OutputFormat::Machine) {
      std::cout << J{{"event", "ready"}, {"http_port", port}, {"tanks", service.tank_ids()}}.dump()
                << std::endl;
    } else {
      std::cout << "listening on http://" << cfg.http_host << ':' << port << "/api/v1" << std::endl;
    }
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    spdlog::info("shutting down");
    api.stop();
    client->flush(std::chrono::milliseconds(1000));
    client->close();
    service.checkpoint();
    if (service.rejected_messages() > 0) {
      spdlog::warn("{} malformed message(s) were dropped", service.rejected_messages());
    }
  }
  return rc;
}

void print_sim_summary(const sim::TankSim& tank, const sim::AdapterStats& stats, cli::OutputFormat format) {
  if (format == cli::OutputFormat::Machine) {
    std::cout << J{{"tank_id", tank.config().tank_id},
                   {"sim_ms", tank.now_ms() - tank.config().start_ms},
                   {"days_elapsed", tank.days_elapsed()},
                   {"mean_weight_g", tank.mean_weight_g()},
                   {"dispensed_mg", tank.total_dispensed_mg()},
                   {"hopper_mg", tank.feeder().hopper_mg},
                   {"messages_published", stats.published},
                   {"commands_executed", stats.commands_executed},
                   {"malformed", stats.malformed}}
                     .dump()
              << std::endl;
    return;
  }
  std::cout << "tank " << tank.config().tank_id << ": " << tank.days_elapsed() << " day(s) simulated\n"
            << "mean weight: " << tank.mean_weight_g() << " g\n"
            << "dispensed: " << static_cast<double>(tank.total_dispensed_mg()) / 1000.0 << " g, hopper "
            << tank.feeder().hopper_g() << " g\n"
            << "published " << stats.published << " message(s), executed " << stats.commands_executed
            << " command(s)" << std::endl;
}

int run_simulate(const GlobalOptions& g, const SimulateOptions& s) {
  sim::ScenarioConfig scenario =
      g.config_path.empty() ? sim::ScenarioConfig{} : load_scenario_config(g.config_path);
  if (g.seed) scenario.seed = *g.seed;
  scenario.validate();
  const auto duration_ms = static_cast<std::int64_t>(s.duration_days * sim::kMsPerDay);
  if (s.offline && duration_ms <= 0) {
    throw Error(ErrorKind::InvalidInput, "duration-days", "an offline run needs a positive duration");
  }

  std::ofstream emit;
  if (!s.emit_log.empty()) {
    emit.open(s.emit_log, std::ios::trunc);
    if (!emit) throw Error(ErrorKind::Io, s.emit_log, "cannot open emission log");
  }

  sim::TankSim tank(scenario);
  install_signal_handlers();
  if (s.offline) {
    InProcessBus bus;
    sim::SimAdapter adapter(tank, bus);
    if (emit.is_open()) adapter.set_emission_log(&emit);
    adapter.start();
    adapter.run_for(duration_ms, s.step_ms);
    print_sim_summary(tank, adapter.stats(), g.output());
    return 0;
  }

  std::string broker = g.broker_url;
  if (broker.empty()) broker = process_env("AQUA_BROKER_URL").value_or("mqtt://127.0.0.1:1883");
  const mqtt::BrokerUrl url = mqtt::parse_broker_url(broker);
  mqtt::ClientOptions copts;
  copts.client_id = "aquafeed-sim-" + scenario.tank_id;
  std::unique_ptr<mqtt::Client> client;
  try {
    client = std::make_unique<mqtt::Client>(url, copts);
  } catch (const Error& e) {
    spdlog::error("cannot reach broker {}: {}", broker, e.what());
    return 2;
  }
  sim::SimAdapter adapter(tank, *client);
  if (emit.is_open()) adapter.set_emission_log(&emit);
  adapter.start();
  spdlog::info("simulating tank {} at {}x (seed {})", scenario.tank_id, g.speed, scenario.seed);
  adapter.run_realtime(g.speed, duration_ms, g_stop);
  client->flush(std::chrono::milliseconds(2000));
  client->close();
  print_sim_summary(tank, adapter.stats(), g.output());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aquafeed: precision feeding control plane for tilapia tanks"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--broker-url", g.broker_url, "MQTT broker, e.g. mqtt://127.0.0.1:1883")
      ->envname("AQUA_BROKER_URL");
  app.add_option("--config", g.config_path, "JSON config file")->envname("AQUA_CONFIG");
  app.add_option("--seed", g.seed, "Simulator seed (overrides the scenario file)");
  app.add_option("--speed", g.speed, "Simulated seconds per wall-clock second")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"text", "machine"}))
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "Diagnostics level")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}))
      ->capture_default_str();

  ServeOptions serve_opts;
  auto* serve = app.add_subcommand("serve", "Run the control service and HTTP API");
  serve->fallthrough();
  serve->add_option("--http-host", serve_opts.http_host, "HTTP bind address");
  serve->add_option("--http-port", serve_opts.http_port, "HTTP port (0 picks a free port)")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--log-dir", serve_opts.log_dir, "Directory for per-tank event logs");

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run the virtual tank");
  simulate->fallthrough();
  simulate->add_flag("--offline", sim_opts.offline, "Run without a broker as fast as possible");
  simulate->add_option("--duration-days", sim_opts.duration_days, "Simulated days to run (0 = until stopped)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--emit-log", sim_opts.emit_log, "Write every published message to this file");
  simulate->add_option("--step-ms", sim_opts.step_ms, "Offline step size")->check(CLI::PositiveNumber);

  cli::ComputeInputs compute_in;
  std::string method = "world-euclidean";
  auto* compute = app.add_subcommand("compute", "Offline ration from detection and depth files");
  compute->fallthrough();
  compute->add_option("--detections-a", compute_in.detections_a, "Camera A detections JSON")->check(CLI::ExistingFile);
  compute->add_option("--detections-b", compute_in.detections_b, "Camera B detections JSON")->check(CLI::ExistingFile);
  compute->add_option("--depth-a", compute_in.depth_a, "Camera A depth map");
  compute->add_option("--depth-b", compute_in.depth_b, "Camera B depth map");
  compute->add_option("--intrinsics", compute_in.intrinsics, "Camera intrinsics JSON")->required();
  compute->add_option("--table", compute_in.band_table, "Feeding band table JSON");
  compute->add_option("--method", method, "Length method")
      ->check(CLI::IsMember({"world-euclidean", "eq3-literal"}))
      ->capture_default_str();
  compute->add_option("--pairing-tolerance-ms", compute_in.pairing_tolerance_ms, "Max A/B timestamp gap")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  cli::ReplayOptions replay_opts;
  std::optional<std::string> replay_tank;
  auto* replay = app.add_subcommand("replay", "Rebuild tank state from an event log");
  replay->fallthrough();
  replay->add_option("log", replay_opts.log_path, "Event log file")->required();
  replay->add_option("--tank", replay_tank, "Tank id for an empty log (default: file stem)");
  replay->add_flag("--strict", replay_opts.strict, "Exit nonzero when the log is damaged");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto logger = spdlog::stderr_color_mt("aquafeed");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*serve) return run_serve(g, serve_opts);
    if (*simulate) return run_simulate(g, sim_opts);
    if (*compute) {
      compute_in.method = *length_method_from_string(method);
      return cli::cmd_compute(compute_in, g.output(), std::cout, std::cerr);
    }
    if (*replay) {
      replay_opts.tank_id = replay_tank;
      return cli::cmd_replay(replay_opts, g.output(), std::cout, std::cerr);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 0;
}
