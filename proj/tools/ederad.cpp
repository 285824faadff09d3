// Copyright 2026 The edera-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not
// use this file except in compliance with the License. You may obtain a copy of
// the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations under
// the License.

// ederad: the control-plane daemon. Hosts the zone daemon, net proxy, pod
// shim, and orchestrator in one process, drives simulated time from a wall
// cadence, and answers the ederactl RPC surface. One mutex serializes every
// RPC against the pump loop; that is the whole concurrency story.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edera/bench.hpp"
#include "edera/common.hpp"
#include "edera/cri.hpp"
#include "edera/daemon.hpp"
#include "edera/net_proxy.hpp"
#include "edera/orchestrator.hpp"
#include "edera/rpc.hpp"
#include "edera/scenario.hpp"
#include "edera/zone.hpp"
#include "tool_util.hpp"

namespace edera::tools {
namespace {

using nlohmann::json;

// Logical milliseconds an exec RPC may burn before the daemon gives up.
constexpr std::uint64_t kExecBudgetMs = 30000;

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

struct ControlPlane {
  std::mutex mu;
  LogicalClock clock;
  std::optional<ZoneDaemon> daemon;
  std::optional<NetProxy> proxy;
  std::optional<DaemonBackend> backend;
  std::optional<CriShim> cri;
  Orchestrator orchestrator;
  std::uint64_t pump_quantum_ms = 10;
};

// ---- JSON helpers ----------------------------------------------------------

json record_json(const ZoneRecord& record) { return json::parse(to_json(record)); }

Result<json> parse_params(const std::string& params) {
  if (params.empty()) return json::object();
  json parsed = json::parse(params, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    return Error(Errc::kInvalidArgument, "params must be a json object");
  }
  return parsed;
}

Result<std::string> need_string(const json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_string()) {
    return Error(Errc::kInvalidArgument, std::string("missing string field \"") + key + "\"");
  }
  return params[key].get<std::string>();
}

Result<std::uint64_t> need_u64(const json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_number_unsigned()) {
    return Error(Errc::kInvalidArgument,
                 std::string("missing unsigned integer field \"") + key + "\"");
  }
  return params[key].get<std::uint64_t>();
}

std::uint64_t opt_u64(const json& params, const char* key, std::uint64_t fallback) {
  if (params.contains(key) && params[key].is_number_unsigned()) {
    return params[key].get<std::uint64_t>();
  }
  return fallback;
}

bool opt_bool(const json& params, const char* key, bool fallback) {
  if (params.contains(key) && params[key].is_boolean()) return params[key].get<bool>();
  return fallback;
}

Result<ZoneId> need_zone_id(const json& params, const char* key = "id") {
  auto text = need_string(params, key);
  if (!text.is_ok()) return text.error();
  auto id = ZoneId::parse(text.value());
  if (!id.has_value()) {
    return Error(Errc::kInvalidArgument, "malformed zone id: " + text.value());
  }
  return *id;
}

json diff_json(const ReconcileDiff& diff) {
  json out;
  out["created"] = diff.to_create.size();
  out["destroyed"] = diff.to_destroy.size();
  out["unchanged"] = diff.unchanged;
  out["failures"] = diff.failures;
  return out;
}

json report_json(const ScenarioReport& report) {
  json checks = json::array();
  for (const auto& check : report.checks) {
    checks.push_back({{"description", check.description}, {"passed", check.passed}});
  }
  return json{{"name", report.name},
              {"passed", report.passed},
              {"violated", report.violated()},
              {"checks", checks},
              {"text", report.render()}};
}

// ---- method handlers -------------------------------------------------------
// Every handler runs with plane.mu held.

Result<json> do_zone_create(ControlPlane& plane, const json& params) {
  auto kernel = need_string(params, "kernel");
  if (!kernel.is_ok()) return kernel.error();
  ZoneSpec spec;
  spec.kernel_image = kernel.take();
  spec.memory_mib = opt_u64(params, "memory_mib", 0);
  spec.vcpus = static_cast<std::uint32_t>(opt_u64(params, "vcpus", 0));
  const bool warm = opt_bool(params, "warm", false);
  auto record = plane.daemon->create_zone(spec, warm);
  if (!record.is_ok()) return record.error();
  return record_json(record.value());
}

Result<json> do_zone_list(ControlPlane& plane) {
  json zones = json::array();
  for (const auto& record : plane.daemon->list_zones()) {
    zones.push_back(record_json(record));
  }
  return json{{"zones", zones}};
}

Result<json> do_zone_get(ControlPlane& plane, const json& params) {
  auto id = need_zone_id(params);
  if (!id.is_ok()) return id.error();
  auto record = plane.daemon->zone(id.value());
  if (!record.is_ok()) return record.error();
  return record_json(record.value());
}

Result<json> do_zone_destroy(ControlPlane& plane, const json& params) {
  auto id = need_zone_id(params);
  if (!id.is_ok()) return id.error();
  auto status = plane.daemon->destroy_zone(id.value());
  if (!status.is_ok()) return status.error();
  return json{{"ok", true}};
}

Result<json> do_zone_activate(ControlPlane& plane, const json& params) {
  auto id = need_zone_id(params);
  if (!id.is_ok()) return id.error();
  auto cpus = need_u64(params, "cpus");
  if (!cpus.is_ok()) return cpus.error();
  auto memory = need_u64(params, "memory_mib");
  if (!memory.is_ok()) return memory.error();
  auto record = plane.daemon->activate_zone(id.value(),
                                            static_cast<std::uint32_t>(cpus.value()),
                                            memory.value());
  if (!record.is_ok()) return record.error();
  return record_json(record.value());
}

Result<json> do_zone_quarantine(ControlPlane& plane, const json& params, bool quarantine) {
  auto id = need_zone_id(params);
  if (!id.is_ok()) return id.error();
  auto record = quarantine ? plane.daemon->quarantine_zone(id.value())
                           : plane.daemon->release_zone(id.value());
  if (!record.is_ok()) return record.error();
  return record_json(record.value());
}

Result<json> do_zone_exec(ControlPlane& plane, const json& params) {
  auto id = need_zone_id(params);
  if (!id.is_ok()) return id.error();
  if (!params.contains("argv") || !params["argv"].is_array() || params["argv"].empty()) {
    return Error(Errc::kInvalidArgument, "missing non-empty array field \"argv\"");
  }
  std::vector<std::string> argv;
  for (const auto& arg : params["argv"]) {
    if (!arg.is_string()) return Error(Errc::kInvalidArgument, "argv entries must be strings");
    argv.push_back(arg.get<std::string>());
  }
  std::vector<std::uint8_t> stdin_bytes;
  if (params.contains("stdin_hex")) {
    auto text = need_string(params, "stdin_hex");
    if (!text.is_ok()) return text.error();
    auto decoded = from_hex(text.value());
    if (!decoded.has_value()) {
      return Error(Errc::kInvalidArgument, "stdin_hex is not valid hex");
    }
    stdin_bytes.assign(decoded->begin(), decoded->end());
  }
  auto stream = plane.daemon->exec_in_zone(id.value(), argv, stdin_bytes);
  if (!stream.is_ok()) return stream.error();

  // Fast-forward simulated time until the guest reports exit. The pump
  // thread is excluded by the caller's lock; time only moves forward.
  const std::uint64_t deadline = plane.clock.now_ms() + kExecBudgetMs;
  while (plane.clock.now_ms() < deadline) {
    auto result = plane.daemon->exec_result(stream.value());
    if (!result.is_ok()) return result.error();
    if (result.value().done) {
      const auto& done = result.value();
      return json{{"exit_code", done.exit_code},
                  {"stdout_hex", to_hex(done.stdout_bytes.data(), done.stdout_bytes.size())},
                  {"stderr_hex", to_hex(done.stderr_bytes.data(), done.stderr_bytes.size())}};
    }
    plane.clock.advance(plane.pump_quantum_ms);
    plane.daemon->pump(plane.clock.now_ms());
  }
  return Error(Errc::kRpcError, "exec did not complete within the time budget");
}

Result<json> do_zone_monitor(ControlPlane& plane, const json& params) {
  const std::uint64_t limit = opt_u64(params, "limit", 0);
  const auto& log = plane.daemon->monitor_log();
  const std::size_t start =
      (limit > 0 && log.size() > limit) ? log.size() - static_cast<std::size_t>(limit) : 0;
  json entries = json::array();
  for (std::size_t i = start; i < log.size(); ++i) {
    entries.push_back({{"zone", log[i].zone.to_string()},
                       {"untrusted", log[i].untrusted},
                       {"detail", log[i].detail},
                       {"at_ms", log[i].at_ms}});
  }
  return json{{"entries", entries}};
}

Result<json> do_pod_apply(ControlPlane& plane, const json& params) {
  auto manifest = need_string(params, "manifest");
  if (!manifest.is_ok()) return manifest.error();
  auto pods = parse_manifests(manifest.value());
  if (!pods.is_ok()) return pods.error();

  json applied = json::array();
  json unmanaged = json::array();
  for (const auto& pod : pods.value()) {
    if (!pod.managed()) {
      unmanaged.push_back({{"namespace", pod.pod_namespace},
                           {"name", pod.name},
                           {"runtime_class", pod.runtime_class}});
      continue;
    }
    auto status = plane.cri->apply(pod);
    if (!status.is_ok()) return status.error();
    applied.push_back({{"namespace", pod.pod_namespace}, {"name", pod.name}});
  }

  json out{{"applied", applied}, {"unmanaged", unmanaged}};
  if (!applied.empty()) {
    auto diff = plane.cri->reconcile();
    if (!diff.is_ok()) return diff.error();
    out["reconcile"] = diff_json(diff.value());
  }
  return out;
}

Result<json> do_pod_delete(ControlPlane& plane, const json& params) {
  auto ns = need_string(params, "namespace");
  if (!ns.is_ok()) return ns.error();
  auto name = need_string(params, "name");
  if (!name.is_ok()) return name.error();
  auto status = plane.cri->delete_pod(ns.value(), name.value());
  if (!status.is_ok()) return status.error();
  auto diff = plane.cri->reconcile();
  if (!diff.is_ok()) return diff.error();
  return json{{"ok", true}, {"reconcile", diff_json(diff.value())}};
}

Result<json> do_pod_list(ControlPlane& plane) {
  auto bindings = plane.cri->list_bindings();
  if (!bindings.is_ok()) return bindings.error();
  json pods = json::array();
  for (const auto& binding : bindings.value()) {
    pods.push_back({{"namespace", binding.pod_namespace},
                    {"name", binding.pod_name},
                    {"zone", binding.zone.to_string()},
                    {"state", std::string(to_string(binding.state))}});
  }
  return json{{"pods", pods}, {"desired", plane.cri->desired().size()}};
}

json device_json(const DeviceView& view) {
  json slices = json::array();
  for (const auto& slice : view.slices) {
    json entry{{"index", slice.index}};
    if (slice.client.has_value()) entry["client"] = slice.client->to_string();
    slices.push_back(entry);
  }
  return json{{"device", view.device_id},
              {"mode", std::string(to_string(view.mode))},
              {"driver_zone", view.driver_zone.to_string()},
              {"driver_live", view.driver_live},
              {"slices", slices}};
}

Result<json> do_device_attach(ControlPlane& plane, const json& params) {
  auto device = need_string(params, "device");
  if (!device.is_ok()) return device.error();
  auto mode_text = need_string(params, "mode");
  if (!mode_text.is_ok()) return mode_text.error();
  auto mode = attach_mode_from_string(mode_text.value());
  if (!mode.has_value()) {
    return Error(Errc::kInvalidArgument, "mode must be passthrough or partitioned");
  }
  const auto slices = static_cast<std::uint32_t>(opt_u64(params, "slices", 1));
  ZoneSpec driver_spec;
  driver_spec.kernel_image = params.contains("driver_kernel") && params["driver_kernel"].is_string()
                                 ? params["driver_kernel"].get<std::string>()
                                 : "drivers/" + device.value();
  driver_spec.memory_mib = opt_u64(params, "driver_memory_mib", 128);
  driver_spec.vcpus = static_cast<std::uint32_t>(opt_u64(params, "driver_vcpus", 1));
  auto view = plane.daemon->attach_device(device.value(), *mode, driver_spec, slices);
  if (!view.is_ok()) return view.error();
  return device_json(view.value());
}

Result<json> do_device_bind(ControlPlane& plane, const json& params, bool bind) {
  auto device = need_string(params, "device");
  if (!device.is_ok()) return device.error();
  auto slice = need_u64(params, "slice");
  if (!slice.is_ok()) return slice.error();
  Status status;
  if (bind) {
    auto zone = need_zone_id(params, "zone");
    if (!zone.is_ok()) return zone.error();
    status = plane.daemon->bind_slice(device.value(),
                                      static_cast<std::uint32_t>(slice.value()), zone.value());
  } else {
    status = plane.daemon->unbind_slice(device.value(),
                                        static_cast<std::uint32_t>(slice.value()));
  }
  if (!status.is_ok()) return status.error();
  return json{{"ok", true}};
}

Result<json> do_device_fault(ControlPlane& plane, const json& params) {
  auto device = need_string(params, "device");
  if (!device.is_ok()) return device.error();
  auto report = plane.daemon->inject_driver_fault(device.value());
  if (!report.is_ok()) return report.error();
  return json{{"driver_zone", report.value().driver_zone.to_string()},
              {"failed_requests", report.value().failed_requests}};
}

Result<json> do_device_list(ControlPlane& plane) {
  json devices = json::array();
  for (const auto& view : plane.daemon->list_devices()) {
    devices.push_back(device_json(view));
  }
  return json{{"devices", devices}};
}

Result<json> do_bench_startup(ControlPlane& plane, const json& params) {
  const auto runs = static_cast<std::uint32_t>(opt_u64(params, "runs", 5));
  const bool warm = opt_bool(params, "warm", false);
  const bool wall = opt_bool(params, "wall", false);
  BenchHarness harness(*plane.daemon, plane.clock, plane.pump_quantum_ms);
  auto report = harness.startup(runs, warm, wall);
  if (!report.is_ok()) return report.error();
  const auto& done = report.value();
  return json{{"scenario", done.scenario},
              {"runs", done.runs},
              {"clock", done.wall_clock ? "wall" : "logical"},
              {"samples_ms", done.samples_ms},
              {"mean_ms", done.mean_ms},
              {"stderr_ms", done.stderr_ms},
              {"text", done.render()}};
}

Result<json> do_scenario_run(ControlPlane& plane, const json& params) {
  auto name = need_string(params, "name");
  if (!name.is_ok()) return name.error();
  ScenarioRunner runner(*plane.daemon, plane.clock, plane.pump_quantum_ms);
  std::vector<ScenarioReport> reports;
  if (name.value() == "all") {
    auto all = runner.run_all();
    if (!all.is_ok()) return all.error();
    reports = all.take();
  } else {
    auto one = runner.run(name.value());
    if (!one.is_ok()) return one.error();
    reports.push_back(one.take());
  }
  bool passed = true;
  json out_reports = json::array();
  for (const auto& report : reports) {
    passed = passed && report.passed;
    out_reports.push_back(report_json(report));
  }
  return json{{"passed", passed}, {"reports", out_reports}};
}

Result<json> do_metrics(ControlPlane& plane) {
  return json{{"text", plane.orchestrator.render_metrics()}};
}

Result<json> dispatch(ControlPlane& plane, const std::string& method, const json& params) {
  if (method == "ping") return json{{"ok", true}, {"now_ms", plane.clock.now_ms()}};
  if (method == "zone.create") return do_zone_create(plane, params);
  if (method == "zone.list") return do_zone_list(plane);
  if (method == "zone.get") return do_zone_get(plane, params);
  if (method == "zone.destroy") return do_zone_destroy(plane, params);
  if (method == "zone.activate") return do_zone_activate(plane, params);
  if (method == "zone.quarantine") return do_zone_quarantine(plane, params, true);
  if (method == "zone.release") return do_zone_quarantine(plane, params, false);
  if (method == "zone.exec") return do_zone_exec(plane, params);
  if (method == "zone.monitor") return do_zone_monitor(plane, params);
  if (method == "pod.apply") return do_pod_apply(plane, params);
  if (method == "pod.delete") return do_pod_delete(plane, params);
  if (method == "pod.list") return do_pod_list(plane);
  if (method == "device.attach") return do_device_attach(plane, params);
  if (method == "device.bind") return do_device_bind(plane, params, true);
  if (method == "device.unbind") return do_device_bind(plane, params, false);
  if (method == "device.fault") return do_device_fault(plane, params);
  if (method == "device.list") return do_device_list(plane);
  if (method == "bench.startup") return do_bench_startup(plane, params);
  if (method == "scenario.run") return do_scenario_run(plane, params);
  if (method == "metrics") return do_metrics(plane);
  if (method == "shutdown") {
    g_shutdown.store(true);
    return json{{"ok", true}};
  }
  return Error(Errc::kRpcError, "unknown method: " + method);
}

rpc::RpcReply handle_rpc(ControlPlane& plane, const std::string& method, const std::string& params) {
  auto parsed = parse_params(params);
  if (!parsed.is_ok()) return rpc::RpcReply{1, error_body(parsed.error())};
  std::lock_guard<std::mutex> lock(plane.mu);
  auto result = dispatch(plane, method, parsed.value());
  if (!result.is_ok()) return rpc::RpcReply{1, error_body(result.error())};
  return rpc::RpcReply{0, result.value().dump()};
}

void pump_loop(ControlPlane& plane) {
  while (!g_shutdown.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(plane.pump_quantum_ms));
    std::lock_guard<std::mutex> lock(plane.mu);
    plane.clock.advance(plane.pump_quantum_ms);
    const std::uint64_t now = plane.clock.now_ms();
    plane.daemon->pump(now);
    plane.daemon->supervise(now);
    plane.cri->tick(now);
    plane.orchestrator.health_sweep(now);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"ederad: zone control-plane daemon"};
  std::string store_path;
  std::string listen = std::string(kDefaultListen);
  std::uint32_t host_cpus = 4;
  std::uint64_t host_memory_mib = 4096;
  std::uint32_t heartbeat_interval_ms = kDefaultHeartbeatIntervalMs;
  std::uint32_t heartbeat_timeout_ms = kDefaultHeartbeatTimeoutMs;
  std::uint32_t boot_delay_ms = kDefaultBootDelayMs;
  std::uint64_t pump_quantum_ms = 10;
  std::optional<std::uint64_t> uuid_seed;

  app.add_option("--store", store_path, "Durable state file")->required();
  app.add_option("--listen", listen, "host:port to serve on (port 0 = ephemeral)");
  app.add_option("--host-cpus", host_cpus, "Simulated physical cpus");
  app.add_option("--host-memory-mib", host_memory_mib, "Simulated physical memory (MiB)");
  app.add_option("--heartbeat-interval-ms", heartbeat_interval_ms, "Zone heartbeat cadence");
  app.add_option("--heartbeat-timeout-ms", heartbeat_timeout_ms,
                 "Silence after which a zone is deemed not responding");
  app.add_option("--boot-delay-ms", boot_delay_ms, "Simulated guest boot time");
  app.add_option("--pump-quantum-ms", pump_quantum_ms, "Wall and logical ms per pump step")
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1000}));
  app.add_option("--uuid-seed", uuid_seed, "Seed zone ids for reproducible runs");

  CLI11_PARSE(app, argc, argv);

  const auto address = parse_listen(listen);
  if (!address.has_value()) {
    std::cerr << "ederad: --listen must be host:port, got \"" << listen << "\"" << std::endl;
    return 1;
  }

  DaemonConfig config;
  config.store_path = store_path;
  config.host.cpu_count = host_cpus;
  config.host.page_size_kib = 4;
  config.host.page_count = host_memory_mib * 1024 / config.host.page_size_kib;
  config.heartbeat_interval_ms = heartbeat_interval_ms;
  config.heartbeat_timeout_ms = heartbeat_timeout_ms;
  config.boot_delay_ms = boot_delay_ms;

  std::unique_ptr<UuidGenerator> ids;
  if (uuid_seed.has_value()) ids = std::make_unique<SeededUuidGenerator>(*uuid_seed);

  auto opened = ZoneDaemon::open(config, std::move(ids));
  if (!opened.is_ok()) {
    std::cerr << "ederad: " << opened.error().message() << std::endl;
    return 1;
  }

  ControlPlane plane;
  plane.pump_quantum_ms = pump_quantum_ms;
  plane.daemon.emplace(opened.take());
  plane.proxy.emplace(*plane.daemon);
  plane.backend.emplace(*plane.daemon);
  plane.cri.emplace(*plane.backend);

  // In a single-process build every service is alive iff constructed; the
  // sweep machinery earns its keep under tests that inject failing hooks.
  plane.orchestrator.attach_sources(&*plane.daemon, &*plane.proxy);
  for (const char* service : {"zone-daemon", "net-proxy", "cri-shim"}) {
    plane.orchestrator.register_service(
        service, Orchestrator::Hooks{[] { return true; }, [] { return true; }});
  }

  auto server = rpc::RpcServer::listen(
      address->first, address->second,
      [&plane](const std::string& method, const std::string& params) {
        return handle_rpc(plane, method, params);
      });
  if (!server.is_ok()) {
    std::cerr << "ederad: " << server.error().message() << std::endl;
    return 1;
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::cout << "ederad listening on " << server.value()->host() << ":" << server.value()->port()
            << " store=" << store_path << std::endl;

  std::thread pumper(pump_loop, std::ref(plane));
  while (!g_shutdown.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  pumper.join();
  server.value()->stop();
  return 0;
}

}  // namespace
}  // namespace edera::tools

int main(int argc, char** argv) { return edera::tools::run(argc, argv); }
