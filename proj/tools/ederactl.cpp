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

// ederactl: sequential admin client for ederad. Each invocation is one or
// two RPC calls; exit 0 on success, 1 on an operational error reported by
// the daemon or transport, 2 on a usage error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edera/common.hpp"
#include "edera/rpc.hpp"
#include "tool_util.hpp"

namespace edera::tools {
namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kOperationalError = 1;
constexpr int kUsageError = 2;

Result<json> rpc(const std::string& connect, const std::string& method, const json& params) {
  const auto address = parse_listen(connect);
  if (!address.has_value()) {
    return Error(Errc::kInvalidArgument, "--connect must be host:port, got \"" + connect + "\"");
  }
  auto reply = rpc::RpcClient::call_once(address->first, address->second, method, params.dump());
  if (!reply.is_ok()) return reply.error();
  if (reply.value().status != 0) return error_from_body(reply.value().body);
  json body = json::parse(reply.value().body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded()) return Error(Errc::kRpcError, "malformed reply body");
  return body;
}

int fail(const Error& error) {
  std::cerr << "error: " << error.to_string() << std::endl;
  return kOperationalError;
}

// ---- renderers --------------------------------------------------------------

void print_zone_table(const json& zones) {
  std::printf("%-36s  %-13s  %5s  %8s  %-32s  %s\n", "ID", "STATE", "VCPUS", "MEM_MIB",
              "KERNEL", "POD");
  for (const auto& zone : zones) {
    const auto& spec = zone["spec"];
    std::string pod = "-";
    if (zone.contains("workload")) {
      pod = zone["workload"]["namespace"].get<std::string>() + "/" +
            zone["workload"]["name"].get<std::string>();
    }
    std::printf("%-36s  %-13s  %5llu  %8llu  %-32s  %s\n",
                zone["id"].get<std::string>().c_str(),
                zone["state"].get<std::string>().c_str(),
                static_cast<unsigned long long>(spec["vcpus"].get<std::uint64_t>()),
                static_cast<unsigned long long>(spec["memory_mib"].get<std::uint64_t>()),
                spec["kernel_image"].get<std::string>().c_str(), pod.c_str());
  }
}

void print_pod_table(const json& pods) {
  std::printf("%-16s  %-24s  %-36s  %s\n", "NAMESPACE", "NAME", "ZONE", "STATE");
  for (const auto& pod : pods) {
    std::printf("%-16s  %-24s  %-36s  %s\n", pod["namespace"].get<std::string>().c_str(),
                pod["name"].get<std::string>().c_str(), pod["zone"].get<std::string>().c_str(),
                pod["state"].get<std::string>().c_str());
  }
}

void print_device_table(const json& devices) {
  std::printf("%-16s  %-12s  %-36s  %-6s  %s\n", "DEVICE", "MODE", "DRIVER_ZONE", "LIVE",
              "SLICES");
  for (const auto& device : devices) {
    std::string slices;
    for (const auto& slice : device["slices"]) {
      if (!slices.empty()) slices += " ";
      slices += std::to_string(slice["index"].get<std::uint32_t>());
      slices += ":";
      slices += slice.contains("client") ? slice["client"].get<std::string>() : "-";
    }
    std::printf("%-16s  %-12s  %-36s  %-6s  %s\n", device["device"].get<std::string>().c_str(),
                device["mode"].get<std::string>().c_str(),
                device["driver_zone"].get<std::string>().c_str(),
                device["driver_live"].get<bool>() ? "yes" : "no", slices.c_str());
  }
}

std::string reconcile_summary(const json& diff) {
  std::string out = "reconcile: created=" + std::to_string(diff["created"].get<std::uint64_t>()) +
                    " destroyed=" + std::to_string(diff["destroyed"].get<std::uint64_t>()) +
                    " unchanged=" + std::to_string(diff["unchanged"].get<std::uint64_t>());
  return out;
}

// Prints reconcile failures; returns false when any occurred.
bool report_failures(const json& diff) {
  if (!diff.contains("failures")) return true;
  for (const auto& failure : diff["failures"]) {
    std::cerr << "reconcile failure: " << failure.get<std::string>() << std::endl;
  }
  return diff["failures"].empty();
}

// ---- command bodies ----------------------------------------------------------

struct ZoneCreateArgs {
  std::string kernel;
  std::uint64_t memory_mib = 0;
  std::uint32_t vcpus = 1;
  bool warm = false;
};

int zone_create(const std::string& connect, const ZoneCreateArgs& args) {
  json params{{"kernel", args.kernel}, {"warm", args.warm}};
  // Warm zones start resource-free by contract; activation supplies grants.
  params["memory_mib"] = args.warm ? 0 : args.memory_mib;
  params["vcpus"] = args.warm ? 0 : args.vcpus;
  auto reply = rpc(connect, "zone.create", params);
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << reply.value()["id"].get<std::string>() << std::endl;
  return kOk;
}

int zone_list(const std::string& connect, bool as_json) {
  auto reply = rpc(connect, "zone.list", json::object());
  if (!reply.is_ok()) return fail(reply.error());
  if (as_json) {
    std::cout << reply.value().dump(2) << std::endl;
  } else {
    print_zone_table(reply.value()["zones"]);
  }
  return kOk;
}

int zone_simple(const std::string& connect, const std::string& method, const std::string& id) {
  auto reply = rpc(connect, method, json{{"id", id}});
  if (!reply.is_ok()) return fail(reply.error());
  if (reply.value().contains("state")) {
    std::cout << id << " " << reply.value()["state"].get<std::string>() << std::endl;
  } else {
    std::cout << "destroyed " << id << std::endl;
  }
  return kOk;
}

int zone_activate(const std::string& connect, const std::string& id, std::uint32_t cpus,
                  std::uint64_t memory_mib) {
  auto reply = rpc(connect, "zone.activate",
                   json{{"id", id}, {"cpus", cpus}, {"memory_mib", memory_mib}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << id << " " << reply.value()["state"].get<std::string>() << std::endl;
  return kOk;
}

int pod_apply(const std::string& connect, const std::string& file) {
  std::ifstream input(file, std::ios::binary);
  if (!input) {
    std::cerr << "error: cannot read " << file << std::endl;
    return kOperationalError;
  }
  std::ostringstream text;
  text << input.rdbuf();
  auto reply = rpc(connect, "pod.apply", json{{"manifest", text.str()}});
  if (!reply.is_ok()) return fail(reply.error());
  const auto& body = reply.value();
  for (const auto& pod : body["applied"]) {
    std::cout << "applied " << pod["namespace"].get<std::string>() << "/"
              << pod["name"].get<std::string>() << " (managed)" << std::endl;
  }
  for (const auto& pod : body["unmanaged"]) {
    std::cout << "ignored " << pod["namespace"].get<std::string>() << "/"
              << pod["name"].get<std::string>() << " (runtimeClassName \""
              << pod["runtime_class"].get<std::string>() << "\" is not managed)" << std::endl;
  }
  if (body.contains("reconcile")) {
    std::cout << reconcile_summary(body["reconcile"]) << std::endl;
    if (!report_failures(body["reconcile"])) return kOperationalError;
  }
  return kOk;
}

int pod_delete(const std::string& connect, const std::string& ns, const std::string& name) {
  auto reply = rpc(connect, "pod.delete", json{{"namespace", ns}, {"name", name}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << "deleted " << ns << "/" << name << std::endl;
  std::cout << reconcile_summary(reply.value()["reconcile"]) << std::endl;
  if (!report_failures(reply.value()["reconcile"])) return kOperationalError;
  return kOk;
}

int pod_list(const std::string& connect, bool as_json) {
  auto reply = rpc(connect, "pod.list", json::object());
  if (!reply.is_ok()) return fail(reply.error());
  if (as_json) {
    std::cout << reply.value().dump(2) << std::endl;
  } else {
    print_pod_table(reply.value()["pods"]);
  }
  return kOk;
}

struct DeviceAttachArgs {
  std::string device;
  std::string mode = "passthrough";
  std::uint32_t slices = 1;
  std::string driver_kernel;
  std::uint64_t driver_memory_mib = 128;
  std::uint32_t driver_vcpus = 1;
};

int device_attach(const std::string& connect, const DeviceAttachArgs& args) {
  json params{{"device", args.device},
              {"mode", args.mode},
              {"slices", args.slices},
              {"driver_memory_mib", args.driver_memory_mib},
              {"driver_vcpus", args.driver_vcpus}};
  if (!args.driver_kernel.empty()) params["driver_kernel"] = args.driver_kernel;
  auto reply = rpc(connect, "device.attach", params);
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << "attached " << args.device << " driver_zone="
            << reply.value()["driver_zone"].get<std::string>() << std::endl;
  return kOk;
}

int device_bind(const std::string& connect, const std::string& device, std::uint32_t slice,
                const std::string& zone) {
  auto reply = rpc(connect, "device.bind",
                   json{{"device", device}, {"slice", slice}, {"zone", zone}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << "bound " << device << "[" << slice << "] -> " << zone << std::endl;
  return kOk;
}

int device_unbind(const std::string& connect, const std::string& device, std::uint32_t slice) {
  auto reply = rpc(connect, "device.unbind", json{{"device", device}, {"slice", slice}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << "unbound " << device << "[" << slice << "]" << std::endl;
  return kOk;
}

int device_fault(const std::string& connect, const std::string& device) {
  auto reply = rpc(connect, "device.fault", json{{"device", device}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << "faulted " << device << " driver_zone="
            << reply.value()["driver_zone"].get<std::string>()
            << " failed_requests=" << reply.value()["failed_requests"].get<std::uint64_t>()
            << std::endl;
  return kOk;
}

int device_list(const std::string& connect, bool as_json) {
  auto reply = rpc(connect, "device.list", json::object());
  if (!reply.is_ok()) return fail(reply.error());
  if (as_json) {
    std::cout << reply.value().dump(2) << std::endl;
  } else {
    print_device_table(reply.value()["devices"]);
  }
  return kOk;
}

int bench_startup(const std::string& connect, std::uint32_t runs, bool warm, bool wall) {
  auto reply =
      rpc(connect, "bench.startup", json{{"runs", runs}, {"warm", warm}, {"wall", wall}});
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << reply.value()["text"].get<std::string>();
  return kOk;
}

int scenario_run(const std::string& connect, const std::string& name) {
  auto reply = rpc(connect, "scenario.run", json{{"name", name}});
  if (!reply.is_ok()) return fail(reply.error());
  const auto& body = reply.value();
  for (const auto& report : body["reports"]) {
    std::cout << report["text"].get<std::string>();
  }
  if (!body["passed"].get<bool>()) {
    for (const auto& report : body["reports"]) {
      if (!report["passed"].get<bool>()) {
        return fail(Error(Errc::kScenarioFailed, report["name"].get<std::string>() + ": " +
                                                     report["violated"].get<std::string>()));
      }
    }
    return kOperationalError;
  }
  return kOk;
}

int metrics(const std::string& connect) {
  auto reply = rpc(connect, "metrics", json::object());
  if (!reply.is_ok()) return fail(reply.error());
  std::cout << reply.value()["text"].get<std::string>();
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"ederactl: admin client for the zone control plane"};
  app.require_subcommand(1);
  std::string connect = std::string(kDefaultListen);
  app.add_option("--connect", connect, "Daemon address (host:port)");

  int rc = kOk;

  // zone ----------------------------------------------------------------
  auto* zone = app.add_subcommand("zone", "Zone lifecycle");
  zone->require_subcommand(1);

  auto create_args = std::make_shared<ZoneCreateArgs>();
  auto* create = zone->add_subcommand("create", "Create a zone");
  create->add_option("--kernel", create_args->kernel, "Guest kernel image")->required();
  create->add_option("--memory", create_args->memory_mib, "Memory grant (MiB)");
  create->add_option("--vcpus", create_args->vcpus, "Virtual cpus");
  create->add_flag("--warm", create_args->warm,
                   "Create idle and resource-free; activate later");
  create->callback([&rc, &connect, create_args] { rc = zone_create(connect, *create_args); });

  auto list_json = std::make_shared<bool>(false);
  auto* list = zone->add_subcommand("list", "List zones");
  list->add_flag("--json", *list_json, "Raw JSON output");
  list->callback([&rc, &connect, list_json] { rc = zone_list(connect, *list_json); });

  auto zone_id = std::make_shared<std::string>();
  auto* destroy = zone->add_subcommand("destroy", "Deprovision a zone");
  destroy->add_option("id", *zone_id, "Zone uuid")->required();
  destroy->callback([&rc, &connect, zone_id] { rc = zone_simple(connect, "zone.destroy", *zone_id); });

  auto activate_cpus = std::make_shared<std::uint32_t>(1);
  auto activate_memory = std::make_shared<std::uint64_t>(0);
  auto activate_id = std::make_shared<std::string>();
  auto* activate = zone->add_subcommand("activate", "Grant resources to a warm zone");
  activate->add_option("id", *activate_id, "Zone uuid")->required();
  activate->add_option("--cpus", *activate_cpus, "Schedulable vcpus")->required();
  activate->add_option("--memory", *activate_memory, "Additional memory (MiB)")->required();
  activate->callback([&rc, &connect, activate_id, activate_cpus, activate_memory] {
    rc = zone_activate(connect, *activate_id, *activate_cpus, *activate_memory);
  });

  auto quarantine_id = std::make_shared<std::string>();
  auto* quarantine = zone->add_subcommand("quarantine", "Drop all zone traffic");
  quarantine->add_option("id", *quarantine_id, "Zone uuid")->required();
  quarantine->callback(
      [&rc, &connect, quarantine_id] { rc = zone_simple(connect, "zone.quarantine", *quarantine_id); });

  auto release_id = std::make_shared<std::string>();
  auto* release = zone->add_subcommand("release", "Release a quarantined zone");
  release->add_option("id", *release_id, "Zone uuid")->required();
  release->callback(
      [&rc, &connect, release_id] { rc = zone_simple(connect, "zone.release", *release_id); });

  // pod -----------------------------------------------------------------
  auto* pod = app.add_subcommand("pod", "Pod front door");
  pod->require_subcommand(1);

  auto apply_file = std::make_shared<std::string>();
  auto* apply = pod->add_subcommand("apply", "Apply pod manifests");
  apply->add_option("-f,--file", *apply_file, "Manifest file (YAML, multi-doc)")->required();
  apply->callback([&rc, &connect, apply_file] { rc = pod_apply(connect, *apply_file); });

  auto delete_ns = std::make_shared<std::string>("default");
  auto delete_name = std::make_shared<std::string>();
  auto* del = pod->add_subcommand("delete", "Remove a desired pod");
  del->add_option("name", *delete_name, "Pod name")->required();
  del->add_option("--namespace", *delete_ns, "Pod namespace");
  del->callback(
      [&rc, &connect, delete_ns, delete_name] { rc = pod_delete(connect, *delete_ns, *delete_name); });

  auto pod_list_json = std::make_shared<bool>(false);
  auto* pods = pod->add_subcommand("list", "List pod-to-zone bindings");
  pods->add_flag("--json", *pod_list_json, "Raw JSON output");
  pods->callback([&rc, &connect, pod_list_json] { rc = pod_list(connect, *pod_list_json); });

  // device ----------------------------------------------------------------
  auto* device = app.add_subcommand("device", "Driver-isolation devices");
  device->require_subcommand(1);

  auto attach_args = std::make_shared<DeviceAttachArgs>();
  auto* attach = device->add_subcommand("attach", "Attach a device behind a driver zone");
  attach->add_option("device", attach_args->device, "Device id")->required();
  attach->add_option("--mode", attach_args->mode, "passthrough or partitioned")
      ->check(CLI::IsMember({"passthrough", "partitioned"}));
  attach->add_option("--slices", attach_args->slices, "Slice count (partitioned)");
  attach->add_option("--driver-kernel", attach_args->driver_kernel, "Driver zone kernel image");
  attach->add_option("--driver-memory", attach_args->driver_memory_mib,
                     "Driver zone memory (MiB)");
  attach->add_option("--driver-vcpus", attach_args->driver_vcpus, "Driver zone vcpus");
  attach->callback([&rc, &connect, attach_args] { rc = device_attach(connect, *attach_args); });

  auto bind_device = std::make_shared<std::string>();
  auto bind_slice_index = std::make_shared<std::uint32_t>(0);
  auto bind_zone = std::make_shared<std::string>();
  auto* bind = device->add_subcommand("bind", "Bind a slice to a client zone");
  bind->add_option("device", *bind_device, "Device id")->required();
  bind->add_option("slice", *bind_slice_index, "Slice index")->required();
  bind->add_option("zone", *bind_zone, "Client zone uuid")->required();
  bind->callback([&rc, &connect, bind_device, bind_slice_index, bind_zone] {
    rc = device_bind(connect, *bind_device, *bind_slice_index, *bind_zone);
  });

  auto unbind_device = std::make_shared<std::string>();
  auto unbind_slice_index = std::make_shared<std::uint32_t>(0);
  auto* unbind = device->add_subcommand("unbind", "Unbind a slice (memory is wiped)");
  unbind->add_option("device", *unbind_device, "Device id")->required();
  unbind->add_option("slice", *unbind_slice_index, "Slice index")->required();
  unbind->callback([&rc, &connect, unbind_device, unbind_slice_index] {
    rc = device_unbind(connect, *unbind_device, *unbind_slice_index);
  });

  auto fault_device = std::make_shared<std::string>();
  auto* fault = device->add_subcommand("fault", "Crash a device's driver zone");
  fault->add_option("device", *fault_device, "Device id")->required();
  fault->callback([&rc, &connect, fault_device] { rc = device_fault(connect, *fault_device); });

  auto device_list_json = std::make_shared<bool>(false);
  auto* devices = device->add_subcommand("list", "List attached devices");
  devices->add_flag("--json", *device_list_json, "Raw JSON output");
  devices->callback(
      [&rc, &connect, device_list_json] { rc = device_list(connect, *device_list_json); });

  // bench -----------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Latency experiments");
  bench->require_subcommand(1);
  auto bench_runs = std::make_shared<std::uint32_t>(5);
  auto bench_warm = std::make_shared<bool>(false);
  auto bench_wall = std::make_shared<bool>(false);
  auto* startup = bench->add_subcommand("startup", "Zone startup latency");
  startup->add_option("--runs", *bench_runs, "Sample count (>= 2)");
  startup->add_flag("--warm", *bench_warm, "Measure warm activation instead of cold create");
  startup->add_flag("--wall", *bench_wall, "Wall-clock timing instead of logical");
  startup->callback([&rc, &connect, bench_runs, bench_warm, bench_wall] {
    rc = bench_startup(connect, *bench_runs, *bench_warm, *bench_wall);
  });

  // scenario ----------------------------------------------------------------
  auto* scenario = app.add_subcommand("scenario", "Escape-analog drills");
  scenario->require_subcommand(1);
  auto scenario_name = std::make_shared<std::string>();
  auto* scen_run = scenario->add_subcommand("run", "Run one drill, or all");
  scen_run->add_option("name", *scenario_name, "pagetable-write | fd-namespace | driver-fault | all")
      ->required();
  scen_run->callback(
      [&rc, &connect, scenario_name] { rc = scenario_run(connect, *scenario_name); });

  // metrics ----------------------------------------------------------------
  auto* metrics_cmd = app.add_subcommand("metrics", "Render the metrics page");
  metrics_cmd->callback([&rc, &connect] { rc = metrics(connect); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const std::string kind = e.get_name();
    if (kind == "CallForHelp" || kind == "CallForAllHelp" || kind == "CallForVersion") {
      return app.exit(e);
    }
    app.exit(e);
    return kUsageError;
  }
  return rc;
}

}  // namespace
}  // namespace edera::tools

int main(int argc, char** argv) { return edera::tools::run(argc, argv); }
