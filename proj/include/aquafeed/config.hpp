// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON configuration for the control service and the simulator.
//
// A single file may carry both: control keys at the top level and the
// simulator scenario under "scenario". Unknown keys are rejected so typos
// surface instead of silently falling back to defaults.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aquafeed/controller.hpp"
#include "aquafeed/tanksim.hpp"

namespace aquafeed {

struct ControlConfig {
  std::string broker_url = "mqtt://127.0.0.1:1883";
  std::string http_host = "127.0.0.1";
  int http_port = 8080;
  std::vector<TankConfig> tanks{TankConfig{}};
  ServiceOptions service{};
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

// Reads the process environment.
std::optional<std::string> process_env(const char* name);

// Parses a control config document. Relative depth-map paths resolve
// against base_dir.
ControlConfig parse_control_config(std::string_view json, const std::filesystem::path& base_dir = {});
ControlConfig load_control_config(const std::filesystem::path& path);

// AQUA_BROKER_URL, AQUA_HTTP_PORT, AQUA_LOG_DIR, AQUA_WINDOWS_PER_DAY and
// AQUA_PH_BAND ("low,high") override the file.
void apply_env_overrides(ControlConfig& config, const EnvLookup& env = process_env);

sim::ScenarioConfig parse_scenario_config(std::string_view json);
sim::ScenarioConfig load_scenario_config(const std::filesystem::path& path);

// Camera intrinsics file: {"focal_px": f, "image_width": w, "image_height": h}.
CameraIntrinsics parse_intrinsics(std::string_view json);
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);

// Feeding band table: [{"lower_g", "upper_g" (null = open), "percent_min",
// "percent_max", "percent" (optional override)}].
FeedingBandTable parse_band_table(std::string_view json);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace aquafeed
