// SPDX-License-Identifier: Apache-2.0
#pragma once

// Offline entry points shared by the aquafeed binary and the tests.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aquafeed/biometrics.hpp"
#include "aquafeed/detection.hpp"
#include "aquafeed/event_log.hpp"

namespace aquafeed::cli {

enum class OutputFormat { Text, Machine };

std::optional<OutputFormat> output_format_from_string(std::string_view s);

struct ComputeInputs {
  std::optional<std::filesystem::path> detections_a;
  std::optional<std::filesystem::path> detections_b;
  std::optional<std::filesystem::path> depth_a;
  std::optional<std::filesystem::path> depth_b;
  std::filesystem::path intrinsics;
  std::optional<std::filesystem::path> band_table;
  LengthMethod method = LengthMethod::WorldEuclidean;
  BiometricCoefficients coefficients{};
  std::int64_t pairing_tolerance_ms = 2000;
};

struct ComputedFish {
  CameraId camera = CameraId::A;
  int fish_id = 0;
  double length_cm = 0.0;
  double weight_g = 0.0;
  std::size_t band_index = 0;
  std::string band;  // e.g. "[5, 20) g"
  double percent = 0.0;
  double grams_per_day = 0.0;
};

struct ComputedRejection {
  CameraId camera = CameraId::A;
  int fish_id = 0;
  std::string reason;
};

struct ComputeReport {
  std::vector<ComputedFish> fish;
  std::vector<ComputedRejection> rejected;
  FusedObservation observation;
  std::optional<RationPlan> plan;
  std::vector<std::string> warnings;

  double total_grams_per_day() const { return plan ? plan->total_grams_per_day : 0.0; }
  bool no_fish() const { return !plan; }
};

// Loads the inputs and runs fusion, length, weight and ration. Throws Error
// naming the offending file on any input problem.
ComputeReport run_compute(const ComputeInputs& in);
void print_compute(const ComputeReport& report, OutputFormat format, std::ostream& out);

// Runs compute and prints; returns the process exit status.
int cmd_compute(const ComputeInputs& in, OutputFormat format, std::ostream& out, std::ostream& err);

struct ReplayOptions {
  std::filesystem::path log_path;
  // Defaults to the log file stem.
  std::optional<std::string> tank_id;
  bool strict = false;  // corruption is an error rather than a warning
};

int cmd_replay(const ReplayOptions& opts, OutputFormat format, std::ostream& out, std::ostream& err);

std::string band_label(const FeedingBand& band);

}  // namespace aquafeed::cli
