// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <set>

#include "aquafeed/config.hpp"
#include "aquafeed/error.hpp"
#include "json.hpp"

namespace aquafeed::cli {

namespace {

using J = nlohmann::ordered_json;

struct CameraInput {
  FrameDetections frame;
  CameraGeometry geometry;
};

CameraInput load_camera(const std::filesystem::path& detections, const std::optional<std::filesystem::path>& depth,
                        const CameraIntrinsics& intrinsics, CameraId expected) {
  FrameDetections frame = read_frame_detections(detections);
  if (frame.camera_id != expected) {
    throw Error(ErrorKind::InvalidInput, detections.string(),
                "file holds camera " + std::string(to_string(frame.camera_id)) + " detections, expected " +
                    std::string(to_string(expected)));
  }
  if (!depth) {
    throw Error(ErrorKind::InvalidInput, std::string("depth_") + (expected == CameraId::A ? "a" : "b"),
                "a depth map is required for each camera");
  }
  DepthMap map = read_depth_map(*depth);
  if (map.width() != intrinsics.image_width || map.height() != intrinsics.image_height) {
    throw Error(ErrorKind::InvalidInput, depth->string(), "depth map size differs from the image size");
  }
  return {std::move(frame), {intrinsics, std::move(map)}};
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

J corruption_json(const std::optional<LogCorruption>& c) {
  if (!c) return nullptr;
  return J{{"byte_offset", c->byte_offset}, {"last_good_seq", c->last_good_seq}, {"reason", c->reason}};
}

}  // namespace

std::optional<OutputFormat> output_format_from_string(std::string_view s) {
  if (s == "text") return OutputFormat::Text;
  if (s == "machine") return OutputFormat::Machine;
  return std::nullopt;
}

std::string band_label(const FeedingBand& band) {
  return "[" + fmt_pct(band.lower_g) + ", " + (band.upper_g ? fmt_pct(*band.upper_g) + ")" : "inf)") + " g";
}

ComputeReport run_compute(const ComputeInputs& in) {
  if (!in.detections_a && !in.detections_b) {
    throw Error(ErrorKind::InvalidInput, "detections", "at least one camera's detections are required");
  }
  in.coefficients.validate();
  const CameraIntrinsics intrinsics = read_intrinsics(in.intrinsics);
  const FeedingBandTable table = in.band_table ? parse_band_table(read_text_file(*in.band_table))
                                               : FeedingBandTable::tilapia_default();

  std::vector<CameraInput> cams;
  if (in.detections_a) cams.push_back(load_camera(*in.detections_a, in.depth_a, intrinsics, CameraId::A));
  if (in.detections_b) cams.push_back(load_camera(*in.detections_b, in.depth_b, intrinsics, CameraId::B));

  ComputeReport report;
  std::vector<std::vector<LengthEstimate>> lengths(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto& cam = cams[i];
    const FrameMeasurement m = measure_frame(cam.frame, cam.geometry, in.method);
    std::set<int> rejected_ids;
    for (const auto& r : m.rejected) {
      rejected_ids.insert(r.fish_id);
      report.rejected.push_back({cam.frame.camera_id, r.fish_id, r.reason});
    }
    std::size_t k = 0;
    for (const auto& fish : cam.frame.fish) {
      if (rejected_ids.count(fish.fish_id) != 0) continue;
      ComputedFish cf;
      cf.camera = cam.frame.camera_id;
      cf.fish_id = fish.fish_id;
      cf.length_cm = m.lengths.at(k++).length_cm;
      report.fish.push_back(cf);
    }
    lengths[i] = m.lengths;
  }

  if (cams.size() == 2) {
    try {
      report.observation = fuse_dual_camera(cams[0].frame, cams[1].frame, in.pairing_tolerance_ms, lengths[0], lengths[1]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnpairedFrame) throw;
      report.warnings.push_back(std::string(e.what()) + "; using camera A only");
      report.observation = single_camera_observation(cams[0].frame, lengths[0]);
      std::erase_if(report.fish, [](const ComputedFish& f) { return f.camera != CameraId::A; });
    }
  } else {
    report.observation = single_camera_observation(cams[0].frame, lengths[0]);
    report.warnings.push_back("single camera input; observation is degraded");
  }

  if (report.observation.fused_count > 0 && !report.observation.lengths_cm.empty()) {
    std::vector<WeightEstimate> weights;
    for (auto& f : report.fish) {
      f.weight_g = weight_from_length(LengthEstimate{f.length_cm, in.method}, in.coefficients).weight_g;
      weights.push_back({f.weight_g});
    }
    report.plan = build_ration_plan(weights, report.observation.fused_count, table);
    for (std::size_t i = 0; i < report.fish.size(); ++i) {
      auto& f = report.fish[i];
      const FishRation& r = report.plan->per_fish[i];
      f.band_index = r.band_index;
      f.band = band_label(table.bands()[r.band_index]);
      f.percent = r.percent_used;
      f.grams_per_day = r.grams_per_day;
    }
  } else {
    for (auto& f : report.fish) {
      f.weight_g = weight_from_length(LengthEstimate{f.length_cm, in.method}, in.coefficients).weight_g;
    }
  }
  return report;
}

void print_compute(const ComputeReport& r, OutputFormat format, std::ostream& out) {
  const auto& obs = r.observation;
  if (format == OutputFormat::Machine) {
    J fish = J::array();
    for (const auto& f : r.fish) {
      fish.push_back(J{{"camera", to_string(f.camera)},
                       {"fish_id", f.fish_id},
                       {"length_cm", f.length_cm},
                       {"weight_g", f.weight_g},
                       {"band_index", r.plan ? J(f.band_index) : J(nullptr)},
                       {"band", r.plan ? J(f.band) : J(nullptr)},
                       {"percent", r.plan ? J(f.percent) : J(nullptr)},
                       {"grams_per_day", r.plan ? J(f.grams_per_day) : J(nullptr)}});
    }
    J rejected = J::array();
    for (const auto& x : r.rejected) {
      rejected.push_back(J{{"camera", to_string(x.camera)}, {"fish_id", x.fish_id}, {"reason", x.reason}});
    }
    J doc{{"fish", std::move(fish)},
          {"rejected", std::move(rejected)},
          {"count_a", obs.count_a ? J(*obs.count_a) : J(nullptr)},
          {"count_b", obs.count_b ? J(*obs.count_b) : J(nullptr)},
          {"fused_count", obs.fused_count},
          {"degraded", obs.degraded},
          {"average_grams_per_day", r.plan ? J(r.plan->average_grams_per_day) : J(nullptr)},
          {"total_grams_per_day", r.total_grams_per_day()},
          {"no_fish_detected", r.no_fish()},
          {"warnings", r.warnings}};
    out << doc.dump() << '\n';
    return;
  }

  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  if (!r.fish.empty()) {
    out << std::left << std::setw(6) << "cam" << std::setw(6) << "fish" << std::setw(12) << "length_cm"
        << std::setw(12) << "weight_g" << std::setw(16) << "band" << std::setw(10) << "percent"
        << "g/day" << '\n';
    for (const auto& f : r.fish) {
      out << std::left << std::setw(6) << to_string(f.camera) << std::setw(6) << f.fish_id << std::setw(12)
          << fmt3(f.length_cm) << std::setw(12) << fmt3(f.weight_g) << std::setw(16)
          << (r.plan ? f.band : "-") << std::setw(10) << (r.plan ? fmt_pct(f.percent) : "-")
          << (r.plan ? fmt3(f.grams_per_day) : "-") << '\n';
    }
  }
  for (const auto& x : r.rejected) {
    out << "rejected: camera " << to_string(x.camera) << " fish " << x.fish_id << ": " << x.reason << '\n';
  }
  out << "fused count: " << obs.fused_count;
  if (obs.count_a || obs.count_b) {
    out << " (A " << (obs.count_a ? std::to_string(*obs.count_a) : "-") << ", B "
        << (obs.count_b ? std::to_string(*obs.count_b) : "-") << ")";
  }
  out << '\n';
  if (r.no_fish()) {
    out << (obs.fused_count == 0 ? "no fish detected" : "no fish could be measured") << '\n';
  } else {
    out << "average: " << fmt3(r.plan->average_grams_per_day) << " g/day per fish\n";
  }
  out << "total: " << fmt3(r.total_grams_per_day()) << " g/day\n";
}

int cmd_compute(const ComputeInputs& in, OutputFormat format, std::ostream& out, std::ostream& err) {
  try {
    const ComputeReport r = run_compute(in);
    print_compute(r, format, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_replay(const ReplayOptions& opts, OutputFormat format, std::ostream& out, std::ostream& err) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(opts.log_path, ec)) {
    err << "error: " << to_string(ErrorKind::Io) << ": " << opts.log_path.string() << ": cannot read event log\n";
    return 1;
  }
  const LogScan scan = scan_event_log(opts.log_path);
  std::string tank = opts.tank_id.value_or(opts.log_path.stem().string());
  if (scan.snapshot) tank = scan.snapshot->tank_id;
  const RecoveryReport rec = replay_scan(scan, TankState::initial(tank));

  if (rec.corruption) {
    err << "warning: " << opts.log_path.string() << ": corrupt record at byte offset "
        << rec.corruption->byte_offset << " after seq " << rec.corruption->last_good_seq << ": "
        << rec.corruption->reason << "; state is partial\n";
  }
  const TankState& s = rec.state;
  if (format == OutputFormat::Machine) {
    J doc{{"tank_id", s.tank_id},
          {"events_replayed", rec.events_replayed},
          {"used_snapshot", rec.used_snapshot},
          {"corruption", corruption_json(rec.corruption)},
          {"state", J::parse(tank_state_to_json(s))}};
    out << doc.dump() << '\n';
  } else {
    out << "tank: " << s.tank_id << '\n'
        << "last seq: " << s.last_seq << " at ts " << s.last_ts_ms << '\n'
        << "events replayed: " << rec.events_replayed << (rec.used_snapshot ? " (from snapshot)" : "") << '\n';
    for (const auto& [kind, r] : s.latest) {
      out << "latest " << to_string(kind) << ": " << r.value << ' ' << to_string(r.unit) << " @ " << r.ts_ms << '\n';
    }
    for (const auto& [kind, a] : s.alerts) {
      if (a.active) out << "alert " << to_string(kind) << ": " << a.side << " (" << a.value << ") since " << a.since_ms << '\n';
    }
    if (s.last_observation) {
      out << "last observation: count " << s.last_observation->fused_count
          << (s.last_observation->degraded ? " (degraded)" : "") << " @ " << s.last_observation->frame_ts_ms << '\n';
    }
    if (s.last_plan) out << "last plan: " << fmt3(s.last_plan->total_grams_per_day) << " g/day\n";
    out << "dispensed total: " << fmt3(s.actuators.dispensed_total_g) << " g\n";
    out << "decisions: " << s.decisions.size() << '\n';
    for (const auto& d : s.decisions) {
      out << "  #" << d.decision_id << ' ' << to_string(d.trigger) << ' ' << d.command.command_id << " @ "
          << d.decided_ts_ms << ": " << fmt3(d.commanded_grams()) << " g";
      if (d.capped) out << " (capped)";
      if (d.observation.degraded) out << " (degraded)";
      if (d.outcome) {
        out << " -> " << to_string(d.outcome->status);
        if (d.outcome->measured) out << ' ' << fmt3(*d.outcome->measured) << " g";
      } else if (d.timed_out) {
        out << " -> timed out";
      } else {
        out << " -> pending";
      }
      out << '\n';
    }
  }
  return rec.corruption && opts.strict ? 3 : 0;
}

}  // namespace aquafeed::cli
