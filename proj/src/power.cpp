#include "qcsim/power.hpp"

#include <algorithm>
#include <ostream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::power {

namespace {
constexpr const char* kModule = "power";
}

GatingMode gating_mode_from_string(const std::string& name) {
  if (name == "None" || name == "none") return GatingMode::None;
  if (name == "ClockGated" || name == "clock_gated") return GatingMode::ClockGated;
  if (name == "PowerGated" || name == "power_gated") return GatingMode::PowerGated;
  throw ParseError("unknown gating mode '" + name + "'");
}

const char* to_string(GatingMode mode) {
  switch (mode) {
    case GatingMode::None: return "None";
    case GatingMode::ClockGated: return "ClockGated";
    case GatingMode::PowerGated: return "PowerGated";
  }
  return "?";
}

namespace {

void validate_block(const BlockPower& b) {
  if (b.p_leak_w < 0.0 || b.p_dyn_w < 0.0 || b.wake_energy_j < 0.0) {
    throw ValidationError(kModule, "block '" + b.name + "' powers must be non-negative");
  }
  if (b.wake_latency_cycles < 0) {
    throw ValidationError(kModule, "block '" + b.name + "' wake latency must be non-negative");
  }
}

std::int64_t active_cycles(const ActivityWindow& activity, std::int64_t frame_cycles) {
  std::int64_t active = 0;
  std::int64_t prev_end = 0;
  for (const auto& iv : activity.intervals) {
    if (iv.end < iv.start || iv.start < prev_end) {
      throw ValidationError(kModule, "activity intervals for '" + activity.block +
                                         "' must be disjoint and sorted");
    }
    prev_end = iv.end;
    const std::int64_t lo = std::max<std::int64_t>(iv.start, 0);
    const std::int64_t hi = std::min(iv.end, frame_cycles);
    if (hi > lo) active += hi - lo;
  }
  return active;
}

}  // namespace

double duty_cycle(const ActivityWindow& activity, std::int64_t frame_cycles) {
  if (frame_cycles <= 0) throw ValidationError(kModule, "frame must span at least one cycle");
  return static_cast<double>(active_cycles(activity, frame_cycles)) /
         static_cast<double>(frame_cycles);
}

double average_power(const BlockPower& block, const ActivityWindow& activity,
                     std::int64_t frame_cycles, double system_clock_hz) {
  validate_block(block);
  if (frame_cycles <= 0) throw ValidationError(kModule, "frame must span at least one cycle");
  if (!(system_clock_hz > 0.0)) throw ValidationError(kModule, "system clock must be positive");

  const double duty = duty_cycle(activity, frame_cycles);
  switch (activity.mode) {
    case GatingMode::None:
      return block.p_leak_w + block.p_dyn_w;
    case GatingMode::ClockGated:
      return block.p_leak_w + block.p_dyn_w * duty;
    case GatingMode::PowerGated: {
      const double frame_time_s = static_cast<double>(frame_cycles) / system_clock_hz;
      const double wakes = static_cast<double>(activity.intervals.size());
      return (block.p_leak_w + block.p_dyn_w) * duty + block.wake_energy_j * wakes / frame_time_s;
    }
  }
  return 0.0;
}

std::vector<ActivityWindow> schedule_gating(const std::vector<seq::TriggerEvent>& timeline,
                                            const GatingPolicy& policy,
                                            const std::vector<BlockPower>& blocks,
                                            std::int64_t frame_cycles) {
  if (frame_cycles <= 0) throw ValidationError(kModule, "frame must span at least one cycle");

  std::vector<ActivityWindow> out;
  for (const auto& block : blocks) {
    validate_block(block);
    GatingPolicyEntry entry;
    if (auto it = policy.find(block.name); it != policy.end()) {
      entry = it->second;
    } else {
      entry.mode = GatingMode::None;
    }
    if (entry.mode == GatingMode::PowerGated &&
        entry.pre_wake_margin_cycles < block.wake_latency_cycles) {
      throw ValidationError(kModule, "pre-wake margin for '" + block.name +
                                         "' is shorter than its wake latency");
    }

    // Collect raw [begin, end) spans for this block, tracking nesting so
    // overlapping pulses merge into one interval.
    std::vector<Interval> raw;
    int depth = 0;
    std::int64_t open_cycle = 0;
    for (const auto& ev : timeline) {
      if (ev.target_block != block.name) continue;
      const bool opens = ev.kind == seq::TriggerKind::Start ||
                         ev.kind == seq::TriggerKind::MeasureBegin ||
                         ev.kind == seq::TriggerKind::PowerOn;
      const bool closes = ev.kind == seq::TriggerKind::Stop ||
                          ev.kind == seq::TriggerKind::MeasureEnd ||
                          ev.kind == seq::TriggerKind::PowerOff;
      if (opens) {
        if (depth == 0) open_cycle = ev.cycle;
        ++depth;
      } else if (closes) {
        if (depth == 0) {
          throw ValidationError(kModule, "unbalanced stop event for block '" + block.name + "'");
        }
        if (--depth == 0) raw.push_back({open_cycle, ev.cycle});
      }
    }
    if (depth != 0) {
      throw ValidationError(kModule, "unbalanced start event for block '" + block.name + "'");
    }

    // Widen by the pre-wake margin, clamp to the frame and merge.
    std::vector<Interval> widened;
    for (auto iv : raw) {
      iv.start = std::max<std::int64_t>(0, iv.start - entry.pre_wake_margin_cycles);
      iv.end = std::min(iv.end, frame_cycles);
      if (iv.end > iv.start) widened.push_back(iv);
    }
    std::sort(widened.begin(), widened.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> merged;
    for (const auto& iv : widened) {
      if (!merged.empty() && iv.start <= merged.back().end) {
        merged.back().end = std::max(merged.back().end, iv.end);
      } else {
        merged.push_back(iv);
      }
    }

    out.push_back({block.name, std::move(merged), entry.mode});
  }
  return out;
}

PowerReport build_report(const std::vector<BlockPower>& blocks,
                         const std::vector<ActivityWindow>& activities,
                         std::int64_t frame_cycles, double system_clock_hz, int multiplex_ratio) {
  if (activities.size() != blocks.size()) {
    throw ValidationError(kModule, "one activity window per block is required");
  }
  PowerReport report;
  report.frame_time_s = static_cast<double>(frame_cycles) / system_clock_hz;
  report.multiplex_ratio = multiplex_ratio;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& block = blocks[i];
    const auto& activity = activities[i];
    if (activity.block != block.name) {
      throw ValidationError(kModule, "activity list out of order: expected '" + block.name +
                                         "', got '" + activity.block + "'");
    }
    BlockReportRow row;
    row.name = block.name;
    row.mode = activity.mode;
    row.duty = duty_cycle(activity, frame_cycles);
    row.avg_w = average_power(block, activity, frame_cycles, system_clock_hz);
    row.energy_j = row.avg_w * report.frame_time_s;
    row.on_time_s = row.duty * report.frame_time_s;
    row.wake_count = activity.intervals.size();
    row.shared_across_qubits = block.shared_across_qubits;
    report.total_avg_w += row.avg_w;
    report.total_energy_j += row.energy_j;
    report.blocks.push_back(std::move(row));
  }
  report.per_qubit_w = per_qubit_budget(report, multiplex_ratio);
  report.caveats = {
      "supply noise during power-ON transients is not modeled",
      "wake energy and latency default to zero unless configured",
  };
  return report;
}

double per_qubit_budget(const PowerReport& report, int multiplex_ratio) {
  if (multiplex_ratio < 1) {
    throw ValidationError(kModule, "multiplex ratio must be a positive integer");
  }
  double per_qubit = 0.0;
  for (const auto& row : report.blocks) {
    per_qubit += row.shared_across_qubits ? row.avg_w / static_cast<double>(multiplex_ratio)
                                          : row.avg_w;
  }
  return per_qubit;
}

void write_report_csv(std::ostream& out, const PowerReport& report) {
  out << "name,mode,duty,avg_w,energy_j,on_time_s,wakes\n";
  for (const auto& row : report.blocks) {
    out << row.name << ',' << to_string(row.mode) << ',' << csv::format_double(row.duty) << ','
        << csv::format_double(row.avg_w) << ',' << csv::format_double(row.energy_j) << ','
        << csv::format_double(row.on_time_s) << ',' << row.wake_count << '\n';
  }
}

}  // namespace qcsim::power
