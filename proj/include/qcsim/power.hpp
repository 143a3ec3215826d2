#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qcsim/sequencer.hpp"

namespace qcsim::power {

enum class GatingMode { None, ClockGated, PowerGated };

GatingMode gating_mode_from_string(const std::string& name);
const char* to_string(GatingMode mode);

struct BlockPower {
  std::string name;
  double p_leak_w = 0.0;
  double p_dyn_w = 0.0;  // at 100% activity
  std::int64_t wake_latency_cycles = 0;
  double wake_energy_j = 0.0;
  // Shared blocks are divided by the multiplex ratio in the per-qubit budget;
  // dedicated blocks are charged in full.
  bool shared_across_qubits = true;
};

struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
};

struct ActivityWindow {
  std::string block;
  std::vector<Interval> intervals;  // disjoint, sorted, within the frame
  GatingMode mode = GatingMode::None;
};

/// Fraction of the frame the block is active.
double duty_cycle(const ActivityWindow& activity, std::int64_t frame_cycles);

/// Average power of one block over the frame under its gating mode:
///   None       -> p_leak + p_dyn
///   ClockGated -> p_leak + p_dyn * duty
///   PowerGated -> (p_leak + p_dyn) * duty + wake_energy * wakes / frame_time
double average_power(const BlockPower& block, const ActivityWindow& activity,
                     std::int64_t frame_cycles, double system_clock_hz);

struct GatingPolicyEntry {
  GatingMode mode = GatingMode::ClockGated;
  std::int64_t pre_wake_margin_cycles = 0;  // must cover the block's wake latency
};

using GatingPolicy = std::map<std::string, GatingPolicyEntry>;

/// Derives per-block activity from the trigger timeline: start/stop,
/// measure_begin/measure_end and power_on/power_off spans, widened backward
/// by the pre-wake margin and merged. Blocks without events get empty
/// activity. Blocks absent from the policy default to mode None.
std::vector<ActivityWindow> schedule_gating(const std::vector<seq::TriggerEvent>& timeline,
                                            const GatingPolicy& policy,
                                            const std::vector<BlockPower>& blocks,
                                            std::int64_t frame_cycles);

struct BlockReportRow {
  std::string name;
  GatingMode mode = GatingMode::None;
  double duty = 0.0;
  double avg_w = 0.0;
  double energy_j = 0.0;
  double on_time_s = 0.0;  // total ON time, the electromigration-relevant figure
  std::size_t wake_count = 0;
  bool shared_across_qubits = true;
};

struct PowerReport {
  std::vector<BlockReportRow> blocks;
  double total_avg_w = 0.0;
  double total_energy_j = 0.0;
  double frame_time_s = 0.0;
  int multiplex_ratio = 1;
  double per_qubit_w = 0.0;
  std::vector<std::string> caveats;
};

PowerReport build_report(const std::vector<BlockPower>& blocks,
                         const std::vector<ActivityWindow>& activities,
                         std::int64_t frame_cycles, double system_clock_hz, int multiplex_ratio);

/// Shared-block power divided by the multiplex ratio plus dedicated-block
/// power, summed per qubit.
double per_qubit_budget(const PowerReport& report, int multiplex_ratio);

/// CSV twin of the report, header "name,mode,duty,avg_w,energy_j,on_time_s,wakes".
void write_report_csv(std::ostream& out, const PowerReport& report);

}  // namespace qcsim::power
