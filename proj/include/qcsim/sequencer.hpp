#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace qcsim::seq {

// ---------------------------------------------------------------------------
// Instruction set
//
// One instruction per line, "MNEMONIC key=value ...", '#' starts a comment,
// labels stand alone as "name:". Cycle-valued operands are absolute system
// clock cycles.
// ---------------------------------------------------------------------------

struct PulseInstr {
  int channel = 0;
  std::string wave_id;
  double amp_scale = 1.0;  // in [0, 1]
  double phase_rad = 0.0;
  std::int64_t start_cycle = 0;
  std::int64_t len_cycles = 0;
};

struct MeasureInstr {
  int channel = 0;
  std::int64_t start_cycle = 0;
  std::int64_t window_cycles = 0;
};

struct BranchInstr {
  int bit_index = 0;
  std::string target_label;
};

struct ParityCorrectInstr {
  int qubit_group = 0;
};

struct PowerInstr {
  std::vector<std::string> blocks;
  bool on = false;
};

struct SyncWaitInstr {};
struct RecalInstr {};
struct HaltInstr {};

using Instruction = std::variant<PulseInstr, MeasureInstr, BranchInstr, ParityCorrectInstr,
                                 PowerInstr, SyncWaitInstr, RecalInstr, HaltInstr>;

struct Program {
  std::vector<Instruction> instructions;
  std::map<std::string, std::size_t> labels;
};

/// Parses the assembly dialect above. Diagnostics carry the 1-based line
/// number. Also enforces program-level invariants: branch targets resolve,
/// every path reaches HALT, and exactly one HALT is reachable.
Program parse_program(const std::string& text);

// ---------------------------------------------------------------------------
// Clock tree
// ---------------------------------------------------------------------------

/// A per-block clock derived from the system clock by the rational ratio
/// num/den. The block named by `name` is the logical control unit driven by
/// this domain.
struct ClockDomain {
  std::string name;
  std::int64_t num = 1;
  std::int64_t den = 1;

  double frequency_hz(double system_clock_hz) const {
    return system_clock_hz * static_cast<double>(num) / static_cast<double>(den);
  }
};

struct ClockTree {
  double system_clock_hz = 100e6;
  std::vector<ClockDomain> domains;

  const ClockDomain* find(const std::string& block) const;
};

void validate(const ClockTree& tree);

/// 100 MHz system clock with a 5 GHz DAC domain ("awg0") and a 500 MHz ADC
/// domain ("adc0") plus their processing blocks.
ClockTree default_clock_tree();

// ---------------------------------------------------------------------------
// Trigger timeline
// ---------------------------------------------------------------------------

enum class TriggerKind { Sync, Start, Stop, PowerOn, PowerOff, MeasureBegin, MeasureEnd };

const char* to_string(TriggerKind kind);

struct TriggerEvent {
  std::int64_t cycle = 0;  // system clock cycles
  std::string target_block;
  TriggerKind kind = TriggerKind::Sync;
};

bool operator==(const TriggerEvent& a, const TriggerEvent& b);

/// Static compilation of a program onto the clock tree: a sync event at
/// cycle 0 for every block, then start/stop and measure_begin/measure_end
/// pairs. Events are ordered by (cycle, program order). Branch dynamics are
/// not evaluated here; every instruction is scheduled.
std::vector<TriggerEvent> compile_timeline(const Program& program, const ClockTree& tree);

/// CSV export, header "cycle,target,kind".
void write_timeline_csv(std::ostream& out, const std::vector<TriggerEvent>& events);

// ---------------------------------------------------------------------------
// Scheduler FSM
// ---------------------------------------------------------------------------

enum class FsmState { Idle, Armed, Executing, Measuring, Correcting, Halted };
enum class FsmEvent { Sync, Start, Stop, MeasureBegin, MeasureEnd, Correct, CorrectDone, Halt };

const char* to_string(FsmState state);
const char* to_string(FsmEvent event);

struct SchedulerState {
  FsmState fsm = FsmState::Idle;
  std::int64_t cycle_counter = 0;
  std::size_t program_counter = 0;
};

/// Deterministic transition along the fixed edge set; illegal pairs raise a
/// protocol error naming the state and event. The cycle counter never
/// decreases.
SchedulerState step_fsm(const SchedulerState& state, FsmEvent event, std::int64_t cycle);

// ---------------------------------------------------------------------------
// Synchronization monitor
// ---------------------------------------------------------------------------

struct SyncStatus {
  bool in_sync = true;
  double max_counter_skew_cycles = 0.0;  // in system cycles
  std::int64_t last_check_cycle = 0;
};

struct DomainCounter {
  std::string domain;
  std::int64_t count = 0;
};

/// Ideal tick count of a domain at the given system cycle.
std::int64_t expected_domain_count(const ClockDomain& domain, std::int64_t system_cycle);

/// Tick count of a domain whose clock runs off-frequency by drift_ppm.
std::int64_t drifted_domain_count(const ClockDomain& domain, std::int64_t system_cycle,
                                  double drift_ppm);

/// Compares sampled counters against their expected values, rescaled to
/// system cycles. in_sync iff the worst deviation is within tolerance.
SyncStatus check_sync(const ClockTree& tree, std::int64_t system_cycle,
                      const std::vector<DomainCounter>& counters, double tolerance_cycles);

// ---------------------------------------------------------------------------
// Feedback
// ---------------------------------------------------------------------------

/// Branch resolution over the accumulated measurement bits (bit i is the
/// result of the i-th executed MEASURE). Returns the next program counter.
std::size_t feedback_branch(std::uint64_t measured_bits, std::size_t n_measured,
                            const BranchInstr& branch, const Program& program,
                            std::size_t current_pc);

/// Syndrome lookup for the 3-qubit repetition code. s01 = q0 XOR q1,
/// s12 = q1 XOR q2. Returns corrective PULSE instructions on channels
/// 3*qubit_group + {0,1,2}.
std::vector<Instruction> parity_correct(bool s01, bool s12, int qubit_group,
                                        std::int64_t at_cycle, std::int64_t len_cycles);

// ---------------------------------------------------------------------------
// Program runner
// ---------------------------------------------------------------------------

struct RunConfig {
  ClockTree clock_tree = default_clock_tree();
  double sync_tolerance_cycles = 1.0;
  std::int64_t sync_check_interval_cycles = 10000;
  // Cycles from measure_end to the first corrective start event issued by
  // PARITY_CORRECT; models decode plus trigger distribution.
  std::int64_t feedback_latency_cycles = 16;
  std::int64_t correction_len_cycles = 50;
  // Per-domain clock drift in ppm, applied when sampling sync counters.
  std::map<std::string, double> drift_ppm;
  // Returns the measured bit for the i-th executed MEASURE. Null reads 0.
  std::function<int(int channel, std::size_t measure_index)> measure;
  // Invoked by RECAL.
  std::function<void(std::size_t recal_index)> recal;
  // Safety bound on executed instructions (branches can loop).
  std::size_t max_executed_instructions = 1000000;
};

struct ExecutionTrace {
  std::vector<TriggerEvent> events;      // includes corrective pulses
  std::vector<FsmState> fsm_path;        // distinct states in visit order
  std::uint64_t measured_bits = 0;
  std::size_t n_measurements = 0;
  std::vector<std::int64_t> feedback_latencies_cycles;
  SchedulerState final_state;
  SyncStatus sync;
};

ExecutionTrace run_program(const Program& program, const RunConfig& config);

}  // namespace qcsim::seq
