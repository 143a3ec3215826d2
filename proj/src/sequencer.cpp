#include "qcsim/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <set>
#include <sstream>

#include "qcsim/csv.hpp"
#include "qcsim/errors.hpp"

namespace qcsim::seq {

namespace {

constexpr const char* kModule = "sequencer";

std::string awg_block(int channel) { return "awg" + std::to_string(channel); }
std::string adc_block(int channel) { return "adc" + std::to_string(channel); }
std::string disc_block(int channel) { return "disc" + std::to_string(channel); }

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& message) {
  throw ParseError(message + ", line " + std::to_string(line_no));
}

struct FieldMap {
  std::map<std::string, std::string> kv;
  std::size_t line_no;

  std::string take(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) parse_fail(line_no, "missing operand '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  }

  double take_double(const std::string& key) {
    std::string v = take(key);
    try {
      return csv::parse_double(v, key);
    } catch (const ParseError&) {
      parse_fail(line_no, "malformed operand '" + key + "=" + v + "'");
    }
  }

  std::int64_t take_int(const std::string& key) {
    std::string v = take(key);
    try {
      return csv::parse_int(v, key);
    } catch (const ParseError&) {
      parse_fail(line_no, "malformed operand '" + key + "=" + v + "'");
    }
  }

  void expect_empty() {
    if (!kv.empty()) parse_fail(line_no, "unknown operand '" + kv.begin()->first + "'");
  }
};

std::int64_t take_cycle(FieldMap& f, const std::string& key) {
  std::int64_t v = f.take_int(key);
  if (v < 0) parse_fail(f.line_no, "operand '" + key + "' must be non-negative");
  return v;
}

}  // namespace

Program parse_program(const std::string& text) {
  Program program;
  std::vector<std::pair<std::size_t, std::string>> pending_branch_lines;  // instr idx, line

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::size_t> instr_lines;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = csv::trim(line);
    if (line.empty()) continue;

    std::istringstream toks(line);
    std::string head;
    toks >> head;

    if (head.size() > 1 && head.back() == ':') {
      std::string label = head.substr(0, head.size() - 1);
      std::string rest;
      if (toks >> rest) parse_fail(line_no, "label must stand alone");
      if (program.labels.count(label)) parse_fail(line_no, "duplicate label '" + label + "'");
      program.labels[label] = program.instructions.size();
      continue;
    }

    static const std::set<std::string> kMnemonics = {
        "PULSE", "MEASURE", "BRANCH", "PARITY_CORRECT", "POWER", "SYNC_WAIT", "RECAL", "HALT"};
    if (!kMnemonics.count(head)) parse_fail(line_no, "unknown mnemonic '" + head + "'");

    FieldMap fields{{}, line_no};
    std::string tok;
    while (toks >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) parse_fail(line_no, "malformed operand '" + tok + "'");
      fields.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }

    Instruction instr;
    if (head == "PULSE") {
      PulseInstr p;
      p.channel = static_cast<int>(fields.take_int("ch"));
      p.wave_id = fields.take("wave");
      p.amp_scale = fields.take_double("amp");
      p.phase_rad = fields.take_double("phase");
      p.start_cycle = take_cycle(fields, "at");
      p.len_cycles = take_cycle(fields, "len");
      if (p.channel < 0) parse_fail(line_no, "operand 'ch' must be non-negative");
      if (p.amp_scale < 0.0 || p.amp_scale > 1.0) {
        parse_fail(line_no, "operand 'amp' must lie in [0, 1]");
      }
      instr = p;
    } else if (head == "MEASURE") {
      MeasureInstr m;
      m.channel = static_cast<int>(fields.take_int("ch"));
      m.start_cycle = take_cycle(fields, "at");
      m.window_cycles = take_cycle(fields, "window");
      if (m.channel < 0) parse_fail(line_no, "operand 'ch' must be non-negative");
      instr = m;
    } else if (head == "BRANCH") {
      BranchInstr b;
      b.bit_index = static_cast<int>(fields.take_int("bit"));
      b.target_label = fields.take("target");
      if (b.bit_index < 0) parse_fail(line_no, "operand 'bit' must be non-negative");
      pending_branch_lines.emplace_back(program.instructions.size(), std::to_string(line_no));
      instr = b;
    } else if (head == "PARITY_CORRECT") {
      ParityCorrectInstr pc;
      pc.qubit_group = static_cast<int>(fields.take_int("group"));
      if (pc.qubit_group < 0) parse_fail(line_no, "operand 'group' must be non-negative");
      instr = pc;
    } else if (head == "POWER") {
      PowerInstr pw;
      for (const auto& b : csv::split(fields.take("blocks"), ',')) {
        if (b.empty()) parse_fail(line_no, "empty block name in 'blocks'");
        pw.blocks.push_back(b);
      }
      std::string state = fields.take("state");
      if (state == "on") {
        pw.on = true;
      } else if (state == "off") {
        pw.on = false;
      } else {
        parse_fail(line_no, "operand 'state' must be on or off");
      }
      instr = pw;
    } else if (head == "SYNC_WAIT") {
      instr = SyncWaitInstr{};
    } else if (head == "RECAL") {
      instr = RecalInstr{};
    } else if (head == "HALT") {
      instr = HaltInstr{};
    } else {
      parse_fail(line_no, "unknown mnemonic '" + head + "'");
    }
    fields.expect_empty();
    program.instructions.push_back(std::move(instr));
    instr_lines.push_back(line_no);
  }

  if (program.instructions.empty()) throw ParseError("program is empty");

  // Trailing labels would point one past the end.
  for (const auto& [label, idx] : program.labels) {
    if (idx >= program.instructions.size()) {
      throw ParseError("label '" + label + "' points past the end of the program");
    }
  }
  for (std::size_t i = 0; i < program.instructions.size(); ++i) {
    if (const auto* b = std::get_if<BranchInstr>(&program.instructions[i])) {
      if (!program.labels.count(b->target_label)) {
        parse_fail(instr_lines[i], "unresolved label '" + b->target_label + "'");
      }
    }
  }

  // Reachability: every path must terminate at the single reachable HALT.
  std::set<std::size_t> reachable;
  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    std::size_t pc = frontier.front();
    frontier.pop_front();
    if (!reachable.insert(pc).second) continue;
    const Instruction& instr = program.instructions[pc];
    if (std::holds_alternative<HaltInstr>(instr)) continue;
    if (pc + 1 >= program.instructions.size()) {
      parse_fail(instr_lines[pc], "control reaches the end of the program without HALT");
    }
    frontier.push_back(pc + 1);
    if (const auto* b = std::get_if<BranchInstr>(&instr)) {
      frontier.push_back(program.labels.at(b->target_label));
    }
  }
  std::size_t reachable_halts = 0;
  for (std::size_t pc : reachable) {
    if (std::holds_alternative<HaltInstr>(program.instructions[pc])) ++reachable_halts;
  }
  if (reachable_halts != 1) {
    throw ParseError("program must have exactly one reachable HALT, found " +
                     std::to_string(reachable_halts));
  }
  return program;
}

const ClockDomain* ClockTree::find(const std::string& block) const {
  for (const auto& d : domains) {
    if (d.name == block) return &d;
  }
  return nullptr;
}

void validate(const ClockTree& tree) {
  if (!(tree.system_clock_hz > 0.0)) {
    throw ValidationError(kModule, "system clock must be positive");
  }
  std::set<std::string> seen;
  for (const auto& d : tree.domains) {
    if (d.num <= 0 || d.den <= 0) {
      throw ValidationError(kModule, "clock ratio for '" + d.name + "' must be positive");
    }
    if (!seen.insert(d.name).second) {
      throw ValidationError(kModule, "duplicate clock domain '" + d.name + "'");
    }
  }
}

ClockTree default_clock_tree() {
  ClockTree tree;
  tree.system_clock_hz = 100e6;
  tree.domains = {
      {"seq", 1, 1},    // scheduler itself
      {"awg0", 50, 1},  // 5 GHz DAC clock
      {"adc0", 5, 1},   // 500 MHz Nyquist-rate ADC clock
      {"disc0", 5, 1},  // discriminator runs off the ADC clock
  };
  return tree;
}

const char* to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::Sync: return "sync";
    case TriggerKind::Start: return "start";
    case TriggerKind::Stop: return "stop";
    case TriggerKind::PowerOn: return "power_on";
    case TriggerKind::PowerOff: return "power_off";
    case TriggerKind::MeasureBegin: return "measure_begin";
    case TriggerKind::MeasureEnd: return "measure_end";
  }
  return "?";
}

bool operator==(const TriggerEvent& a, const TriggerEvent& b) {
  return a.cycle == b.cycle && a.target_block == b.target_block && a.kind == b.kind;
}

namespace {

const ClockDomain& require_domain(const ClockTree& tree, const std::string& block) {
  const ClockDomain* d = tree.find(block);
  if (!d) throw ValidationError(kModule, "block '" + block + "' has no clock domain");
  return *d;
}

// A system cycle c lies on the domain grid iff a domain tick occurs exactly
// at c, i.e. c*num is divisible by den.
bool on_domain_grid(const ClockDomain& d, std::int64_t cycle) {
  return (cycle * d.num) % d.den == 0;
}

}  // namespace

std::vector<TriggerEvent> compile_timeline(const Program& program, const ClockTree& tree) {
  validate(tree);
  std::vector<TriggerEvent> events;
  for (const auto& d : tree.domains) {
    events.push_back({0, d.name, TriggerKind::Sync});
  }

  std::int64_t cursor = 0;
  for (const auto& instr : program.instructions) {
    if (const auto* p = std::get_if<PulseInstr>(&instr)) {
      const std::string block = awg_block(p->channel);
      const ClockDomain& d = require_domain(tree, block);
      if (!on_domain_grid(d, p->start_cycle)) {
        throw ValidationError(kModule, "PULSE start cycle " + std::to_string(p->start_cycle) +
                                           " is not representable on the '" + block +
                                           "' clock grid");
      }
      events.push_back({p->start_cycle, block, TriggerKind::Start});
      events.push_back({p->start_cycle + p->len_cycles, block, TriggerKind::Stop});
      cursor = std::max(cursor, p->start_cycle + p->len_cycles);
    } else if (const auto* m = std::get_if<MeasureInstr>(&instr)) {
      for (const std::string& block : {adc_block(m->channel), disc_block(m->channel)}) {
        require_domain(tree, block);
        events.push_back({m->start_cycle, block, TriggerKind::MeasureBegin});
        events.push_back({m->start_cycle + m->window_cycles, block, TriggerKind::MeasureEnd});
      }
      cursor = std::max(cursor, m->start_cycle + m->window_cycles);
    } else if (const auto* pw = std::get_if<PowerInstr>(&instr)) {
      for (const auto& block : pw->blocks) {
        require_domain(tree, block);
        events.push_back({cursor, block, pw->on ? TriggerKind::PowerOn : TriggerKind::PowerOff});
      }
    } else if (std::holds_alternative<SyncWaitInstr>(instr)) {
      for (const auto& d : tree.domains) {
        events.push_back({cursor, d.name, TriggerKind::Sync});
      }
    }
    // BRANCH, PARITY_CORRECT, RECAL and HALT schedule no static events.
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const TriggerEvent& a, const TriggerEvent& b) { return a.cycle < b.cycle; });
  return events;
}

void write_timeline_csv(std::ostream& out, const std::vector<TriggerEvent>& events) {
  out << "cycle,target,kind\n";
  for (const auto& e : events) {
    out << e.cycle << ',' << e.target_block << ',' << to_string(e.kind) << '\n';
  }
}

const char* to_string(FsmState state) {
  switch (state) {
    case FsmState::Idle: return "Idle";
    case FsmState::Armed: return "Armed";
    case FsmState::Executing: return "Executing";
    case FsmState::Measuring: return "Measuring";
    case FsmState::Correcting: return "Correcting";
    case FsmState::Halted: return "Halted";
  }
  return "?";
}

const char* to_string(FsmEvent event) {
  switch (event) {
    case FsmEvent::Sync: return "sync";
    case FsmEvent::Start: return "start";
    case FsmEvent::Stop: return "stop";
    case FsmEvent::MeasureBegin: return "measure_begin";
    case FsmEvent::MeasureEnd: return "measure_end";
    case FsmEvent::Correct: return "correct";
    case FsmEvent::CorrectDone: return "correct_done";
    case FsmEvent::Halt: return "halt";
  }
  return "?";
}

SchedulerState step_fsm(const SchedulerState& state, FsmEvent event, std::int64_t cycle) {
  if (cycle < state.cycle_counter) {
    throw ValidationError(kModule, std::string("event '") + to_string(event) +
                                       "' arrived out of order at cycle " + std::to_string(cycle));
  }

  auto illegal = [&]() -> FsmState {
    throw ValidationError(kModule, std::string("illegal transition: state ") +
                                       to_string(state.fsm) + " does not accept event '" +
                                       to_string(event) + "'");
  };

  FsmState next = state.fsm;
  if (event == FsmEvent::Halt) {
    if (state.fsm == FsmState::Halted) illegal();
    next = FsmState::Halted;
  } else {
    switch (state.fsm) {
      case FsmState::Idle:
        next = (event == FsmEvent::Sync) ? FsmState::Armed : illegal();
        break;
      case FsmState::Armed:
        if (event == FsmEvent::Sync) next = FsmState::Armed;
        else if (event == FsmEvent::Start) next = FsmState::Executing;
        else illegal();
        break;
      case FsmState::Executing:
        if (event == FsmEvent::MeasureBegin) next = FsmState::Measuring;
        else if (event == FsmEvent::Start || event == FsmEvent::Stop || event == FsmEvent::Sync)
          next = FsmState::Executing;
        else illegal();
        break;
      case FsmState::Measuring:
        if (event == FsmEvent::MeasureEnd) next = FsmState::Executing;
        else if (event == FsmEvent::Correct) next = FsmState::Correcting;
        else if (event == FsmEvent::Start || event == FsmEvent::Stop || event == FsmEvent::Sync)
          next = FsmState::Measuring;
        else illegal();
        break;
      case FsmState::Correcting:
        if (event == FsmEvent::CorrectDone) next = FsmState::Executing;
        else if (event == FsmEvent::Start || event == FsmEvent::Stop || event == FsmEvent::Sync)
          next = FsmState::Correcting;
        else illegal();
        break;
      case FsmState::Halted:
        illegal();
        break;
    }
  }

  SchedulerState out = state;
  out.fsm = next;
  out.cycle_counter = std::max(state.cycle_counter, cycle);
  return out;
}

std::int64_t expected_domain_count(const ClockDomain& domain, std::int64_t system_cycle) {
  return (system_cycle * domain.num) / domain.den;
}

std::int64_t drifted_domain_count(const ClockDomain& domain, std::int64_t system_cycle,
                                  double drift_ppm) {
  const std::int64_t ideal = expected_domain_count(domain, system_cycle);
  return ideal + std::llround(static_cast<double>(ideal) * drift_ppm * 1e-6);
}

SyncStatus check_sync(const ClockTree& tree, std::int64_t system_cycle,
                      const std::vector<DomainCounter>& counters, double tolerance_cycles) {
  SyncStatus status;
  status.last_check_cycle = system_cycle;
  double max_skew = 0.0;
  for (const auto& c : counters) {
    const ClockDomain& d = require_domain(tree, c.domain);
    const std::int64_t expected = expected_domain_count(d, system_cycle);
    const double skew = std::abs(static_cast<double>(expected - c.count)) *
                        static_cast<double>(d.den) / static_cast<double>(d.num);
    max_skew = std::max(max_skew, skew);
  }
  status.max_counter_skew_cycles = max_skew;
  status.in_sync = max_skew <= tolerance_cycles;
  return status;
}

std::size_t feedback_branch(std::uint64_t measured_bits, std::size_t n_measured,
                            const BranchInstr& branch, const Program& program,
                            std::size_t current_pc) {
  if (branch.bit_index < 0 || static_cast<std::size_t>(branch.bit_index) >= n_measured ||
      branch.bit_index >= 64) {
    throw ValidationError(kModule, "BRANCH bit index " + std::to_string(branch.bit_index) +
                                       " out of range (" + std::to_string(n_measured) +
                                       " bits measured)");
  }
  auto it = program.labels.find(branch.target_label);
  if (it == program.labels.end()) {
    throw ValidationError(kModule, "BRANCH target '" + branch.target_label + "' undefined");
  }
  const bool taken = (measured_bits >> branch.bit_index) & 1u;
  return taken ? it->second : current_pc + 1;
}

std::vector<Instruction> parity_correct(bool s01, bool s12, int qubit_group,
                                        std::int64_t at_cycle, std::int64_t len_cycles) {
  // 3-qubit repetition code: 00 -> none, 10 -> q0, 11 -> q1, 01 -> q2.
  int flip = -1;
  if (s01 && !s12) flip = 0;
  else if (s01 && s12) flip = 1;
  else if (!s01 && s12) flip = 2;

  std::vector<Instruction> out;
  if (flip >= 0) {
    PulseInstr p;
    p.channel = 3 * qubit_group + flip;
    p.wave_id = "xflip";
    p.amp_scale = 1.0;
    p.phase_rad = 0.0;
    p.start_cycle = at_cycle;
    p.len_cycles = len_cycles;
    out.emplace_back(p);
  }
  return out;
}

namespace {

struct FsmLogEntry {
  std::int64_t cycle;
  FsmEvent event;
};

}  // namespace

ExecutionTrace run_program(const Program& program, const RunConfig& config) {
  validate(config.clock_tree);
  if (program.instructions.empty()) throw ValidationError(kModule, "program is empty");

  ExecutionTrace trace;
  std::vector<FsmLogEntry> fsm_log;
  std::vector<TriggerEvent>& events = trace.events;

  for (const auto& d : config.clock_tree.domains) {
    events.push_back({0, d.name, TriggerKind::Sync});
  }
  fsm_log.push_back({0, FsmEvent::Sync});

  std::int64_t cursor = 0;
  std::size_t pc = 0;
  std::size_t executed = 0;
  std::size_t recal_count = 0;
  bool halted = false;

  // Set while a MEASURE result is pending: the next instruction decides
  // whether the FSM leaves Measuring via measure_end or via correct.
  bool measure_pending = false;
  std::int64_t pending_measure_end = 0;
  // Set when a taken branch plays the corrector; the next PULSE start closes
  // the latency measurement.
  bool awaiting_corrective_start = false;
  std::int64_t correction_origin_cycle = 0;

  auto resolve_pending_measure = [&](bool corrected) {
    if (!measure_pending) return;
    fsm_log.push_back({pending_measure_end, corrected ? FsmEvent::Correct : FsmEvent::MeasureEnd});
    measure_pending = false;
  };

  auto emit_pulse = [&](const PulseInstr& p) {
    const std::string block = awg_block(p.channel);
    const ClockDomain& d = require_domain(config.clock_tree, block);
    if (!on_domain_grid(d, p.start_cycle)) {
      throw ValidationError(kModule, "PULSE start cycle " + std::to_string(p.start_cycle) +
                                         " is not representable on the '" + block +
                                         "' clock grid");
    }
    events.push_back({p.start_cycle, block, TriggerKind::Start});
    events.push_back({p.start_cycle + p.len_cycles, block, TriggerKind::Stop});
    fsm_log.push_back({p.start_cycle, FsmEvent::Start});
    fsm_log.push_back({p.start_cycle + p.len_cycles, FsmEvent::Stop});
    cursor = std::max(cursor, p.start_cycle + p.len_cycles);
  };

  while (!halted) {
    if (++executed > config.max_executed_instructions) {
      throw ValidationError(kModule, "instruction budget exhausted (runaway branch loop?)");
    }
    const Instruction& instr = program.instructions[pc];
    std::size_t next_pc = pc + 1;

    if (const auto* p = std::get_if<PulseInstr>(&instr)) {
      resolve_pending_measure(false);
      if (awaiting_corrective_start) {
        trace.feedback_latencies_cycles.push_back(p->start_cycle - correction_origin_cycle);
        awaiting_corrective_start = false;
      }
      emit_pulse(*p);
    } else if (const auto* m = std::get_if<MeasureInstr>(&instr)) {
      resolve_pending_measure(false);
      for (const std::string& block : {adc_block(m->channel), disc_block(m->channel)}) {
        require_domain(config.clock_tree, block);
        events.push_back({m->start_cycle, block, TriggerKind::MeasureBegin});
        events.push_back({m->start_cycle + m->window_cycles, block, TriggerKind::MeasureEnd});
      }
      fsm_log.push_back({m->start_cycle, FsmEvent::MeasureBegin});
      const int bit = config.measure ? (config.measure(m->channel, trace.n_measurements) ? 1 : 0)
                                     : 0;
      if (trace.n_measurements < 64 && bit) {
        trace.measured_bits |= (1ULL << trace.n_measurements);
      }
      ++trace.n_measurements;
      measure_pending = true;
      pending_measure_end = m->start_cycle + m->window_cycles;
      cursor = std::max(cursor, pending_measure_end);
    } else if (const auto* b = std::get_if<BranchInstr>(&instr)) {
      next_pc = feedback_branch(trace.measured_bits, trace.n_measurements, *b, program, pc);
      const bool taken = next_pc != pc + 1;
      if (measure_pending) {
        resolve_pending_measure(taken);
        if (taken) {
          // The corrective work is the code at the branch target; the FSM
          // passes through Correcting at the decision point.
          fsm_log.push_back({pending_measure_end, FsmEvent::CorrectDone});
          awaiting_corrective_start = true;
          correction_origin_cycle = pending_measure_end;
        }
      }
    } else if (const auto* pcorr = std::get_if<ParityCorrectInstr>(&instr)) {
      if (trace.n_measurements < 2) {
        throw ValidationError(kModule, "PARITY_CORRECT requires two prior MEASUREs");
      }
      const bool s01 = (trace.measured_bits >> (trace.n_measurements - 2)) & 1u;
      const bool s12 = (trace.measured_bits >> (trace.n_measurements - 1)) & 1u;
      const bool was_pending = measure_pending;
      const std::int64_t origin = was_pending ? pending_measure_end : cursor;
      auto corrections = parity_correct(s01, s12, pcorr->qubit_group,
                                        origin + config.feedback_latency_cycles,
                                        config.correction_len_cycles);
      resolve_pending_measure(!corrections.empty());
      for (const auto& ci : corrections) {
        const auto& p = std::get<PulseInstr>(ci);
        trace.feedback_latencies_cycles.push_back(p.start_cycle - origin);
        emit_pulse(p);
      }
      // The FSM only passes through Correcting when the decision closes a
      // measurement; a standalone correction stays in Executing.
      if (!corrections.empty() && was_pending) {
        fsm_log.push_back({origin + config.feedback_latency_cycles, FsmEvent::CorrectDone});
      }
    } else if (const auto* pw = std::get_if<PowerInstr>(&instr)) {
      resolve_pending_measure(false);
      for (const auto& block : pw->blocks) {
        require_domain(config.clock_tree, block);
        events.push_back({cursor, block, pw->on ? TriggerKind::PowerOn : TriggerKind::PowerOff});
      }
    } else if (std::holds_alternative<SyncWaitInstr>(instr)) {
      resolve_pending_measure(false);
      for (const auto& d : config.clock_tree.domains) {
        events.push_back({cursor, d.name, TriggerKind::Sync});
      }
      fsm_log.push_back({cursor, FsmEvent::Sync});
    } else if (std::holds_alternative<RecalInstr>(instr)) {
      resolve_pending_measure(false);
      if (config.recal) config.recal(recal_count);
      ++recal_count;
    } else if (std::holds_alternative<HaltInstr>(instr)) {
      resolve_pending_measure(false);
      fsm_log.push_back({cursor, FsmEvent::Halt});
      halted = true;
    }
    pc = next_pc;
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const TriggerEvent& a, const TriggerEvent& b) { return a.cycle < b.cycle; });
  std::stable_sort(fsm_log.begin(), fsm_log.end(),
                   [](const FsmLogEntry& a, const FsmLogEntry& b) { return a.cycle < b.cycle; });

  SchedulerState state;
  trace.fsm_path.push_back(state.fsm);
  for (const auto& entry : fsm_log) {
    SchedulerState next = step_fsm(state, entry.event, entry.cycle);
    if (next.fsm != state.fsm) trace.fsm_path.push_back(next.fsm);
    state = next;
  }
  state.program_counter = pc;
  trace.final_state = state;

  // Periodic sync monitoring plus a final check at the end of the frame.
  std::vector<std::int64_t> check_cycles;
  for (std::int64_t c = config.sync_check_interval_cycles; c < cursor;
       c += config.sync_check_interval_cycles) {
    check_cycles.push_back(c);
  }
  check_cycles.push_back(cursor);

  SyncStatus sync;
  sync.in_sync = true;
  for (std::int64_t c : check_cycles) {
    std::vector<DomainCounter> counters;
    counters.reserve(config.clock_tree.domains.size());
    for (const auto& d : config.clock_tree.domains) {
      auto it = config.drift_ppm.find(d.name);
      const double ppm = it == config.drift_ppm.end() ? 0.0 : it->second;
      counters.push_back({d.name, drifted_domain_count(d, c, ppm)});
    }
    SyncStatus s = check_sync(config.clock_tree, c, counters, config.sync_tolerance_cycles);
    sync.last_check_cycle = s.last_check_cycle;
    sync.max_counter_skew_cycles = std::max(sync.max_counter_skew_cycles,
                                            s.max_counter_skew_cycles);
    sync.in_sync = sync.in_sync && s.in_sync;
  }
  trace.sync = sync;
  return trace;
}

}  // namespace qcsim::seq
