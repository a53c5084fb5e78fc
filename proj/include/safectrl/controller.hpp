#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "safectrl/designspace.hpp"
#include "safectrl/model.hpp"

namespace safectrl {

/// One executable rule: fire `event` when the monitored snapshot and the
/// internal risk state match, emit the control outputs, advance the phases.
struct ControllerRule {
  std::string event;
  std::vector<std::pair<std::string, std::int64_t>> process_guard;  // monitored var = value
  std::vector<std::pair<std::string, std::int64_t>> risk_guard;     // phase var = value
  std::vector<std::pair<std::string, std::int64_t>> outputs;        // controlled var := value
  std::vector<std::pair<std::string, std::int64_t>> phase_updates;  // phase var := value
};

struct ControllerTable {
  std::vector<std::string> monitored;  // non-phase variables read by the rules
  std::vector<std::string> controlled;
  std::vector<std::string> phase_vars;
  std::map<std::string, std::map<std::string, std::int64_t>> categories;  // name -> value
  std::vector<ControllerRule> rules;
};

struct RuntimeState {
  std::map<std::string, std::int64_t> phases;
  std::map<std::string, std::int64_t> last_snapshot;
  bool primed = false;  // false until the first step
};

struct Fire {
  std::string event;
  std::vector<std::pair<std::string, std::int64_t>> outputs;
  std::map<std::string, std::int64_t> phases;  // internal risk state after the rule
};

struct StepResult {
  std::vector<Fire> fires;  // rules fired this wake-up, in order
};

/// Extracts the executable table from the deterministic controller part of a
/// policy chain over the generated model.
ControllerTable extract_controller(const ExplicitModel& chain, const GeneratedModel& g);

RuntimeState initial_runtime(const ControllerTable& t, const GeneratedModel& g);

/// One wake-up of the controller: fires matching rules to quiescence.
StepResult step(const ControllerTable& t, RuntimeState& rt,
                const std::map<std::string, std::int64_t>& snapshot);

std::string print_controller(const ControllerTable& t);
ControllerTable parse_controller(const std::string& text);

struct OverheadInputs {
  std::map<std::string, double> detection;  // per-factor detection cost
  double mode_switch = 0.0;
  double activity_switch = 0.0;
  double safety_function = 0.0;
  double finalise = 0.0;
  double mode_resume = 0.0;
  double activity_resume = 0.0;
  double function_off = 0.0;
  int repetition = 0;
};

struct OverheadEstimate {
  std::map<std::string, double> handling_min;  // per factor
  std::map<std::string, double> handling_max;
  double sequential_slot = 0.0;
  double parallel_rate = 0.0;
};

OverheadEstimate overhead_estimate(const OverheadInputs& in);

}  // namespace safectrl
