#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safectrl/controller.hpp"
#include "safectrl/trace.hpp"

namespace safectrl {

/// Discrete-event surrogate of the work cell: operator(s), robot arm, spot
/// welder, range finder and light barrier, with the safety controller woken
/// after every atomic event.
struct Scenario {
  std::uint64_t seed = 1;
  std::array<double, 4> waits_s{5, 5, 5, 5};  // entering bench, at bench, entering cell, at welder
  double horizon_s = 20.0;
  double step_ms = 50.0;

  double op_move_ms = 500.0;
  double robot_action_ms = 2000.0;
  double weld_ms = 4000.0;

  int operators = 1;  // 2 reproduces the misuse case
  double second_op_offset_s = 1.0;

  bool sensor_failure = false;  // stale range reading on cell exit
  double pr_sensor = 0.05;
  bool mishaps_enabled = true;
  double pr_mishap = 0.2;

  const ControllerTable* table = nullptr;  // may be null: uncontrolled run
};

struct ScenarioFile {
  Scenario base;
  std::string controller_path;
  int campaign_n = 0;  // 0: single run with base.waits_s
  double total_s = 20.0;
  std::vector<double> slot_max;  // optional per-slot bounds
};

ScenarioFile parse_scenario(const std::string& text);

/// Uniform wait vectors on the constrained simplex (sum fixed, optional
/// per-slot maxima), via sorted-spacings sampling with rejection.
std::vector<std::array<double, 4>> gen_test_vectors(int n, double total,
                                                    const std::vector<double>& slot_max,
                                                    std::uint64_t seed);

TimedTrace run_scenario(const Scenario& s);

struct CoverageReport {
  std::map<std::string, bool> cells;        // "<kind>:<value>|<interference>"
  std::map<std::string, bool> phase_cells;  // "<factor>:<phase>"
  int covered = 0, total = 0;
  int phase_covered = 0, phase_total = 0;
  bool full = false;
};

CoverageReport situation_coverage(const std::vector<TimedTrace>& traces);

/// A cause that held in some record while its factor never left the inactive
/// phase afterwards (the misuse-case blind spot).
std::vector<std::string> unhandled_causes(const TimedTrace& t);

}  // namespace safectrl
