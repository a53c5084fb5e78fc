#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safectrl/controller.hpp"
#include "safectrl/designspace.hpp"
#include "safectrl/mc.hpp"
#include "safectrl/synth.hpp"
#include "safectrl/twinsim.hpp"

namespace safectrl {

/// Paths and knobs of a workbench project; all paths resolve relative to the
/// directory the config file lives in.
struct ProjectConfig {
  std::string dir;
  std::string risk_file;
  std::string skeleton_file;
  std::string properties_file;
  std::string query_file;
  std::string scenario_file;
  std::string misuse_file;
  std::string mtl_file;  // optional: overrides the built-in trace properties
  std::string out_dir = "out";

  std::map<std::string, Value> extract_params;  // pinned synthesis point
  double detect_window_ms = 0.25;
  std::uint64_t seed = 1;
  double epsilon = 1e-8;
  std::size_t budget = 10000;
  std::size_t state_cap = 5000000;
  long utility_horizon = 50;

  GenerationConfig gen;

  std::string resolve(const std::string& rel) const;
};

ProjectConfig load_project(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

RiskModel load_risk(const ProjectConfig& cfg);
GeneratedModel build_mdp(const ProjectConfig& cfg);
GeneratedModel build_pdtmc(const ProjectConfig& cfg);
/// Same state space and rewards, but the controller never handles anything:
/// the reference process without a safety controller.
GeneratedModel build_baseline(const ProjectConfig& cfg);

/// Binds every parameter: pinned values first, then the first value of its
/// dp/query domain.
std::map<std::string, Value> default_point(const GeneratedModel& g, const SynthesisQuery* q,
                                           const std::map<std::string, Value>& pinned);

ExplicitModel instantiate(const GeneratedModel& g, const std::map<std::string, Value>& point,
                          std::size_t state_cap);

struct PropResult {
  std::string source;
  CheckResult result;
  std::optional<bool> expected;
  bool ok = true;  // matches the expectation when one is given
};

std::vector<PropResult> run_properties(const ExplicitModel& x, const std::string& props_text,
                                       const McOptions& opts);

/// Freedom-from-accident triple over the cause-labelled region (comparable
/// between the controlled and the uncontrolled model).
Triple accident_freedom_summary(const ExplicitModel& x, const McOptions& opts);

struct UtilityRow {
  std::string config;
  double productivity = 0.0;
  double risk = 0.0;
  bool baseline = false;
  bool all_stop = false;  // every factor mitigated by its stop option
};

/// Productivity/risk of every controller configuration plus the uncontrolled
/// process, over the bounded horizon T.
std::vector<UtilityRow> utility_table(const GeneratedModel& pdtmc, const GeneratedModel& baseline,
                                      long horizon, std::size_t state_cap, const McOptions& opts);

struct ValidationSummary {
  int traces = 0;
  int mtl_pass = 0;
  int mtl_fail = 0;
  bool mishap_free = true;
  CoverageReport coverage;
  Triple controlled;
  Triple uncontrolled;
  std::vector<std::string> misuse_unhandled;  // factors with unhandled causes
  std::vector<std::string> failures;          // human-readable fail lines
};

ValidationSummary run_validation(const ProjectConfig& cfg, const GeneratedModel& pdtmc,
                                 const GeneratedModel& baseline, const ControllerTable& table,
                                 const McOptions& opts);

std::string format_validation_report(const ValidationSummary& s);

/// The per-factor trace properties the campaign checks: the detection-latency
/// and guarded-liveness patterns, rewritten for finite traces.
std::vector<std::string> campaign_properties(const ProjectConfig& cfg);

}  // namespace safectrl
