#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safectrl/model.hpp"
#include "safectrl/risk.hpp"

namespace safectrl {

/// How the generated controller hooks into a process skeleton.
struct GenerationConfig {
  std::string ok_guard = "OK_S";  // formula guarding the controller's turn
  std::string token_var = "token";
  std::string turn_var = "turn";
  int actor_count = 3;
  std::vector<std::string> activity_vars = {"wact", "ract"};
  std::string safmod_var = "safmod";
  // Accident-prone actions split into a nominal and a mishap-pattern command;
  // profile rewards attach to both labels.
  std::string mishap_prefix = "mis_";
  bool emit_controller = true;  // false: token-cycling stub without handling
};

enum class CmdStage {
  Detection,
  ModeSwitch,
  ActivitySwitch,
  SafetyFunction,
  MitigationDone,
  SafetyFunctionOff,
  ModeResume,
  ActivityResume,
  Idle,
};

struct GeneratedCommand {
  std::string label;
  std::string factor;
  int option = -1;  // index into mitigated_by / resumed_by
  bool resumption = false;
  CmdStage stage = CmdStage::Idle;
};

struct GeneratedModel {
  ProcessModel model;  // parsed full model, MDP form unless transformed
  std::string text;    // emitted model file
  std::vector<GeneratedCommand> generated;
  std::map<std::string, std::vector<Value>> dp_domains;  // pDTMC decision params
  RiskModel risk;
  GenerationConfig cfg;
  int command_count = 0;
  int reward_item_count = 0;
};

/// Mode/activity switch rule: move to the target when that does not increase
/// risk, otherwise stay.
std::string mitigation_target(const std::string& cur, const std::string& target,
                              const DistanceMatrix& m);

struct ResumeCandidate {
  std::optional<std::string> activity;
  std::optional<std::string> safmod;
};

/// Componentwise most-restrictive combination over the candidates: per
/// component the category with the greatest risk-reduction distance from the
/// most permissive category; first candidate wins ties.
ResumeCandidate resumption_target(const std::vector<ResumeCandidate>& candidates,
                                  const DistanceMatrix& act, const DistanceMatrix& safmod);

/// Individual generation steps (text fragments in the model grammar).
std::vector<std::string> gen_risk_predicates(const RiskModel& rm);
std::vector<std::string> gen_detection(const RiskModel& rm, const GenerationConfig& cfg);
std::string gen_idle(const RiskModel& rm, const GenerationConfig& cfg, bool pdtmc);
std::vector<std::string> gen_controller_module(const RiskModel& rm, const GenerationConfig& cfg,
                                               bool pdtmc,
                                               std::vector<GeneratedCommand>* info = nullptr);
std::vector<std::string> gen_rewards(const RiskModel& rm, const GenerationConfig& cfg);

/// Splices generated declarations, commands and rewards into the skeleton at
/// the `//@formulas`, `//@controller` and `//@rewards` anchors and parses the
/// result. The output is the MDP form of the design space.
GeneratedModel generate(const std::string& skeleton_text, const RiskModel& rm,
                        const GenerationConfig& cfg);

/// Re-emits the design space with controller choice bound to decision
/// parameters (dp<factor>mit / dp<factor>res) and residual nondeterminism
/// resolved uniformly at random.
GeneratedModel pdtmc_transform(const std::string& skeleton_text, const RiskModel& rm,
                               const GenerationConfig& cfg);

/// Deterministic scheduling ranks for the generated commands: internal phase
/// updates run before token-yielding commands, so no factor's handling can
/// starve behind another factor's wait loop.
std::vector<std::string> controller_priority(const GeneratedModel& g);

}  // namespace safectrl
