#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safectrl/designspace.hpp"
#include "safectrl/mc.hpp"
#include "safectrl/model.hpp"

namespace safectrl {

enum class Direction { Minimize, Maximize };

struct Objective {
  std::string name;
  std::string query_text;  // surface-syntax P or R query
  Direction direction = Direction::Maximize;
  double weight = 1.0;
};

struct Constraint {
  std::string name;
  std::string query_text;  // boolean property
};

struct ParamDomain {
  std::string name;
  std::vector<Value> values;       // discrete option domains
  bool numeric = false;            // numeric range, gridded
  double lo = 0.0, hi = 0.0;
  int grid = 5;
};

enum class SynthSetting { Mdp, Pdtmc };

struct SynthesisQuery {
  SynthSetting setting = SynthSetting::Mdp;
  std::vector<Objective> objectives;
  std::vector<Constraint> constraints;
  std::vector<ParamDomain> domains;  // pDTMC only
  std::uint64_t seed = 1;
  std::size_t budget = 10000;
  long horizon = 30;                          // T for the bounded objectives
  std::map<std::string, double> risk_scale;   // s_f per factor; default 1.0
};

struct ConstraintVerdict {
  std::string name;
  bool holds = false;
};

struct SolutionPoint {
  std::map<std::string, Value> params;  // pDTMC assignment (empty for MDP)
  Policy policy;                        // MDP setting
  std::vector<double> objectives;       // in query order (pDTMC: fixed triple)
  std::vector<ConstraintVerdict> verdicts;
  bool feasible = true;
  bool zero_denominator = false;  // productivity-ratio guard tripped
};

/// Parses the synthesis query file format (key/value blocks; see the bundled
/// case study for an example).
SynthesisQuery parse_query(const std::string& text);

/// Weighted-sum scalarisation over an MDP followed by constraint checks on
/// the induced chain.
SolutionPoint synth_mdp(const ExplicitModel& mdp, const SynthesisQuery& q,
                        const McOptions& opts = {});

/// Fixed objective triple of the pDTMC search: maximise the productivity
/// ratio, minimise nuisance, minimise scaled total risk, all over C<=T.
struct PdtmcObjectives {
  double productivity = 0.0;
  double nuisance = 0.0;
  double risk = 0.0;
  bool zero_denominator = false;
};

PdtmcObjectives evaluate_pdtmc_point(const ExplicitModel& dtmc, const GeneratedModel& g,
                                     const SynthesisQuery& q, const McOptions& opts = {});

/// Search over the parameter space of the generated pDTMC; returns the
/// nondominated feasible set, sorted for reproducibility.
std::vector<SolutionPoint> synth_pdtmc(const GeneratedModel& g, const SynthesisQuery& q,
                                       const McOptions& opts = {});

/// Removes dominated points. `directions` holds one entry per objective.
std::vector<std::size_t> pareto_filter(const std::vector<std::vector<double>>& points,
                                       const std::vector<Direction>& directions);

}  // namespace safectrl
