#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safectrl/expr.hpp"

namespace safectrl {

/// Mitigation or resumption option of a risk factor. Guard/cf/update texts
/// stay unresolved here; they are parsed against the process skeleton's
/// declarations at generation time.
struct MitigationOption {
  std::string name;
  std::string description;
  std::string guard_text;   // detector predicate for detection modes
  std::string cf_text;      // causal-factor predicate
  std::vector<std::pair<std::string, std::string>> updates;  // (var, rhs text)
  std::optional<std::string> target_activity;
  std::optional<std::string> target_safmod;
  std::string disruption_text;  // numeric expressions; may reference parameters
  std::string nuisance_text;
  std::string effort_text;
};

struct RiskFactor {
  std::string id;
  std::string description;
  std::string guard_text;  // ground-truth cause
  std::vector<std::string> requires_occ;
  std::vector<std::string> prevents;
  std::vector<std::string> mit_prevents_mit;
  std::string detected_by;                 // mode name
  std::vector<std::string> mitigated_by;   // mode names, in declaration order
  std::vector<std::string> resumed_by;
  double severity = 1.0;

  std::string phase_var() const { return id + "p"; }
};

struct DistanceMatrix {
  std::string name;                           // variable the categories apply to
  std::vector<std::string> categories;        // declaration order = index order
  std::vector<std::vector<double>> lower;     // lower[i] has i+1 entries

  int index_of(const std::string& cat) const;
};

/// Categorical risk gradient: positive when moving from -> to reduces risk.
double grad(const DistanceMatrix& m, const std::string& from, const std::string& to);

struct ProfileRow {
  std::string action;
  std::string guard_text;                       // extra guard for risk items
  std::map<std::string, std::string> risk;      // factor id -> value expression
  std::string guard_prod_text;
  std::string prod_text;
};

struct RiskModel {
  std::vector<RiskFactor> factors;
  std::vector<MitigationOption> modes;  // all mode blocks, by name
  DistanceMatrix act;
  DistanceMatrix safmod;
  std::vector<ProfileRow> profile;
  std::map<std::string, Value> constants;  // e.g. mishap/error/failure rates

  const RiskFactor* find_factor(const std::string& id) const;
  const MitigationOption* find_mode(const std::string& name) const;
  /// Resolved option lists (mitigatedBy / resumedBy) of a factor.
  std::vector<const MitigationOption*> mitigations(const RiskFactor& f) const;
  std::vector<const MitigationOption*> resumptions(const RiskFactor& f) const;
};

RiskModel parse_risk_model(const std::string& text);
std::string print_risk_model(const RiskModel& m);

/// Basic three-phase risk state: one phase per factor.
enum class BasicPhase { Inactive, Active, Mitigated };

using RiskState = std::vector<BasicPhase>;  // indexed like RiskModel::factors

/// All dependency-consistent assignments of basic phases to the factors.
std::vector<RiskState> risk_space(const RiskModel& m);

/// Disjunction over factors of (phase in {act, mit1, mit2}) over the phase
/// variables declared in `decls`.
Expr unsafe_region_predicate(const RiskModel& m, const DeclTable& decls);

}  // namespace safectrl
