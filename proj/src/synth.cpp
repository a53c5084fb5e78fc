#include "safectrl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "safectrl/rng.hpp"
#include "scan.hpp"

namespace safectrl {

namespace {

using detail::Lexer;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

SynthesisQuery parse_query(const std::string& text) {
  SynthesisQuery q;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto cpos = line.find("//");
    if (cpos != std::string::npos) line = line.substr(0, cpos);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto rest_after_colon = [&]() {
      auto p = line.find(':');
      if (p == std::string::npos) throw ParseError("expected ':'", lineno, 1);
      return trim(line.substr(p + 1));
    };
    if (key == "setting") {
      std::string eq, val;
      ls >> eq >> val;
      q.setting = val == "pdtmc" ? SynthSetting::Pdtmc : SynthSetting::Mdp;
    } else if (key == "seed") {
      std::string eq;
      ls >> eq >> q.seed;
    } else if (key == "budget") {
      std::string eq;
      ls >> eq >> q.budget;
    } else if (key == "horizon") {
      std::string eq;
      ls >> eq >> q.horizon;
    } else if (key == "risk_scale") {
      std::string factor, eq;
      double v;
      ls >> factor >> eq >> v;
      q.risk_scale[factor] = v;
    } else if (key == "objective") {
      Objective o;
      std::string dir;
      ls >> o.name >> dir >> o.weight;
      o.direction = dir == "min" ? Direction::Minimize : Direction::Maximize;
      o.query_text = rest_after_colon();
      q.objectives.push_back(o);
    } else if (key == "constraint") {
      Constraint c;
      ls >> c.name;
      c.query_text = rest_after_colon();
      q.constraints.push_back(c);
    } else if (key == "param") {
      ParamDomain d;
      std::string in;
      ls >> d.name >> in;
      std::string rest;
      std::getline(ls, rest);
      rest = trim(rest);
      if (!rest.empty() && rest[0] == '{') {
        Lexer lx(rest);
        lx.consume("{");
        while (true) {
          d.values.push_back(lx.number());
          if (!lx.try_consume(",")) break;
        }
        lx.consume("}");
      } else if (!rest.empty() && rest[0] == '[') {
        d.numeric = true;
        Lexer lx(rest);
        lx.consume("[");
        d.lo = lx.number().as_real();
        lx.consume(",");
        d.hi = lx.number().as_real();
        lx.consume("]");
        if (lx.try_consume("grid")) d.grid = int(lx.number().as_int());
      } else {
        throw ParseError("param expects {v,...} or [lo,hi]", lineno, 1);
      }
      q.domains.push_back(std::move(d));
    } else {
      throw ParseError("unknown query key: " + key, lineno, 1);
    }
  }
  for (const auto& o : q.objectives)
    if (o.weight <= 0) throw ModelError("objective weight must be positive: " + o.name);
  for (const auto& d : q.domains)
    if (!d.numeric && d.values.empty()) throw ModelError("empty domain for " + d.name);
  return q;
}

namespace {

// Scalarisation plan for the MDP setting: all reward objectives must share
// one accumulation form, and any probability objective must target the same
// goal the reward objectives run to.
struct ScalarPlan {
  RewardObj form = RewardObj::Cumulative;
  long bound = -1;
  Pctl goal;  // reach form only
  OptMode mode = OptMode::Max;
};

ExplicitModel with_scalar_reward(const ExplicitModel& x, const SynthesisQuery& q,
                                 const std::vector<PropertyQuery>& parsed, ScalarPlan& plan) {
  bool have_form = false;
  bool all_min = true, all_max = true;
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    const Pctl& f = parsed[k].root;
    if (q.objectives[k].direction == Direction::Minimize)
      all_max = false;
    else
      all_min = false;
    if (f->kind == PctlKind::Reward) {
      if (!have_form) {
        plan.form = f->robj;
        plan.bound = f->step_bound;
        if (f->robj == RewardObj::ReachGoal) plan.goal = f->left;
        have_form = true;
      } else if (f->robj != plan.form || f->step_bound != plan.bound) {
        throw ModelError("scalarised reward objectives must share one accumulation form");
      }
    } else if (f->kind == PctlKind::Prob) {
      if (f->path != PathKind::Finally)
        throw ModelError("probability objectives must have the form P[ F goal ]");
    } else {
      throw ModelError("objective must be a P or R query: " + q.objectives[k].name);
    }
  }
  if (!all_min && !all_max)
    throw ModelError("scalarised objectives must share one optimisation direction");
  plan.mode = all_min ? OptMode::Min : OptMode::Max;

  // Probability objectives need a reach form with a common goal.
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    const Pctl& f = parsed[k].root;
    if (f->kind != PctlKind::Prob) continue;
    if (!have_form) {
      plan.form = RewardObj::ReachGoal;
      plan.goal = f->left;
      have_form = true;
    } else if (plan.form != RewardObj::ReachGoal) {
      throw ModelError("cannot mix P[F goal] with cumulative reward objectives");
    }
  }

  ExplicitModel y = x;
  y.reward_names.push_back("__scalar");
  std::vector<bool> goal_set;
  if (plan.form == RewardObj::ReachGoal) goal_set = sat_states(y, plan.goal);
  for (std::uint32_t s = 0; s < y.num_states(); ++s) {
    for (auto& a : y.trans[s].actions) {
      double w = 0.0;
      for (std::size_t k = 0; k < parsed.size(); ++k) {
        const Pctl& f = parsed[k].root;
        if (f->kind == PctlKind::Reward) {
          int rk = x.reward_index(f->reward_name);
          if (rk < 0) throw ModelError("unknown reward structure: " + f->reward_name);
          w += q.objectives[k].weight * a.rewards[std::size_t(rk)];
        } else {
          // Stepping into the goal pays the probability weight exactly once,
          // because accumulation stops at the goal.
          double into = 0.0;
          for (const auto& [t, p] : a.succ)
            if (goal_set[t]) into += p;
          w += q.objectives[k].weight * into;
        }
      }
      a.rewards.push_back(w);
    }
  }
  return y;
}

}  // namespace

SolutionPoint synth_mdp(const ExplicitModel& mdp, const SynthesisQuery& q, const McOptions& opts) {
  if (q.objectives.empty()) throw ModelError("no objectives given");
  std::vector<PropertyQuery> parsed;
  for (const auto& o : q.objectives) parsed.push_back(parse_property(o.query_text, mdp));

  SolutionPoint sol;
  SynthResult sr;
  if (parsed.size() == 1) {
    sr = synth_optimal_policy(mdp, parsed[0], opts);
  } else {
    ScalarPlan plan;
    ExplicitModel scal = with_scalar_reward(mdp, q, parsed, plan);
    PropertyQuery obj;
    auto n = std::make_shared<PctlNode>();
    n->kind = PctlKind::Reward;
    n->reward_name = "__scalar";
    n->robj = plan.form;
    n->step_bound = plan.bound;
    n->left = plan.goal;
    n->mode = plan.mode;
    n->quantitative = true;
    obj.root = n;
    obj.source = "scalarised objective";
    sr = synth_optimal_policy(scal, obj, opts);
  }
  sol.policy = sr.policy;

  ExplicitModel chain = induced_dtmc(mdp, sol.policy);
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    CheckResult r = check_query(chain, parsed[k], opts);
    sol.objectives.push_back(r.value);
  }
  for (const auto& c : q.constraints) {
    PropertyQuery pq = parse_property(c.query_text, chain);
    CheckResult r = check_query(chain, pq, opts);
    bool holds = r.is_boolean ? r.truth : false;
    sol.verdicts.push_back({c.name, holds});
    sol.feasible = sol.feasible && holds;
  }
  return sol;
}

PdtmcObjectives evaluate_pdtmc_point(const ExplicitModel& dtmc, const GeneratedModel& g,
                                     const SynthesisQuery& q, const McOptions& opts) {
  PdtmcObjectives out;
  auto total = [&](const std::string& name) {
    int rk = dtmc.reward_index(name);
    if (rk < 0) throw ModelError("generated model lacks reward structure " + name);
    std::vector<double> v = expected_reward(dtmc, rk, RewardObj::CumulativeBounded, q.horizon,
                                            nullptr, OptMode::Exact, opts);
    return v[dtmc.initial];
  };
  double prod = total("prod");
  double denom = total("disruption") + total("effort");
  if (denom == 0.0) {
    out.productivity = prod;
    out.zero_denominator = true;
  } else {
    out.productivity = prod / denom;
  }
  out.nuisance = total("nuisance");
  double risk = 0.0;
  for (const auto& f : g.risk.factors) {
    double s = 1.0;
    auto it = q.risk_scale.find(f.id);
    if (it != q.risk_scale.end()) s = it->second;
    risk += s * total("risk_" + f.id);
  }
  out.risk = risk;
  return out;
}

std::vector<std::size_t> pareto_filter(const std::vector<std::vector<double>>& points,
                                       const std::vector<Direction>& directions) {
  auto dominates = [&](const std::vector<double>& a, const std::vector<double>& b) {
    bool strict = false;
    for (std::size_t k = 0; k < directions.size(); ++k) {
      double x = directions[k] == Direction::Maximize ? a[k] : -a[k];
      double y = directions[k] == Direction::Maximize ? b[k] : -b[k];
      if (x < y) return false;
      if (x > y) strict = true;
    }
    return strict;
  };
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j)
      if (j != i && dominates(points[j], points[i])) dominated = true;
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

namespace {

struct Candidate {
  std::map<std::string, Value> params;
};

bool operator<(const Candidate& a, const Candidate& b) {
  auto key = [](const Candidate& c) {
    std::string s;
    for (const auto& [n, v] : c.params) s += n + "=" + v.str() + ";";
    return s;
  };
  return key(a) < key(b);
}

std::vector<ParamDomain> effective_domains(const GeneratedModel& g, const SynthesisQuery& q) {
  std::vector<ParamDomain> doms;
  std::set<std::string> covered;
  for (const auto& d : q.domains) {
    doms.push_back(d);
    covered.insert(d.name);
  }
  for (const auto& [name, vals] : g.dp_domains) {
    if (covered.count(name)) continue;
    ParamDomain d;
    d.name = name;
    d.values = vals;
    doms.push_back(d);
    covered.insert(name);
  }
  for (const auto& [name, type] : g.model.decls.parameters) {
    (void)type;
    if (!covered.count(name))
      throw ModelError("parameter " + name + " has no declared domain in the query");
  }
  // Deterministic order.
  std::sort(doms.begin(), doms.end(),
            [](const ParamDomain& a, const ParamDomain& b) { return a.name < b.name; });
  return doms;
}

std::vector<Value> domain_values(const ParamDomain& d) {
  if (!d.numeric) return d.values;
  std::vector<Value> vals;
  int n = std::max(2, d.grid);
  for (int k = 0; k < n; ++k)
    vals.push_back(Value::real(d.lo + (d.hi - d.lo) * double(k) / double(n - 1)));
  return vals;
}

}  // namespace

std::vector<SolutionPoint> synth_pdtmc(const GeneratedModel& g, const SynthesisQuery& q,
                                       const McOptions& opts) {
  if (q.setting != SynthSetting::Pdtmc) throw ModelError("query setting is not pdtmc");
  std::vector<ParamDomain> doms = effective_domains(g, q);
  std::vector<std::vector<Value>> vals;
  std::size_t space = 1;
  for (const auto& d : doms) {
    vals.push_back(domain_values(d));
    space *= vals.back().size();
  }

  std::string last_failure = "deadlock-freedom";
  std::vector<SolutionPoint> evaluated;
  std::set<Candidate> seen;

  auto evaluate = [&](const Candidate& c) {
    if (seen.count(c)) return;
    seen.insert(c);
    SolutionPoint sp;
    sp.params = c.params;
    ExplicitModel chain;
    try {
      chain = expand(g.model, c.params);
    } catch (const ModelError& e) {
      sp.feasible = false;
      last_failure = std::string("expansion: ") + e.what();
      evaluated.push_back(std::move(sp));
      return;
    }
    // Hard constraint: no deadlock outside final states.
    const Expr* fin = g.model.find_formula("final");
    Expr fexpr = fin ? *fin : expr_false();
    DeadlockSets dl = deadlock_states(chain, fexpr);
    if (!dl.early.empty()) {
      sp.feasible = false;
      sp.verdicts.push_back({"deadlock-freedom", false});
      last_failure = "deadlock-freedom";
      evaluated.push_back(std::move(sp));
      return;
    }
    sp.verdicts.push_back({"deadlock-freedom", true});
    for (const auto& cons : q.constraints) {
      PropertyQuery pq = parse_property(cons.query_text, chain);
      CheckResult r = check_query(chain, pq, opts);
      bool holds = r.is_boolean ? r.truth : false;
      sp.verdicts.push_back({cons.name, holds});
      if (!holds) {
        sp.feasible = false;
        last_failure = cons.name;
      }
    }
    PdtmcObjectives obj = evaluate_pdtmc_point(chain, g, q, opts);
    sp.objectives = {obj.productivity, obj.nuisance, obj.risk};
    sp.zero_denominator = obj.zero_denominator;
    evaluated.push_back(std::move(sp));
  };

  auto nth_candidate = [&](std::size_t n) {
    Candidate c;
    for (std::size_t k = 0; k < doms.size(); ++k) {
      c.params[doms[k].name] = vals[k][n % vals[k].size()];
      n /= vals[k].size();
    }
    return c;
  };

  if (space <= q.budget) {
    for (std::size_t n = 0; n < space; ++n) evaluate(nth_candidate(n));
  } else {
    // Seeded sampling followed by (mu+lambda) mutation hill-climbing on the
    // current nondominated set.
    Rng rng(q.seed);
    std::size_t explore = q.budget / 2;
    while (seen.size() < explore) evaluate(nth_candidate(std::size_t(rng.below(space))));
    std::vector<Direction> dirs{Direction::Maximize, Direction::Minimize, Direction::Minimize};
    while (seen.size() < q.budget) {
      std::vector<std::vector<double>> pts;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < evaluated.size(); ++i) {
        if (!evaluated[i].feasible) continue;
        pts.push_back(evaluated[i].objectives);
        idx.push_back(i);
      }
      if (pts.empty()) {
        evaluate(nth_candidate(std::size_t(rng.below(space))));
        continue;
      }
      std::vector<std::size_t> front = pareto_filter(pts, dirs);
      bool progressed = false;
      for (std::size_t fi : front) {
        if (seen.size() >= q.budget) break;
        Candidate c;
        c.params = evaluated[idx[fi]].params;
        std::size_t which = std::size_t(rng.below(doms.size()));
        const auto& dv = vals[which];
        c.params[doms[which].name] = dv[std::size_t(rng.below(dv.size()))];
        if (!seen.count(c)) progressed = true;
        evaluate(c);
      }
      if (!progressed) evaluate(nth_candidate(std::size_t(rng.below(space))));
    }
  }

  std::vector<SolutionPoint> feasible;
  for (auto& sp : evaluated)
    if (sp.feasible) feasible.push_back(sp);
  if (feasible.empty())
    throw ModelError("no feasible candidate; last exclusion: " + last_failure);

  std::sort(feasible.begin(), feasible.end(), [](const SolutionPoint& a, const SolutionPoint& b) {
    Candidate ca{a.params}, cb{b.params};
    return ca < cb;
  });
  std::vector<std::vector<double>> pts;
  for (const auto& sp : feasible) pts.push_back(sp.objectives);
  std::vector<Direction> dirs{Direction::Maximize, Direction::Minimize, Direction::Minimize};
  std::vector<std::size_t> keep = pareto_filter(pts, dirs);
  std::vector<SolutionPoint> front;
  for (std::size_t i : keep) front.push_back(feasible[i]);
  return front;
}

}  // namespace safectrl
