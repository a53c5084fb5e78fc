#include "safectrl/controller.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "scan.hpp"

namespace safectrl {

namespace {

// Variables the extracted guards range over: the phase variables plus every
// non-bookkeeping variable some generated (non-idle) command guard reads.
void relevant_vars(const GeneratedModel& g, std::vector<std::string>& monitored,
                   std::vector<std::string>& phases) {
  std::set<std::string> phase_set;
  for (const auto& f : g.risk.factors) phase_set.insert(f.phase_var());
  std::set<std::string> skip{g.cfg.token_var, g.cfg.turn_var};
  // Variables read only through the turn guard's final/mishap test would pin
  // production bookkeeping into every rule; the controller never acts in
  // final or mishap states, so they carry no information for rule choice.
  const Expr* fin = g.model.find_formula("final");
  std::set<int> final_vars;
  if (fin) {
    std::vector<int> fv;
    collect_vars(*fin, fv);
    final_vars.insert(fv.begin(), fv.end());
  }

  std::set<int> elsewhere;  // vars read via detectors, causal factors, sf
  auto add_text = [&](const std::string& text) {
    if (text.empty()) return;
    Expr e = parse_model_expr(text, g.model);
    std::vector<int> vs;
    collect_vars(e, vs);
    elsewhere.insert(vs.begin(), vs.end());
  };
  for (const auto& f : g.risk.factors) {
    if (!f.detected_by.empty()) {
      const MitigationOption* d = g.risk.find_mode(f.detected_by);
      if (d) add_text(d->guard_text);
    }
    for (const auto* o : g.risk.mitigations(f)) {
      add_text(o->cf_text);
      for (const auto& [var, rhs] : o->updates) {
        add_text(var + "=" + rhs);
      }
    }
    for (const auto* o : g.risk.resumptions(f)) {
      add_text(o->cf_text);
      for (const auto& [var, rhs] : o->updates) add_text(var + "=" + rhs);
    }
  }
  int sm = g.model.decls.var_index(g.cfg.safmod_var);
  if (sm >= 0) elsewhere.insert(sm);
  for (const auto& v : g.cfg.activity_vars) {
    int k = g.model.decls.var_index(v);
    if (k >= 0) elsewhere.insert(k);
  }

  std::set<std::string> mon;
  for (int k : elsewhere) {
    const std::string& name = g.model.decls.vars[std::size_t(k)].name;
    if (skip.count(name) || phase_set.count(name)) continue;
    mon.insert(name);
  }
  monitored.assign(mon.begin(), mon.end());
  phases.assign(phase_set.begin(), phase_set.end());
}

}  // namespace

ControllerTable extract_controller(const ExplicitModel& chain, const GeneratedModel& g) {
  ControllerTable t;
  relevant_vars(g, t.monitored, t.phase_vars);

  std::set<std::string> ctl_labels;
  for (const auto& gc : g.generated)
    if (gc.stage != CmdStage::Idle) ctl_labels.insert(gc.label);

  auto var_index = [&](const std::string& name) {
    int k = chain.decls.var_index(name);
    if (k < 0) throw ModelError("model lacks variable " + name);
    return std::size_t(k);
  };

  std::set<std::string> controlled;
  std::map<std::string, ControllerRule> by_guard;  // projection key -> rule

  for (std::uint32_t s = 0; s < chain.num_states(); ++s) {
    for (const auto& a : chain.trans[s].actions) {
      if (!ctl_labels.count(a.label)) continue;
      if (a.succ.size() != 1 || std::abs(a.succ[0].second - 1.0) > 1e-9)
        throw ModelError("controller transition " + a.label + " branches probabilistically");
      const State& src = chain.states[s];
      const State& dst = chain.states[a.succ[0].first];

      ControllerRule r;
      r.event = a.label;
      for (const auto& v : t.monitored) r.process_guard.emplace_back(v, src.v[var_index(v)]);
      for (const auto& v : t.phase_vars) r.risk_guard.emplace_back(v, src.v[var_index(v)]);
      for (std::size_t k = 0; k < chain.decls.vars.size(); ++k) {
        if (src.v[k] == dst.v[k]) continue;
        const std::string& name = chain.decls.vars[k].name;
        if (name == g.cfg.token_var || name == g.cfg.turn_var) continue;
        bool is_phase =
            std::find(t.phase_vars.begin(), t.phase_vars.end(), name) != t.phase_vars.end();
        if (is_phase)
          r.phase_updates.emplace_back(name, dst.v[k]);
        else
          r.outputs.emplace_back(name, dst.v[k]);
      }
      if (r.outputs.empty() && r.phase_updates.empty()) continue;  // pure token pass

      std::string key;
      for (const auto& [n, v] : r.process_guard) key += n + "=" + std::to_string(v) + ";";
      for (const auto& [n, v] : r.risk_guard) key += n + "=" + std::to_string(v) + ";";
      auto it = by_guard.find(key);
      if (it != by_guard.end()) {
        const ControllerRule& prev = it->second;
        if (prev.event != r.event || prev.outputs != r.outputs ||
            prev.phase_updates != r.phase_updates)
          throw ModelError("two distinct rules share guard (" + prev.event + " vs " + r.event +
                           ")");
        continue;
      }
      for (const auto& [n, _] : r.outputs) controlled.insert(n);
      by_guard.emplace(key, std::move(r));
    }
  }

  t.controlled.assign(controlled.begin(), controlled.end());
  for (auto& [_, r] : by_guard) t.rules.push_back(std::move(r));
  std::sort(t.rules.begin(), t.rules.end(), [](const ControllerRule& a, const ControllerRule& b) {
    if (a.event != b.event) return a.event < b.event;
    return a.risk_guard < b.risk_guard ||
           (a.risk_guard == b.risk_guard && a.process_guard < b.process_guard);
  });

  // Category tables for consumers of the file format.
  for (const auto& [name, v] : chain.decls.constants)
    if (v.type == Value::Type::Int) t.categories["const"][name] = v.i;
  return t;
}

RuntimeState initial_runtime(const ControllerTable& t, const GeneratedModel& g) {
  RuntimeState rt;
  for (const auto& p : t.phase_vars) {
    const VarDecl* d = g.model.decls.find_var(p);
    rt.phases[p] = d ? d->init : 0;
  }
  return rt;
}

StepResult step(const ControllerTable& t, RuntimeState& rt,
                const std::map<std::string, std::int64_t>& snapshot) {
  StepResult out;
  for (const auto& v : t.monitored)
    if (!snapshot.count(v)) throw ModelError("snapshot lacks monitored variable " + v);

  // Wake up only when something changed since the last invocation.
  if (rt.primed && rt.last_snapshot == snapshot) return out;
  rt.primed = true;

  std::map<std::string, std::int64_t> view = snapshot;
  // Fire to quiescence; the phase machine is acyclic within one handling
  // step, so the 64-round cap only guards against a corrupt table.
  for (int round = 0; round < 64; ++round) {
    const ControllerRule* hit = nullptr;
    for (const auto& r : t.rules) {
      bool ok = true;
      for (const auto& [n, v] : r.process_guard)
        if (view.at(n) != v) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (const auto& [n, v] : r.risk_guard)
        if (rt.phases.at(n) != v) {
          ok = false;
          break;
        }
      if (!ok) continue;
      if (hit) throw ModelError("two rules enabled simultaneously: " + hit->event + " and " + r.event);
      hit = &r;
    }
    if (!hit) break;
    Fire fire;
    fire.event = hit->event;
    for (const auto& [n, v] : hit->outputs) {
      view[n] = v;
      fire.outputs.emplace_back(n, v);
    }
    for (const auto& [n, v] : hit->phase_updates) rt.phases[n] = v;
    fire.phases = rt.phases;
    out.fires.push_back(std::move(fire));
    if (round == 63) throw ModelError("controller step did not quiesce");
  }
  rt.last_snapshot = view;
  return out;
}

std::string print_controller(const ControllerTable& t) {
  std::ostringstream os;
  auto list = [&](const char* key, const std::vector<std::string>& xs) {
    os << key;
    for (const auto& x : xs) os << " " << x;
    os << "\n";
  };
  list("monitored", t.monitored);
  list("controlled", t.controlled);
  list("phases", t.phase_vars);
  for (const auto& [table, entries] : t.categories) {
    os << "categories " << table;
    for (const auto& [n, v] : entries) os << " " << n << "=" << v;
    os << "\n";
  }
  for (const auto& r : t.rules) {
    os << "rule " << r.event << " |";
    for (const auto& [n, v] : r.process_guard) os << " " << n << "=" << v;
    os << " |";
    for (const auto& [n, v] : r.risk_guard) os << " " << n << "=" << v;
    os << " ->";
    for (const auto& [n, v] : r.outputs) os << " " << n << ":=" << v;
    os << " /";
    for (const auto& [n, v] : r.phase_updates) os << " " << n << ":=" << v;
    os << "\n";
  }
  return os.str();
}

ControllerTable parse_controller(const std::string& text) {
  ControllerTable t;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = split(line);
    if (toks.empty()) continue;
    if (toks[0] == "monitored") {
      t.monitored.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "controlled") {
      t.controlled.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "phases") {
      t.phase_vars.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "categories") {
      for (std::size_t k = 2; k < toks.size(); ++k) {
        auto p = toks[k].find('=');
        t.categories[toks[1]][toks[k].substr(0, p)] = std::stoll(toks[k].substr(p + 1));
      }
    } else if (toks[0] == "rule") {
      ControllerRule r;
      r.event = toks[1];
      std::size_t k = 2;
      if (k < toks.size() && toks[k] == "|") ++k;
      while (k < toks.size() && toks[k] != "|") {
        auto p = toks[k].find('=');
        r.process_guard.emplace_back(toks[k].substr(0, p), std::stoll(toks[k].substr(p + 1)));
        ++k;
      }
      if (k < toks.size() && toks[k] == "|") ++k;
      while (k < toks.size() && toks[k] != "->") {
        auto p = toks[k].find('=');
        r.risk_guard.emplace_back(toks[k].substr(0, p), std::stoll(toks[k].substr(p + 1)));
        ++k;
      }
      if (k < toks.size() && toks[k] == "->") ++k;
      while (k < toks.size() && toks[k] != "/") {
        auto p = toks[k].find(":=");
        r.outputs.emplace_back(toks[k].substr(0, p), std::stoll(toks[k].substr(p + 2)));
        ++k;
      }
      if (k < toks.size() && toks[k] == "/") ++k;
      while (k < toks.size()) {
        auto p = toks[k].find(":=");
        r.phase_updates.emplace_back(toks[k].substr(0, p), std::stoll(toks[k].substr(p + 2)));
        ++k;
      }
      t.rules.push_back(std::move(r));
    } else {
      throw ParseError("unknown controller-table record: " + toks[0], lineno, 1);
    }
  }
  return t;
}

OverheadEstimate overhead_estimate(const OverheadInputs& in) {
  OverheadEstimate out;
  double dmin = in.mode_switch + in.activity_switch + in.finalise + in.mode_resume +
                in.activity_resume;
  double dmax = dmin + double(in.repetition) * in.safety_function + in.function_off;
  double slot = 0.0, slowest = 0.0;
  for (const auto& [f, d] : in.detection) {
    if (d < 0) throw ModelError("negative duration for " + f);
    out.handling_min[f] = dmin;
    out.handling_max[f] = dmax;
    slot += d;
    slowest = std::max(slowest, d);
  }
  out.sequential_slot = slot;
  out.parallel_rate = slowest > 0 ? 1.0 / slowest : 0.0;
  return out;
}

}  // namespace safectrl
