#include "safectrl/designspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace safectrl {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string token_pass(const GenerationConfig& cfg) {
  return "(" + cfg.token_var + "'=mod(" + cfg.token_var + "+1,ag))&(" + cfg.turn_var + "'=" +
         cfg.token_var + "+1)";
}

std::string phase(const RiskFactor& f) { return f.phase_var(); }

// Most permissive category: the one with the largest total risk-reduction
// distance to all others.
std::string most_permissive(const DistanceMatrix& m) {
  std::string best;
  double best_sum = 0.0;
  for (const auto& c : m.categories) {
    double sum = 0.0;
    for (const auto& d : m.categories) sum += grad(m, c, d);
    if (best.empty() || sum > best_sum) {
      best = c;
      best_sum = sum;
    }
  }
  return best;
}

std::string detector_of(const RiskModel& rm, const RiskFactor& f) {
  if (f.detected_by.empty()) throw ModelError("factor " + f.id + " lacks a detector");
  const MitigationOption* d = rm.find_mode(f.detected_by);
  if (!d || d->guard_text.empty())
    throw ModelError("detector mode of factor " + f.id + " has no guard");
  return d->guard_text;
}

bool handled(const RiskFactor& f) { return !f.detected_by.empty(); }

std::string causal_factor(const RiskModel& rm, const RiskFactor& f, const MitigationOption& o) {
  if (!o.cf_text.empty()) return o.cf_text;
  return detector_of(rm, f);
}

std::string sf_predicate(const MitigationOption& o) {
  std::string s;
  for (std::size_t k = 0; k < o.updates.size(); ++k) {
    if (k) s += " & ";
    s += o.updates[k].first + "=" + o.updates[k].second;
  }
  return s;
}

std::string sf_assignments(const MitigationOption& o) {
  std::string s;
  for (std::size_t k = 0; k < o.updates.size(); ++k) {
    if (k) s += "&";
    s += "(" + o.updates[k].first + "'=" + o.updates[k].second + ")";
  }
  return s;
}

// Disjunction of the safety-function predicates of all mitigation options.
std::string sf_any(const RiskModel& rm, const RiskFactor& f) {
  std::string s;
  for (const auto* o : rm.mitigations(f)) {
    if (o->updates.empty()) continue;
    if (!s.empty()) s += " | ";
    s += sf_predicate(*o);
  }
  return s;
}

std::string prevents_ctx(const RiskModel& rm, const RiskFactor& f) {
  std::string s;
  for (const auto& q : f.prevents) {
    const RiskFactor* g = rm.find_factor(q);
    s += " & (" + phase(*g) + "!=act)";
  }
  return s;
}

std::string requires_ctx(const RiskModel& rm, const RiskFactor& f) {
  std::string s;
  for (const auto& q : f.requires_occ) {
    const RiskFactor* g = rm.find_factor(q);
    std::string p = phase(*g);
    s += " & (" + p + "=act | " + p + "=mit1 | " + p + "=mit2 | " + p + "=mit | " + p + "=res)";
  }
  return s;
}

std::string dp_mit(const RiskFactor& f, const MitigationOption& o, bool pdtmc) {
  return pdtmc ? " & dp" + f.id + "mit=" + f.id + o.name : "";
}

std::string dp_res(const RiskFactor& f, const MitigationOption& o, bool pdtmc) {
  return pdtmc ? " & dp" + f.id + "res=" + f.id + o.name : "";
}

ResumeCandidate option_target(const MitigationOption& o) {
  ResumeCandidate c;
  c.activity = o.target_activity;
  c.safmod = o.target_safmod;
  return c;
}

// Peer abstraction cases for resumption commands: every other handled factor
// is either in its unsafe phases, in its safe handling phases, or inactive.
enum class PeerCase { Unsafe, Handling, Inactive };

void enumerate_peer_cases(std::size_t n, std::vector<std::vector<PeerCase>>& out) {
  std::vector<PeerCase> cur(n, PeerCase::Inactive);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == n) {
      out.push_back(cur);
      return;
    }
    for (PeerCase c : {PeerCase::Unsafe, PeerCase::Handling, PeerCase::Inactive}) {
      cur[k] = c;
      rec(k + 1);
    }
  };
  rec(0);
}

std::string peer_conj(const RiskFactor& g, PeerCase c) {
  std::string p = phase(g);
  switch (c) {
    case PeerCase::Unsafe:
      return "(" + p + "=act | " + p + "=mit1 | " + p + "=mit2)";
    case PeerCase::Handling:
      return "(" + p + "=mit | " + p + "=res)";
    case PeerCase::Inactive:
      return "(" + p + "=inact)";
  }
  return "";
}

}  // namespace

std::string mitigation_target(const std::string& cur, const std::string& target,
                              const DistanceMatrix& m) {
  return grad(m, cur, target) >= 0.0 ? target : cur;
}

ResumeCandidate resumption_target(const std::vector<ResumeCandidate>& candidates,
                                  const DistanceMatrix& act, const DistanceMatrix& safmod) {
  ResumeCandidate out;
  std::string act_top = act.categories.empty() ? "" : most_permissive(act);
  std::string sm_top = safmod.categories.empty() ? "" : most_permissive(safmod);
  double best_act = 0.0, best_sm = 0.0;
  for (const auto& c : candidates) {
    if (c.activity) {
      double d = grad(act, act_top, *c.activity);
      if (!out.activity || d > best_act) {
        out.activity = c.activity;
        best_act = d;
      }
    }
    if (c.safmod) {
      double d = grad(safmod, sm_top, *c.safmod);
      if (!out.safmod || d > best_sm) {
        out.safmod = c.safmod;
        best_sm = d;
      }
    }
  }
  return out;
}

std::vector<std::string> gen_risk_predicates(const RiskModel& rm) {
  std::vector<std::string> out;
  for (const auto& f : rm.factors) {
    if (f.guard_text.empty()) throw ModelError("factor " + f.id + " has no guard");
    out.push_back("formula RCE_" + f.id + " = (" + f.guard_text + ")" + prevents_ctx(rm, f) + ";");
    if (handled(f))
      out.push_back("formula CE_" + f.id + " = (" + detector_of(rm, f) + ")" +
                    requires_ctx(rm, f) + prevents_ctx(rm, f) + ";");
  }
  return out;
}

std::vector<std::string> gen_detection(const RiskModel& rm, const GenerationConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& f : rm.factors) {
    if (!handled(f)) continue;
    std::string p = phase(f);
    out.push_back("[si_" + f.id + "act] " + cfg.ok_guard + " & !(" + p + "=act | " + p +
                  "=mit1 | " + p + "=mit2 | " + p + "=mis) & CE_" + f.id + " -> (" + p +
                  "'=act);");
  }
  return out;
}

std::string gen_idle(const RiskModel& rm, const GenerationConfig& cfg, bool pdtmc) {
  (void)pdtmc;
  std::string g = cfg.ok_guard;
  for (const auto& f : rm.factors) {
    if (!handled(f)) continue;
    std::string p = phase(f);
    g += " & !RCE_" + f.id;
    g += " & (" + p + "=inact | " + p + "=mit | " + p + "=res)";
  }
  return "[si_idle] " + g + " -> " + token_pass(cfg) + ";";
}

std::vector<std::string> gen_controller_module(const RiskModel& rm, const GenerationConfig& cfg,
                                               bool pdtmc, std::vector<GeneratedCommand>* info) {
  std::vector<std::string> out;
  auto note = [&](const std::string& label, const std::string& fid, int opt, bool res,
                  CmdStage st) {
    if (info) info->push_back({label, fid, opt, res, st});
  };

  for (const auto& f : rm.factors) {
    if (!handled(f)) continue;
    auto mits = rm.mitigations(f);
    auto ress = rm.resumptions(f);
    if (mits.empty() || ress.empty())
      throw ModelError("factor " + f.id + " needs at least one mitigation and one resumption");
    std::string p = phase(f);
    std::string sfany = sf_any(rm, f);

    // Detection.
    {
      std::string lbl = "si_" + f.id + "act";
      out.push_back("[" + lbl + "] " + cfg.ok_guard + " & !(" + p + "=act | " + p + "=mit1 | " +
                    p + "=mit2 | " + p + "=mis) & CE_" + f.id + " -> (" + p + "'=act);");
      note(lbl, f.id, -1, false, CmdStage::Detection);
    }

    for (std::size_t ok = 0; ok < mits.size(); ++ok) {
      const MitigationOption& o = *mits[ok];
      std::string dp = dp_mit(f, o, pdtmc);
      std::string kappa = causal_factor(rm, f, o);

      // Safety-mode switch (act -> mit1), one command per current mode.
      std::string sw_lbl = "si_" + f.id + o.name + "safmod";
      if (o.target_safmod) {
        for (const auto& cur : rm.safmod.categories) {
          std::string next = mitigation_target(cur, *o.target_safmod, rm.safmod);
          std::string upd = next == cur ? "" : "(" + cfg.safmod_var + "'=" + next + ")&";
          out.push_back("[" + sw_lbl + "] " + cfg.ok_guard + " & " + p + "=act" + dp + " & " +
                        cfg.safmod_var + "=" + cur + " -> " + upd + "(" + p + "'=mit1);");
          note(sw_lbl, f.id, int(ok), false, CmdStage::ModeSwitch);
        }
      } else {
        out.push_back("[" + sw_lbl + "] " + cfg.ok_guard + " & " + p + "=act" + dp + " -> (" + p +
                      "'=mit1);");
        note(sw_lbl, f.id, int(ok), false, CmdStage::ModeSwitch);
      }

      // Activity switch (mit1 -> mit2), one command per activity tuple.
      std::string halt_lbl = "s_" + f.id + o.name + "halt";
      if (o.target_activity && !cfg.activity_vars.empty()) {
        std::vector<std::size_t> idx(cfg.activity_vars.size(), 0);
        const auto& cats = rm.act.categories;
        while (true) {
          std::string guard, upd;
          for (std::size_t v = 0; v < cfg.activity_vars.size(); ++v) {
            const std::string& cur = cats[idx[v]];
            guard += " & " + cfg.activity_vars[v] + "=" + cur;
            std::string next = mitigation_target(cur, *o.target_activity, rm.act);
            if (next != cur) upd += "(" + cfg.activity_vars[v] + "'=" + next + ")&";
          }
          out.push_back("[" + halt_lbl + "] " + cfg.ok_guard + " & " + p + "=mit1" + dp + guard +
                        " -> " + upd + "(" + p + "'=mit2);");
          note(halt_lbl, f.id, int(ok), false, CmdStage::ActivitySwitch);
          std::size_t v = 0;
          while (v < idx.size() && ++idx[v] == cats.size()) idx[v++] = 0;
          if (v == idx.size()) break;
        }
      } else {
        out.push_back("[" + halt_lbl + "] " + cfg.ok_guard + " & " + p + "=mit1" + dp + " -> (" +
                      p + "'=mit2);");
        note(halt_lbl, f.id, int(ok), false, CmdStage::ActivitySwitch);
      }

      // Safety function (runs in mit2 while the causal factor persists; the
      // process gets the token back to be able to react).
      std::string fun_lbl = "si_" + f.id + o.name + "fun";
      if (!o.updates.empty()) {
        std::string sfp = sf_predicate(o);
        out.push_back("[" + fun_lbl + "] " + cfg.ok_guard + " & " + p + "=mit2" + dp + " & (" +
                      kappa + ") & !(" + sfp + ") -> " + sf_assignments(o) + "&" +
                      token_pass(cfg) + ";");
        note(fun_lbl, f.id, int(ok), false, CmdStage::SafetyFunction);
        out.push_back("[" + fun_lbl + "] " + cfg.ok_guard + " & " + p + "=mit2" + dp + " & (" +
                      kappa + ") & (" + sfp + ") -> " + token_pass(cfg) + ";");
        note(fun_lbl, f.id, int(ok), false, CmdStage::SafetyFunction);
      } else {
        out.push_back("[" + fun_lbl + "] " + cfg.ok_guard + " & " + p + "=mit2" + dp + " & (" +
                      kappa + ") -> " + token_pass(cfg) + ";");
        note(fun_lbl, f.id, int(ok), false, CmdStage::SafetyFunction);
      }

      // Mitigation finaliser (mit2 -> mit once the causal factor is gone).
      std::string mit_lbl = "si_" + f.id + "mit";
      out.push_back("[" + mit_lbl + "] " + cfg.ok_guard + " & " + p + "=mit2" + dp + " & !(" +
                    kappa + ") -> (" + p + "'=mit);");
      note(mit_lbl, f.id, int(ok), false, CmdStage::MitigationDone);
    }

    // Peer-case enumeration shared by both resumption stages.
    std::vector<const RiskFactor*> peers;
    for (const auto& g : rm.factors)
      if (g.id != f.id && handled(g)) peers.push_back(&g);
    std::vector<std::vector<PeerCase>> cases;
    enumerate_peer_cases(peers.size(), cases);

    for (std::size_t rk = 0; rk < ress.size(); ++rk) {
      const MitigationOption& r = *ress[rk];
      std::string dp = dp_res(f, r, pdtmc);
      std::string kappa = causal_factor(rm, f, r);
      std::string zeta = detector_of(rm, f);

      // Deactivation of the safety function.
      if (!sfany.empty()) {
        std::string off_lbl = "si_" + f.id + r.name + "fun";
        std::string inv = r.updates.empty() ? "" : sf_assignments(r);
        if (inv.empty())
          throw ModelError("resumption option " + r.name + " of " + f.id +
                           " needs an update to deactivate the safety function");
        out.push_back("[" + off_lbl + "] " + cfg.ok_guard + " & " + p + "=mit" + dp + " & !(" +
                      kappa + ") & (" + sfany + ") -> " + inv + ";");
        note(off_lbl, f.id, int(rk), true, CmdStage::SafetyFunctionOff);
      }

      for (const auto& pc : cases) {
        // Candidates in factor declaration order: every factor in the
        // abstracted risk state contributes its pending requirement.
        std::vector<ResumeCandidate> cands;
        std::string guard;
        for (std::size_t j = 0, pi = 0; j < rm.factors.size(); ++j) {
          const RiskFactor& g = rm.factors[j];
          if (g.id == f.id) {
            cands.push_back(option_target(r));
            continue;
          }
          if (!handled(g)) continue;
          PeerCase c = pc[pi++];
          guard += " & " + peer_conj(g, c);
          if (c == PeerCase::Unsafe) {
            auto gm = rm.mitigations(g);
            if (!gm.empty()) cands.push_back(option_target(*gm.front()));
          } else if (c == PeerCase::Handling) {
            auto gr = rm.resumptions(g);
            if (!gr.empty()) cands.push_back(option_target(*gr.front()));
          }
        }
        ResumeCandidate t = resumption_target(cands, rm.act, rm.safmod);

        std::string nosf = sfany.empty() ? "" : " & !(" + sfany + ")";
        // Safety-mode resumption (mit -> res).
        std::string rs_lbl = "si_" + f.id + r.name + "safmod";
        std::string upd = t.safmod ? "(" + cfg.safmod_var + "'=" + *t.safmod + ")&" : "";
        out.push_back("[" + rs_lbl + "] " + cfg.ok_guard + " & " + p + "=mit" + dp + " & !CE_" +
                      f.id + " & !(" + zeta + ") & !(" + kappa + ")" + guard + nosf + " -> " +
                      upd + "(" + p + "'=res);");
        note(rs_lbl, f.id, int(rk), true, CmdStage::ModeResume);

        // Activity resumption (res -> inact, token release).
        std::string ra_lbl = "s_" + f.id + r.name + "resume";
        std::string aupd;
        if (t.activity)
          for (const auto& v : cfg.activity_vars) aupd += "(" + v + "'=" + *t.activity + ")&";
        out.push_back("[" + ra_lbl + "] " + cfg.ok_guard + " & " + p + "=res" + dp + " & !CE_" +
                      f.id + " & !(" + zeta + ") & !(" + kappa + ")" + guard + nosf + " -> " +
                      aupd + "(" + p + "'=inact)&" + token_pass(cfg) + ";");
        note(ra_lbl, f.id, int(rk), true, CmdStage::ActivityResume);
      }
    }
  }
  return out;
}

std::vector<std::string> gen_rewards(const RiskModel& rm, const GenerationConfig& cfg) {
  std::vector<std::string> out;

  // Mode-dependent risk scaling, derived from the safety-mode gradient: the
  // more a mode reduces risk relative to the most permissive one, the smaller
  // the factor.
  std::map<std::string, double> scale;
  if (!rm.safmod.categories.empty()) {
    std::string top = most_permissive(rm.safmod);
    double lmax = 0.0;
    for (const auto& c : rm.safmod.categories) lmax = std::max(lmax, grad(rm.safmod, top, c));
    for (const auto& c : rm.safmod.categories)
      scale[c] = 1.0 - grad(rm.safmod, top, c) / (lmax + 1.0);
  }

  auto row_labels = [&](const ProfileRow& row) {
    std::vector<std::string> labels{row.action};
    if (!cfg.mishap_prefix.empty()) labels.push_back(cfg.mishap_prefix + row.action);
    return labels;
  };

  for (const auto& f : rm.factors) {
    out.push_back("rewards \"risk_" + f.id + "\"");
    std::string region = handled(f) ? "(RCE_" + f.id + " | CE_" + f.id + ")" : "RCE_" + f.id;
    for (const auto& row : rm.profile) {
      auto it = row.risk.find(f.id);
      if (it == row.risk.end() || it->second.empty() || it->second == "0") continue;
      std::string g = row.guard_text.empty() ? "" : " & (" + row.guard_text + ")";
      for (const auto& label : row_labels(row))
        for (const auto& c : rm.safmod.categories)
          out.push_back("  [" + label + "] !final & " + region + g + " & " + cfg.safmod_var +
                        "=" + c + " : " + fmt(scale[c]) + " * (" + it->second + ") * " +
                        fmt(f.severity) + ";");
    }
    out.push_back("endrewards");
  }

  auto option_reward = [&](const char* name, bool on_fun,
                           const std::string MitigationOption::*field) {
    out.push_back(std::string("rewards \"") + name + "\"");
    for (const auto& f : rm.factors) {
      if (!handled(f)) continue;
      auto mits = rm.mitigations(f);
      for (const auto* o : mits) {
        const std::string& text = (*o).*field;
        if (text.empty()) continue;
        std::string lbl = on_fun ? "si_" + f.id + o->name + "fun" : "si_" + f.id + o->name + "safmod";
        out.push_back("  [" + lbl + "] true : " + text + ";");
      }
    }
    out.push_back("endrewards");
  };
  option_reward("nuisance", true, &MitigationOption::nuisance_text);
  option_reward("disruption", false, &MitigationOption::disruption_text);
  option_reward("effort", true, &MitigationOption::effort_text);

  out.push_back("rewards \"prod\"");
  for (const auto& row : rm.profile) {
    if (row.prod_text.empty() || row.prod_text == "0") continue;
    std::string g = row.guard_prod_text.empty() ? "true" : row.guard_prod_text;
    for (const auto& label : row_labels(row))
      out.push_back("  [" + label + "] " + g + " : " + row.prod_text + ";");
  }
  out.push_back("endrewards");

  // Expected-severity exposure: performing a risky action while the cause
  // truly holds.
  out.push_back("rewards \"sev\"");
  for (const auto& f : rm.factors) {
    for (const auto& row : rm.profile) {
      auto it = row.risk.find(f.id);
      if (it == row.risk.end() || it->second.empty() || it->second == "0") continue;
      for (const auto& label : row_labels(row))
        out.push_back("  [" + label + "] RCE_" + f.id + " : " + fmt(f.severity) + ";");
    }
  }
  out.push_back("endrewards");
  return out;
}

namespace {

std::string decls_fragment(const RiskModel& rm, const GenerationConfig& cfg, bool pdtmc,
                           std::map<std::string, std::vector<Value>>* domains) {
  std::ostringstream os;
  os << "// generated declarations\n";
  os << "const int inact = 0; const int act = 1; const int mit1 = 2; const int mit2 = 3; "
        "const int mit = 4; const int res = 5; const int mis = 6;\n";
  os << "const int ag = " << cfg.actor_count << ";\n";
  for (const auto& [name, v] : rm.constants) os << "const double " << name << " = " << v.str() << ";\n";
  if (pdtmc) {
    for (const auto& f : rm.factors) {
      if (!handled(f)) continue;
      auto emit = [&](const char* kind, const std::vector<const MitigationOption*>& opts) {
        std::string dp = "dp" + f.id + kind;
        for (std::size_t k = 0; k < opts.size(); ++k)
          os << "const int " << f.id << opts[k]->name << " = " << k << ";\n";
        os << "const int " << dp << ";\n";
        if (domains) {
          std::vector<Value> dom;
          for (std::size_t k = 0; k < opts.size(); ++k) dom.push_back(Value::integer(int64_t(k)));
          (*domains)[dp] = dom;
        }
      };
      emit("mit", rm.mitigations(f));
      emit("res", rm.resumptions(f));
    }
  }
  for (const auto& f : rm.factors) os << f.phase_var() << " : [0..6] init 0;\n";

  std::string mishap;
  for (const auto& f : rm.factors) {
    if (!mishap.empty()) mishap += " | ";
    mishap += f.phase_var() + "=mis";
  }
  os << "formula mishap = " << (mishap.empty() ? "false" : mishap) << ";\n";
  for (const auto& line : gen_risk_predicates(rm)) os << line << "\n";

  std::string cause;
  for (const auto& f : rm.factors) {
    if (!cause.empty()) cause += " | ";
    cause += "RCE_" + f.id;
  }
  if (cause.empty()) cause = "false";
  os << "label \"mishap\" = mishap;\n";
  os << "label \"cause\" = " << cause << ";\n";
  os << "label \"safe\" = !(" << cause << ") & !mishap;\n";
  std::string unsafe;
  for (const auto& f : rm.factors) {
    if (!handled(f)) continue;
    std::string p = f.phase_var();
    if (!unsafe.empty()) unsafe += " | ";
    unsafe += p + "=act | " + p + "=mit1 | " + p + "=mit2";
  }
  os << "label \"unsafe\" = " << (unsafe.empty() ? "false" : unsafe) << ";\n";
  for (const auto& f : rm.factors)
    os << "label \"act_" << f.id << "\" = " << f.phase_var() << "=act;\n";
  return os.str();
}

std::string controller_fragment(const RiskModel& rm, const GenerationConfig& cfg, bool pdtmc,
                                std::vector<GeneratedCommand>* info) {
  std::ostringstream os;
  os << "// generated controller\n";
  if (cfg.emit_controller) {
    for (const auto& line : gen_controller_module(rm, cfg, pdtmc, info)) os << line << "\n";
    os << gen_idle(rm, cfg, pdtmc) << "\n";
    if (info) info->push_back({"si_idle", "", -1, false, CmdStage::Idle});
  } else {
    RiskModel none;
    os << gen_idle(none, cfg, pdtmc) << "\n";
    if (info) info->push_back({"si_idle", "", -1, false, CmdStage::Idle});
  }
  return os.str();
}

std::string rewards_fragment(const RiskModel& rm, const GenerationConfig& cfg) {
  std::ostringstream os;
  os << "// generated rewards\n";
  for (const auto& line : gen_rewards(rm, cfg)) os << line << "\n";
  return os.str();
}

std::string splice(const std::string& skeleton, const std::string& anchor,
                   const std::string& text) {
  auto pos = skeleton.find(anchor);
  if (pos == std::string::npos) throw ModelError("skeleton anchor missing: " + anchor);
  std::string out = skeleton;
  out.replace(pos, anchor.size(), text);
  if (out.find(anchor) != std::string::npos)
    throw ModelError("skeleton anchor duplicated: " + anchor);
  return out;
}

GeneratedModel build(const std::string& skeleton_text, const RiskModel& rm,
                     const GenerationConfig& cfg, bool pdtmc) {
  GeneratedModel g;
  g.risk = rm;
  g.cfg = cfg;
  std::string text = skeleton_text;
  text = splice(text, "//@formulas", decls_fragment(rm, cfg, pdtmc, pdtmc ? &g.dp_domains : nullptr));
  text = splice(text, "//@controller", controller_fragment(rm, cfg, pdtmc, &g.generated));
  text = splice(text, "//@rewards", rewards_fragment(rm, cfg));
  g.text = text;
  try {
    g.model = parse_model(text);
  } catch (const ParseError& e) {
    std::istringstream is(text);
    std::string line;
    for (int k = 0; k < e.line && std::getline(is, line); ++k) {
    }
    throw ModelError(std::string("generated model does not parse: ") + e.what() + "\n  " + line);
  }
  g.model.kind = pdtmc ? ModelKind::Dtmc : ModelKind::Mdp;
  g.command_count = int(g.model.commands.size());
  for (const auto& r : g.model.rewards) g.reward_item_count += int(r.items.size());
  return g;
}

}  // namespace

GeneratedModel generate(const std::string& skeleton_text, const RiskModel& rm,
                        const GenerationConfig& cfg) {
  return build(skeleton_text, rm, cfg, false);
}

GeneratedModel pdtmc_transform(const std::string& skeleton_text, const RiskModel& rm,
                               const GenerationConfig& cfg) {
  for (const auto& f : rm.factors) {
    if (f.detected_by.empty()) continue;
    if (f.mitigated_by.empty() || f.resumed_by.empty())
      throw ModelError("factor " + f.id + " has an empty option list");
  }
  return build(skeleton_text, rm, cfg, true);
}

std::vector<std::string> controller_priority(const GeneratedModel& g) {
  auto rank = [](CmdStage s) {
    switch (s) {
      case CmdStage::Detection:
        return 0;
      case CmdStage::ModeSwitch:
        return 1;
      case CmdStage::ActivitySwitch:
        return 2;
      case CmdStage::MitigationDone:
        return 3;
      case CmdStage::SafetyFunctionOff:
        return 4;
      case CmdStage::ModeResume:
        return 5;
      case CmdStage::ActivityResume:
        return 6;
      case CmdStage::SafetyFunction:
        return 7;
      case CmdStage::Idle:
        return 8;
    }
    return 9;
  };
  std::vector<std::pair<std::pair<int, std::size_t>, std::string>> ranked;
  for (std::size_t k = 0; k < g.generated.size(); ++k) {
    const auto& gc = g.generated[k];
    bool seen = false;
    for (auto& [key, label] : ranked)
      if (label == gc.label) {
        key = std::min(key, {rank(gc.stage), k});
        seen = true;
      }
    if (!seen) ranked.push_back({{rank(gc.stage), k}, gc.label});
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (auto& [_, label] : ranked) out.push_back(label);
  return out;
}

}  // namespace safectrl
