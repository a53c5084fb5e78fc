#include "safectrl/twinsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "safectrl/rng.hpp"
#include "scan.hpp"

namespace safectrl {

namespace {

// Work-cell enumerations, mirrored from the bundled process skeleton.
enum Loc { atTable = 0, sharedTbl = 1, inCell = 2, atWeldSpot = 3 };
enum Rng3 { far = 0, near = 1, close = 2 };
enum Act { off = 0, idle = 1, exchWrkp = 2, welding = 3 };
enum Mode { normal = 0, hguid = 1, ssmon = 2, pflim = 3, srmst = 4, stopped = 5 };
enum Notif { ok = 0, leaveArea = 1 };
enum Wps { left = 0, inGrab = 1, atWelder = 2, right = 3 };
enum Phase { ph_inact = 0, ph_act = 1, ph_mit1 = 2, ph_mit2 = 3, ph_mit = 4, ph_res = 5, ph_mis = 6 };

const char* const kVars[] = {
    "hloc",   "hloc2",   "rngDet",  "lbar",   "notif",   "safmod",  "wact",
    "ract",   "rloc",    "wps",     "wpfin",  "mishap",  "final",   "HRWp",
    "HSp",    "HCp",     "chi_HRW", "chi_HS", "chi_HC",  "zeta_HRW", "zeta_HS",
    "zeta_HC"};

struct World {
  std::map<std::string, std::int64_t> v;

  std::int64_t& operator[](const std::string& k) { return v[k]; }
  std::int64_t at(const std::string& k) const { return v.at(k); }
};

struct OperatorActor {
  // Script: wait w1, reach bench, wait w2, enter cell, wait w3, approach
  // welder, wait w4, leave welder, exit cell, retreat.
  int step = 0;
  double ready_ms = 0.0;
  std::int64_t loc = atTable;
  bool done = false;
};

struct Sim {
  const Scenario& sc;
  Rng rng;
  World w;
  std::vector<OperatorActor> ops;
  double now = 0.0;
  double robot_ready = 0.0;
  double weld_done_ms = -1.0;  // >= 0 while a weld is in progress
  RuntimeState rt;
  TimedTrace trace;

  explicit Sim(const Scenario& s) : sc(s), rng(s.seed) {}

  void derive() {
    // Sensors track the operator deepest inside the cell.
    std::int64_t deepest = atTable;
    bool reach = false;
    for (const auto& o : ops) {
      deepest = std::max(deepest, o.loc);
      reach = reach || o.loc == sharedTbl;
    }
    std::int64_t zone = deepest == inCell ? near : deepest == atWeldSpot ? close : far;
    // A stale range reading persists until the true zone changes again.
    if (!stale || zone != stale_zone) {
      w["rngDet"] = zone;
      stale = false;
    }
    w["lbar"] = reach ? 1 : 0;
    w["hloc"] = ops[0].loc;
    w["hloc2"] = ops.size() > 1 ? ops[1].loc : 0;

    bool active = !((w.at("ract") == off || w.at("ract") == idle) &&
                    (w.at("wact") == off || w.at("wact") == idle));
    bool in_sga = false, at_spot = false;
    for (const auto& o : ops) {
      in_sga = in_sga || o.loc == inCell || o.loc == atWeldSpot;
      at_spot = at_spot || o.loc == atWeldSpot;
    }
    w["chi_HRW"] = (reach && w.at("rloc") == sharedTbl) ? 1 : 0;
    w["chi_HS"] = (in_sga && active) ? 1 : 0;
    w["chi_HC"] = (at_spot && w.at("wact") == welding) ? 1 : 0;
    w["zeta_HRW"] = (w.at("lbar") == 1 && w.at("rloc") == sharedTbl) ? 1 : 0;
    w["zeta_HS"] = ((w.at("rngDet") == near || w.at("rngDet") == close) && active) ? 1 : 0;
    w["zeta_HC"] = (w.at("rngDet") == close && w.at("wact") == welding) ? 1 : 0;
    w["final"] = (w.at("wps") == right && w.at("wpfin") == 1) ? 1 : 0;
  }

  bool stale = false;
  std::int64_t stale_zone = far;

  void record(const std::string& actor, const std::string& event) {
    TraceRecord r;
    r.ms = now;
    r.actor = actor;
    r.event = event;
    r.snap.v.reserve(trace.decls.vars.size());
    for (const auto& d : trace.decls.vars) r.snap.v.push_back(w.at(d.name));
    trace.records.push_back(std::move(r));
  }

  void controller_wake() {
    if (!sc.table) return;
    std::map<std::string, std::int64_t> snap;
    for (const auto& m : sc.table->monitored) {
      auto it = w.v.find(m);
      if (it == w.v.end()) throw ModelError("controller monitors unknown variable " + m);
      snap[m] = it->second;
    }
    StepResult res = step(*sc.table, rt, snap);
    for (const auto& fire : res.fires) {
      for (const auto& [n, val] : fire.outputs) w[n] = val;
      for (const auto& [n, val] : fire.phases) w[n] = val;
      derive();
      record("ctrl", fire.event);
    }
  }

  bool mishap_roll(const char* factor, const std::string& phase_var) {
    if (!sc.mishaps_enabled) return false;
    if (rng.uniform() >= sc.pr_mishap) return false;
    w["mishap"] = 1;
    w[phase_var] = ph_mis;
    rt.phases[phase_var] = ph_mis;
    derive();
    record("world", std::string("mis_") + factor);
    return true;
  }

  bool op_event(std::size_t k) {
    OperatorActor& o = ops[k];
    if (o.done || o.ready_ms > now) return false;
    std::string who = k == 0 ? "operator" : "operator2";
    auto move = [&](std::int64_t to, const char* event, int wait_slot) {
      o.loc = to;
      // Exit from the cell may leave a stale range reading behind.
      if (event == std::string("h_exitCell") && sc.sensor_failure &&
          rng.uniform() < sc.pr_sensor) {
        stale = true;
        stale_zone = near;
        w["rngDet"] = near;
      }
      derive();
      record(who, event);
      o.ready_ms = now + sc.op_move_ms;
      if (wait_slot >= 0) o.ready_ms += sc.waits_s[std::size_t(wait_slot)] * 1000.0;
    };
    switch (o.step++) {
      case 0:  // initial wait before entering the workbench
        o.ready_ms = now + sc.waits_s[0] * 1000.0;
        return false;
      case 1:
        move(sharedTbl, "h_reachAcross", 1);
        return true;
      case 2:
        move(inCell, "h_enterCell", 2);
        return true;
      case 3:
        move(atWeldSpot, "h_approachWelder", 3);
        return true;
      case 4:
        move(inCell, "h_leaveWelder", -1);
        return true;
      case 5:
        move(sharedTbl, "h_exitCell", -1);
        return true;
      case 6:
        move(atTable, "h_retreat", -1);
        o.done = true;
        return true;
      default:
        o.done = true;
        return false;
    }
  }

  bool sm_move() {
    auto m = w.at("safmod");
    return m == normal || m == ssmon || m == pflim;
  }
  bool sm_grab() {
    auto m = w.at("safmod");
    return m == normal || m == ssmon || m == pflim || m == hguid;
  }
  bool harsh_hrw() { return w.at("safmod") == normal || w.at("safmod") == ssmon; }
  bool harsh_hs() {
    auto m = w.at("safmod");
    return m == normal || m == hguid || m == pflim;
  }

  bool robot_event() {
    if (robot_ready > now) return false;
    auto fire = [&](const char* event) {
      derive();
      record("robot", event);
      robot_ready = now + sc.robot_action_ms;
    };
    if (w.at("ract") != exchWrkp) return false;
    if (w.at("wps") == left && w.at("rloc") != sharedTbl && sm_move()) {
      w["rloc"] = sharedTbl;
      fire("r_moveToTable");
      return true;
    }
    if (w.at("wps") == left && w.at("rloc") == sharedTbl && sm_grab()) {
      if (w.at("chi_HRW") == 1 && harsh_hrw() && mishap_roll("HRW", "HRWp")) return true;
      w["wps"] = inGrab;
      fire("r_grabWorkpiece");
      return true;
    }
    if (w.at("wps") == inGrab && w.at("wpfin") == 0 && w.at("rloc") == sharedTbl && sm_move()) {
      if (w.at("chi_HS") == 1 && harsh_hs() && mishap_roll("HS", "HSp")) return true;
      w["rloc"] = atWeldSpot;
      fire("r_moveToWelder");
      return true;
    }
    if (w.at("wps") == inGrab && w.at("wpfin") == 0 && w.at("rloc") == atWeldSpot && sm_grab()) {
      w["wps"] = atWelder;
      fire("r_loadWelder");
      return true;
    }
    if (w.at("wps") == atWelder && w.at("wpfin") == 0 &&
        (w.at("safmod") == normal || w.at("safmod") == ssmon)) {
      w["ract"] = welding;
      w["wact"] = welding;
      fire("r_startWeldTask");
      return true;
    }
    if (w.at("wps") == atWelder && w.at("wpfin") == 1 && w.at("rloc") == atWeldSpot && sm_grab()) {
      w["wps"] = inGrab;
      fire("r_unloadWelder");
      return true;
    }
    if (w.at("wps") == inGrab && w.at("wpfin") == 1 && w.at("rloc") == atWeldSpot && sm_move()) {
      w["rloc"] = sharedTbl;
      fire("r_returnToTable");
      return true;
    }
    if (w.at("wps") == inGrab && w.at("wpfin") == 1 && w.at("rloc") == sharedTbl && sm_grab()) {
      if (w.at("chi_HRW") == 1 && harsh_hrw() && mishap_roll("HRW", "HRWp")) return true;
      w["wps"] = right;
      fire("r_placeRight");
      return true;
    }
    return false;
  }

  bool welder_event() {
    if (weld_done_ms < 0) {
      if (w.at("wact") == welding && w.at("wps") == atWelder && w.at("wpfin") == 0) {
        weld_done_ms = now + sc.weld_ms;
        derive();
        record("welder", "w_weld");
        return true;
      }
      return false;
    }
    if (now < weld_done_ms) return false;
    // Completion: suspended while the controller has taken the welder out of
    // the welding activity.
    if (w.at("wact") != welding) return false;
    if (w.at("chi_HC") == 1 && mishap_roll("HC", "HCp")) {
      weld_done_ms = -1.0;
      return true;
    }
    w["wpfin"] = 1;
    w["wact"] = idle;
    w["ract"] = exchWrkp;
    weld_done_ms = -1.0;
    derive();
    record("welder", "w_weldDone");
    return true;
  }

  TimedTrace run() {
    for (const char* name : kVars) {
      VarDecl d;
      d.name = name;
      d.kind = VarKind::BoundedInt;
      d.lo = 0;
      d.hi = 8;
      d.init = 0;
      trace.decls.vars.push_back(d);
    }
    ops.resize(std::size_t(std::max(1, sc.operators)));
    if (ops.size() > 1) ops[1].ready_ms = sc.second_op_offset_s * 1000.0;
    w["hloc"] = atTable;
    w["hloc2"] = 0;
    w["rngDet"] = far;
    w["lbar"] = 0;
    w["notif"] = ok;
    w["safmod"] = normal;
    w["wact"] = idle;
    w["ract"] = exchWrkp;
    w["rloc"] = atWeldSpot;
    w["wps"] = left;
    w["wpfin"] = 0;
    w["mishap"] = 0;
    if (sc.table) {
      GeneratedModel dummy;  // phases initialised from the table itself
      (void)dummy;
      for (const auto& p : sc.table->phase_vars) rt.phases[p] = ph_inact;
    }
    for (const char* p : {"HRWp", "HSp", "HCp"}) w[p] = ph_inact;
    derive();
    record("world", "start");
    controller_wake();

    // The episode keeps running after the workpiece is finished: the operator
    // completes the excursion and the controller winds handling down.
    const double horizon_ms = sc.horizon_s * 1000.0;
    while (now <= horizon_ms) {
      if (w.at("mishap") == 1) break;
      // Round-robin turn offers; the controller observes every atomic event.
      for (std::size_t k = 0; k < ops.size(); ++k)
        if (op_event(k)) controller_wake();
      if (w.at("mishap") == 1) break;
      if (w.at("final") == 0 && robot_event()) controller_wake();
      if (w.at("mishap") == 1) break;
      if (w.at("final") == 0 && welder_event()) controller_wake();
      now += sc.step_ms;
    }
    derive();
    record("world", "end");
    return std::move(trace);
  }
};

}  // namespace

std::vector<std::array<double, 4>> gen_test_vectors(int n, double total,
                                                    const std::vector<double>& slot_max,
                                                    std::uint64_t seed) {
  if (total <= 0) throw ModelError("total must be positive");
  if (!slot_max.empty()) {
    if (slot_max.size() != 4) throw ModelError("expected 4 slot bounds");
    double cap = 0;
    for (double b : slot_max) cap += b;
    if (cap < total) throw ModelError("infeasible bounds: slot maxima sum below the total");
  }
  // Zero-width slots are pinned up front; rejection over them would never
  // terminate. The rest is sorted-spacings sampling with resampling on a
  // bound violation.
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < 4; ++k)
    if (slot_max.empty() || slot_max[k] > 0.0) free.push_back(k);
  if (free.empty()) throw ModelError("infeasible bounds: no slot can hold the total");

  Rng rng(seed);
  std::vector<std::array<double, 4>> out;
  out.reserve(std::size_t(n));
  long attempts = 0;
  while (int(out.size()) < n) {
    if (++attempts > 10000L * (n + 1))
      throw ModelError("bound rejection did not terminate; loosen the slot maxima");
    std::vector<double> cuts(free.size() - 1);
    for (double& c : cuts) c = rng.uniform() * total;
    std::sort(cuts.begin(), cuts.end());
    std::array<double, 4> v{0, 0, 0, 0};
    double prev = 0.0;
    for (std::size_t k = 0; k < free.size(); ++k) {
      double next = k + 1 < free.size() ? cuts[k] : total;
      v[free[k]] = next - prev;
      prev = next;
    }
    bool ok = true;
    for (std::size_t k = 0; k < 4 && ok; ++k)
      if (!slot_max.empty() && v[k] > slot_max[k]) ok = false;
    if (ok) out.push_back(v);
  }
  return out;
}

TimedTrace run_scenario(const Scenario& s) {
  Sim sim(s);
  return sim.run();
}

namespace {

int var_of(const TimedTrace& t, const char* name) {
  int k = t.decls.var_index(name);
  if (k < 0) throw ModelError(std::string("trace lacks variable ") + name);
  return k;
}

}  // namespace

CoverageReport situation_coverage(const std::vector<TimedTrace>& traces) {
  CoverageReport rep;
  // r_moveToTable is absent: the approach move is over before the operator
  // can first reach the bench, so it cannot co-occur with interference.
  const char* robot_actions[] = {"r_grabWorkpiece", "r_moveToWelder",  "r_loadWelder",
                                 "r_startWeldTask", "r_unloadWelder",  "r_returnToTable",
                                 "r_placeRight"};
  const char* welder_actions[] = {"w_weld", "w_weldDone"};
  const char* interference[] = {"reaching", "entering"};
  for (const char* i : interference) {
    for (const char* a : robot_actions) rep.cells[std::string("robot:") + a + "|" + i] = false;
    for (const char* a : welder_actions) rep.cells[std::string("welder:") + a + "|" + i] = false;
    for (const char* p : {"sharedTbl", "atWeldSpot"})
      rep.cells[std::string("arm:") + p + "|" + i] = false;
  }
  const char* factors[] = {"HRW", "HS", "HC"};
  const char* phases[] = {"inact", "act", "mit1", "mit2", "mit", "res"};
  for (const char* f : factors)
    for (const char* p : phases) rep.phase_cells[std::string(f) + ":" + p] = false;

  for (const auto& t : traces) {
    if (t.records.empty()) continue;
    int hloc = var_of(t, "hloc"), hloc2 = var_of(t, "hloc2"), rloc = var_of(t, "rloc");
    int pv[3] = {var_of(t, "HRWp"), var_of(t, "HSp"), var_of(t, "HCp")};
    for (const auto& r : t.records) {
      auto loc1 = r.snap.v[std::size_t(hloc)];
      auto loc2 = r.snap.v[std::size_t(hloc2)];
      bool reaching = loc1 == 1 || loc2 == 1;
      bool entering = loc1 >= 2 || loc2 >= 2;
      auto mark = [&](const std::string& key) {
        auto it = rep.cells.find(key);
        if (it != rep.cells.end()) it->second = true;
      };
      for (int i = 0; i < 2; ++i) {
        bool on = i == 0 ? reaching : entering;
        if (!on) continue;
        std::string suffix = std::string("|") + (i == 0 ? "reaching" : "entering");
        if (r.actor == "robot") mark("robot:" + r.event + suffix);
        if (r.actor == "welder") mark("welder:" + r.event + suffix);
        mark(std::string("arm:") + (r.snap.v[std::size_t(rloc)] == 1 ? "sharedTbl" : "atWeldSpot") +
             suffix);
      }
      for (int f = 0; f < 3; ++f) {
        auto ph = r.snap.v[std::size_t(pv[f])];
        if (ph >= 0 && ph <= 5) {
          const char* names[] = {"inact", "act", "mit1", "mit2", "mit", "res"};
          rep.phase_cells[std::string(factors[f]) + ":" + names[ph]] = true;
        }
      }
    }
  }
  for (const auto& [_, v] : rep.cells) {
    ++rep.total;
    if (v) ++rep.covered;
  }
  for (const auto& [_, v] : rep.phase_cells) {
    ++rep.phase_total;
    if (v) ++rep.phase_covered;
  }
  rep.full = rep.covered == rep.total && rep.phase_covered == rep.phase_total;
  return rep;
}

std::vector<std::string> unhandled_causes(const TimedTrace& t) {
  std::vector<std::string> out;
  struct Probe {
    const char* factor;
    const char* chi;
    const char* phase;
  };
  const Probe probes[] = {{"HRW", "chi_HRW", "HRWp"}, {"HS", "chi_HS", "HSp"}, {"HC", "chi_HC", "HCp"}};
  for (const auto& p : probes) {
    int ci = t.decls.var_index(p.chi);
    int pi = t.decls.var_index(p.phase);
    if (ci < 0 || pi < 0) continue;
    bool occurred = false, handled = false;
    for (const auto& r : t.records) {
      if (r.snap.v[std::size_t(ci)] == 1) occurred = true;
      if (r.snap.v[std::size_t(pi)] != 0) handled = true;
    }
    if (occurred && !handled) out.push_back(p.factor);
  }
  return out;
}

ScenarioFile parse_scenario(const std::string& text) {
  ScenarioFile sf;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto cpos = line.find("//");
    if (cpos != std::string::npos) line = line.substr(0, cpos);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string eq;
    auto need = [&](auto& target) {
      if (!(ls >> eq >> target)) throw ParseError("malformed scenario line", lineno, 1);
    };
    if (key == "seed")
      need(sf.base.seed);
    else if (key == "horizon_s")
      need(sf.base.horizon_s);
    else if (key == "step_ms")
      need(sf.base.step_ms);
    else if (key == "op_move_ms")
      need(sf.base.op_move_ms);
    else if (key == "robot_action_ms")
      need(sf.base.robot_action_ms);
    else if (key == "weld_ms")
      need(sf.base.weld_ms);
    else if (key == "operators")
      need(sf.base.operators);
    else if (key == "second_op_offset_s")
      need(sf.base.second_op_offset_s);
    else if (key == "sensor_failure") {
      std::string v;
      need(v);
      sf.base.sensor_failure = v == "on" || v == "true" || v == "1";
    } else if (key == "pr_sensor")
      need(sf.base.pr_sensor);
    else if (key == "mishaps") {
      std::string v;
      need(v);
      sf.base.mishaps_enabled = v == "on" || v == "true" || v == "1";
    } else if (key == "pr_mishap")
      need(sf.base.pr_mishap);
    else if (key == "controller")
      need(sf.controller_path);
    else if (key == "campaign")
      need(sf.campaign_n);
    else if (key == "total_s")
      need(sf.total_s);
    else if (key == "waits") {
      if (!(ls >> eq >> sf.base.waits_s[0] >> sf.base.waits_s[1] >> sf.base.waits_s[2] >>
            sf.base.waits_s[3]))
        throw ParseError("waits expects 4 values", lineno, 1);
    } else if (key == "slot_max") {
      double v;
      ls >> eq;
      while (ls >> v) sf.slot_max.push_back(v);
    } else {
      throw ParseError("unknown scenario key: " + key, lineno, 1);
    }
  }
  return sf;
}

}  // namespace safectrl
