#include <set>

#include "doctest.h"
#include "safectrl/designspace.hpp"
#include "safectrl/synth.hpp"

using namespace safectrl;

namespace {

// Single-actor toy cell with one handled factor.
const char* kToySkeleton = R"dsl(
const int off = 0; const int idle = 1; const int exchWrkp = 2; const int welding = 3;
const int normal = 0; const int hguid = 1; const int ssmon = 2; const int pflim = 3; const int srmst = 4; const int stopped = 5;
turn : [0..1] init 1;
token : [0..0] init 0;
busy : bool init true;
pos : [0..1] init 0;
alert : bool init false;
safmod : [0..5] init 0;
wact : [0..3] init 2;
ract : [0..3] init 2;
formula chi = pos=1 & busy;
//@formulas
formula final = !busy & pos=0;
formula OK_S = turn=0 & !final & !mishap;
formula OK_p = turn=1 & !final & !mishap;
label "final" = final;
[p_move] OK_p -> 0.5:(pos'=1)&(turn'=0) + 0.5:(pos'=0)&(turn'=0);
[p_work] OK_p & busy & ract=exchWrkp & !chi -> 0.8:(busy'=false)&(turn'=0) + 0.2:(turn'=0);
[mis_p_work] OK_p & busy & ract=exchWrkp & chi -> 0.2:(Fp'=mis)&(turn'=0) + 0.8:(busy'=false)&(turn'=0);
//@controller
[loop_final] final -> true;
[loop_mishap] mishap & !final -> true;
//@rewards
)dsl";

const char* kToyRisk = R"dsl(
F desc "someone close while working"
  guard "chi"
  detectedBy (.Fdet)
  mitigatedBy (.Fmit)
  resumedBy (.Fres)
  severity = 2;

mode Fdet desc "sensor" guard "pos=1 & busy";
mode Fmit desc "pause" cf "pos=1" update "(alert'=true)" target (act=idle, safmod=srmst)
  disruption=1 nuisance="2" effort=1;
mode Fres desc "resume" cf "pos=1" update "(alert'=false)" target (act=exchWrkp, safmod=normal);

distances act {
  off: 0;
  idle: 1 0;
  exchWrkp: 3 2 0;
  welding: 5 4 2 0;
}
distances safmod {
  normal: 0;
  hguid: -2 0;
  ssmon: -1 1 0;
  pflim: -2 0 -1 0;
  srmst: -3 -1 -2 -1 0;
  stopped: -4 -2 -3 -2 -1 0;
}
profile {
  guard risk_F guard_prod prod;
  p_work: "" "3" "" "2";
}
)dsl";

GenerationConfig toy_cfg() {
  GenerationConfig cfg;
  cfg.actor_count = 1;
  cfg.activity_vars = {"wact", "ract"};
  return cfg;
}

}  // namespace

TEST_CASE("mode and activity switch targets follow the gradient rule") {
  RiskModel rm = parse_risk_model(kToyRisk);
  CHECK(mitigation_target("welding", "idle", rm.act) == "idle");
  CHECK(mitigation_target("idle", "welding", rm.act) == "idle");  // keep current
  CHECK(mitigation_target("idle", "idle", rm.act) == "idle");
  CHECK(mitigation_target("normal", "srmst", rm.safmod) == "srmst");
  CHECK(mitigation_target("stopped", "srmst", rm.safmod) == "stopped");
}

TEST_CASE("resumption target caps componentwise at the most restrictive candidate") {
  RiskModel rm = parse_risk_model(kToyRisk);
  SUBCASE("singleton") {
    ResumeCandidate c;
    c.activity = "exchWrkp";
    c.safmod = "normal";
    ResumeCandidate t = resumption_target({c}, rm.act, rm.safmod);
    CHECK(*t.activity == "exchWrkp");
    CHECK(*t.safmod == "normal");
  }
  SUBCASE("two factors pull to the safer pair") {
    ResumeCandidate a, b;
    a.activity = "welding";
    a.safmod = "normal";
    b.activity = "idle";
    b.safmod = "ssmon";
    ResumeCandidate t = resumption_target({a, b}, rm.act, rm.safmod);
    CHECK(*t.activity == "idle");
    CHECK(*t.safmod == "ssmon");
  }
  SUBCASE("identical candidates collapse") {
    ResumeCandidate a;
    a.activity = "idle";
    a.safmod = "pflim";
    ResumeCandidate t = resumption_target({a, a}, rm.act, rm.safmod);
    CHECK(*t.activity == "idle");
    CHECK(*t.safmod == "pflim");
  }
  SUBCASE("absent components leave no constraint") {
    ResumeCandidate a;
    a.safmod = "ssmon";
    ResumeCandidate t = resumption_target({a}, rm.act, rm.safmod);
    CHECK_FALSE(t.activity.has_value());
    CHECK(*t.safmod == "ssmon");
  }
}

TEST_CASE("generated fragments carry the expected shapes") {
  RiskModel rm = parse_risk_model(kToyRisk);
  GenerationConfig cfg = toy_cfg();

  auto preds = gen_risk_predicates(rm);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0] == "formula RCE_F = (chi);");
  CHECK(preds[1] == "formula CE_F = (pos=1 & busy);");

  auto det = gen_detection(rm, cfg);
  REQUIRE(det.size() == 1);
  CHECK(det[0].find("[si_Fact]") == 0);
  CHECK(det[0].find("CE_F") != std::string::npos);
  CHECK(det[0].find("Fp=mis") != std::string::npos);

  std::string idle_cmd = gen_idle(rm, cfg, false);
  CHECK(idle_cmd.find("!RCE_F") != std::string::npos);
  CHECK(idle_cmd.find("(token'=mod(token+1,ag))") != std::string::npos);

  RiskModel none;
  CHECK(gen_idle(none, cfg, false) ==
        "[si_idle] OK_S -> (token'=mod(token+1,ag))&(turn'=token+1);");
}

TEST_CASE("toy design space has the frozen command count and expands cleanly") {
  RiskModel rm = parse_risk_model(kToyRisk);
  GeneratedModel g = generate(kToySkeleton, rm, toy_cfg());
  // 5 skeleton commands plus: 1 detection, 6 mode switches, 16 activity
  // switches, 2 safety-function commands, 1 finaliser, 1 deactivation,
  // 1 mode resumption, 1 activity resumption, 1 idle.
  CHECK(g.model.commands.size() == 35);

  ExplicitModel x = expand(g.model, {});
  CHECK(x.num_states() > 10);
  DeadlockSets dl = deadlock_states(x, *g.model.find_formula("final"));
  CHECK(dl.early.empty());

  SUBCASE("every generated command is guarded by the controller turn") {
    // No generated command may be enabled while it is the process actor's turn.
    std::set<std::string> gen_labels;
    for (const auto& gc : g.generated) gen_labels.insert(gc.label);
    for (std::uint32_t s = 0; s < x.num_states(); ++s) {
      int turn_ix = x.decls.var_index("turn");
      if (x.states[s].v[std::size_t(turn_ix)] == 0) continue;
      for (const auto& a : x.trans[s].actions) CHECK_FALSE(gen_labels.count(a.label));
    }
  }

  SUBCASE("phase variable follows only the handling transitions") {
    int fp = x.decls.var_index("Fp");
    REQUIRE(fp >= 0);
    // inact=0 act=1 mit1=2 mit2=3 mit=4 res=5 mis=6
    std::set<std::pair<int, int>> allowed{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0},
                                          {4, 1}, {5, 1}};
    for (std::uint32_t s = 0; s < x.num_states(); ++s) {
      for (const auto& a : x.trans[s].actions) {
        for (auto [t, p] : a.succ) {
          int from = int(x.states[s].v[std::size_t(fp)]);
          int to = int(x.states[t].v[std::size_t(fp)]);
          if (from == to) continue;
          bool mishap_edge = to == 6 && from != 6;
          CHECK((allowed.count({from, to}) || mishap_edge));
        }
      }
    }
  }
}

TEST_CASE("empty factor set degenerates to a token cycler") {
  // A plain skeleton without any factor hooks.
  const char* plain = R"dsl(
turn : [0..1] init 1;
token : [0..0] init 0;
busy : bool init true;
//@formulas
formula final = !busy;
formula OK_S = turn=0 & !final & !mishap;
formula OK_p = turn=1 & !final & !mishap;
label "final" = final;
[p_work] OK_p -> 0.5:(busy'=false)&(turn'=0) + 0.5:(turn'=0);
//@controller
[loop_final] final -> true;
//@rewards
)dsl";
  RiskModel none;
  none.act = parse_risk_model(kToyRisk).act;
  none.safmod = parse_risk_model(kToyRisk).safmod;
  GeneratedModel g = generate(plain, none, toy_cfg());
  ExplicitModel x = expand(g.model, {});
  DeadlockSets dl = deadlock_states(x, *g.model.find_formula("final"));
  CHECK(dl.early.empty());
  // Passthrough plus the idle command and the frozen self-loop.
  CHECK(g.model.commands.size() == 3);
}

TEST_CASE("missing anchors are reported by name") {
  RiskModel rm = parse_risk_model(kToyRisk);
  try {
    generate("x : bool init false;\n//@controller\n//@rewards\n", rm, toy_cfg());
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("//@formulas") != std::string::npos);
  }
}

TEST_CASE("factor without a detector cannot be generated") {
  RiskModel rm = parse_risk_model(kToyRisk);
  RiskModel broken = rm;
  broken.factors[0].detected_by.clear();
  // Undetectable factors are skipped by generation, so this still succeeds,
  // but requesting their detection commands directly fails.
  CHECK(gen_detection(broken, toy_cfg()).empty());
  RiskModel nodet = rm;
  nodet.modes[0].guard_text.clear();  // Fdet loses its sensor predicate
  CHECK_THROWS_AS(gen_risk_predicates(nodet), ModelError);
}

TEST_CASE("decision parameters appear only in the transformed model") {
  RiskModel rm = parse_risk_model(kToyRisk);
  GeneratedModel mdp = generate(kToySkeleton, rm, toy_cfg());
  CHECK(mdp.model.parameter_names().empty());
  GeneratedModel pd = pdtmc_transform(kToySkeleton, rm, toy_cfg());
  auto params = pd.model.parameter_names();
  CHECK(params == std::vector<std::string>{"dpFmit", "dpFres"});
  REQUIRE(pd.dp_domains.count("dpFmit"));
  CHECK(pd.dp_domains.at("dpFmit").size() == 1);

  // Singleton domains: expansion equals the MDP's unique-controller
  // restriction, here witnessed by matching state counts.
  pd.model.priority_labels = controller_priority(pd);
  ExplicitModel a = expand(pd.model, {{"dpFmit", Value::integer(0)},
                                      {"dpFres", Value::integer(0)}});
  CHECK(a.kind == ModelKind::Dtmc);
  for (const auto& st : a.trans)
    for (const auto& act : st.actions) {
      double sum = 0;
      for (auto [t, p] : act.succ) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("search falls back to seeded sampling when the space exceeds the budget") {
  RiskModel rm = parse_risk_model(kToyRisk);
  GeneratedModel g = pdtmc_transform(kToySkeleton, rm, toy_cfg());
  g.model.priority_labels = controller_priority(g);
  SynthesisQuery q;
  q.setting = SynthSetting::Pdtmc;
  q.seed = 5;
  q.horizon = 12;
  q.budget = 5;
  ParamDomain pad;  // widens the space beyond the budget without model effect
  pad.name = "pad";
  pad.numeric = true;
  pad.lo = 0;
  pad.hi = 1;
  pad.grid = 9;
  q.domains.push_back(pad);
  auto front = synth_pdtmc(g, q);
  CHECK(!front.empty());
  auto again = synth_pdtmc(g, q);
  REQUIRE(again.size() == front.size());
  for (std::size_t k = 0; k < front.size(); ++k) {
    CHECK(again[k].params == front[k].params);
    CHECK(again[k].objectives == front[k].objectives);
  }
}

TEST_CASE("zero accumulated denominator flags the raw-productivity convention") {
  RiskModel rm = parse_risk_model(kToyRisk);
  GeneratedModel g = pdtmc_transform(kToySkeleton, rm, toy_cfg());
  g.model.priority_labels = controller_priority(g);
  ExplicitModel d = expand(g.model, {{"dpFmit", Value::integer(0)}, {"dpFres", Value::integer(0)}});
  SynthesisQuery q;
  q.horizon = 0;  // nothing can accrue
  PdtmcObjectives obj = evaluate_pdtmc_point(d, g, q);
  CHECK(obj.zero_denominator);
  CHECK(obj.productivity == doctest::Approx(0.0));
  CHECK(obj.risk == doctest::Approx(0.0));
}

TEST_CASE("uniform randomisation covers residual environment choice") {
  // Two simultaneously enabled process commands become one half/half mix.
  const char* text = R"dsl(
x : [0..2] init 0;
[a] x=0 -> (x'=1);
[b] x=0 -> (x'=2);
[stay] x>0 -> true;
)dsl";
  ProcessModel m = parse_model(text);
  m.kind = ModelKind::Dtmc;
  ExplicitModel d = expand(m, {});
  REQUIRE(d.trans[0].actions.size() == 1);
  REQUIRE(d.trans[0].actions[0].succ.size() == 2);
  CHECK(d.trans[0].actions[0].succ[0].second == doctest::Approx(0.5));
}
