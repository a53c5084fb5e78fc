// Regression baselines for the bundled work-cell project. The counts and
// probabilities here were produced by the first expansion of the bundled
// model, reviewed, and frozen.

#include "doctest.h"
#include "safectrl/pipeline.hpp"

using namespace safectrl;

#ifndef SAFECTRL_MODELS_DIR
#define SAFECTRL_MODELS_DIR "models"
#endif

namespace {

ProjectConfig project() {
  return load_project(std::string(SAFECTRL_MODELS_DIR) + "/workcell/project.cfg");
}

}  // namespace

TEST_CASE("work-cell design space: frozen expansion baselines") {
  ProjectConfig cfg = project();
  GeneratedModel mdp = build_mdp(cfg);
  CHECK(mdp.model.commands.size() == 226);
  ExplicitModel x = instantiate(mdp, default_point(mdp, nullptr, {}), cfg.state_cap);
  CHECK(x.num_states() == 144020);
  std::size_t trans = 0;
  for (const auto& s : x.trans)
    for (const auto& a : s.actions) trans += a.succ.size();
  CHECK(trans == 436793);
  DeadlockSets dl = deadlock_states(x, *mdp.model.find_formula("final"));
  CHECK(dl.early.empty());
}

TEST_CASE("work-cell well-formedness verdicts") {
  ProjectConfig cfg = project();
  GeneratedModel mdp = build_mdp(cfg);
  ExplicitModel x = instantiate(mdp, default_point(mdp, nullptr, {}), cfg.state_cap);
  McOptions opts;
  auto res = run_properties(x, read_file(cfg.resolve(cfg.properties_file)), opts);
  CHECK(res.size() == 9);
  for (const auto& r : res) {
    INFO(r.source);
    CHECK(r.ok);
  }
}

TEST_CASE("work-cell risk space matches its dependencies") {
  ProjectConfig cfg = project();
  RiskModel rm = load_risk(cfg);
  // 27 assignments minus requiresOcc(HC->HS) minus the prevents pair.
  CHECK(risk_space(rm).size() == 19);
}

TEST_CASE("accident freedom improves under the synthesised controller") {
  ProjectConfig cfg = project();
  GeneratedModel pd = build_pdtmc(cfg);
  GeneratedModel base = build_baseline(cfg);
  McOptions opts;
  ExplicitModel controlled =
      instantiate(pd, default_point(pd, nullptr, cfg.extract_params), cfg.state_cap);
  ExplicitModel un = instantiate(base, default_point(base, nullptr, {}), cfg.state_cap);
  Triple tc = accident_freedom_summary(controlled, opts);
  Triple tb = accident_freedom_summary(un, opts);
  // Frozen desk-scale values; the strict ordering is the contract.
  CHECK(tc.mean == doctest::Approx(0.994080).epsilon(1e-4));
  CHECK(tb.mean == doctest::Approx(0.849999).epsilon(1e-4));
  CHECK(tc.mean > tb.mean);
}

TEST_CASE("pdtmc and baseline expand deadlock-free") {
  ProjectConfig cfg = project();
  GeneratedModel pd = build_pdtmc(cfg);
  ExplicitModel d = instantiate(pd, default_point(pd, nullptr, {}), cfg.state_cap);
  CHECK(d.num_states() == 40059);
  DeadlockSets dl = deadlock_states(d, *pd.model.find_formula("final"));
  CHECK(dl.early.empty());
  for (const auto& st : d.trans) {
    REQUIRE(st.actions.size() == 1);
    double sum = 0;
    for (auto [t, p] : st.actions[0].succ) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("policy synthesis on the full design space returns a checkable policy") {
  ProjectConfig cfg = project();
  GeneratedModel mdp = build_mdp(cfg);
  ExplicitModel x = instantiate(mdp, default_point(mdp, nullptr, {}), cfg.state_cap);
  SynthesisQuery q;
  q.objectives.push_back({"reach", "Pmax=? [ F \"final\" ]", Direction::Maximize, 1.0});
  q.constraints.push_back({"live", "E [ F \"final\" ]"});
  SolutionPoint sp = synth_mdp(x, q, McOptions{});
  CHECK(sp.objectives[0] > 0.0);
  CHECK(sp.objectives[0] <= 1.0 + 1e-9);
  CHECK(sp.feasible);
  ExplicitModel chain = induced_dtmc(x, sp.policy);
  CheckResult r = check_query(chain, parse_property("P=? [ F \"final\" ]", chain), McOptions{});
  CHECK(r.value == doctest::Approx(sp.objectives[0]).epsilon(1e-8));
}

TEST_CASE("filter aggregation matches the accident-freedom triple") {
  ProjectConfig cfg = project();
  GeneratedModel pd = build_pdtmc(cfg);
  ExplicitModel d = instantiate(pd, default_point(pd, nullptr, {}), cfg.state_cap);
  Triple t = accident_freedom_summary(d, McOptions{});
  for (const char* agg : {"min", "avg", "max"}) {
    PropertyQuery q = parse_property(
        std::string("filter(") + agg + ", P=? [ !\"mishap\" W \"safe\" ], \"cause\")", d);
    CheckResult r = check_query(d, q, McOptions{});
    double want = std::string(agg) == "min" ? t.min : std::string(agg) == "avg" ? t.mean : t.max;
    CHECK(r.value == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("generated model text reparses to the same structure") {
  ProjectConfig cfg = project();
  GeneratedModel mdp = build_mdp(cfg);
  ProcessModel again = parse_model(mdp.text);
  CHECK(print_model(again) == print_model(mdp.model));
}
