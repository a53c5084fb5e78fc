#include "doctest.h"
#include "safectrl/model.hpp"

using namespace safectrl;

namespace {

const char* kCoin = R"(
flip : bool init false;
done : bool init false;
[toss] !done -> 0.5:(flip'=true)&(done'=true) + 0.5:(done'=true);
[stay] done -> true;
)";

}  // namespace

TEST_CASE("coin model expands to the expected chain") {
  ProcessModel m = parse_model(kCoin);
  CHECK(m.commands.size() == 2);
  ExplicitModel x = expand(m, {});
  CHECK(x.num_states() == 3);  // initial, heads-done, tails-done
  std::size_t trans = 0;
  for (const auto& s : x.trans)
    for (const auto& a : s.actions) trans += a.succ.size();
  CHECK(trans == 4);
}

TEST_CASE("two enabled commands give a nondeterministic choice") {
  const char* text = R"(
x : [0..2] init 0;
[a] x=0 -> (x'=1);
[b] x=0 -> (x'=2);
[stay] x>0 -> true;
)";
  ProcessModel m = parse_model(text);
  ExplicitModel x = expand(m, {});
  CHECK(x.trans[x.initial].actions.size() == 2);
}

TEST_CASE("empty module with one variable") {
  ProcessModel m = parse_model("b : bool init false;\n");
  CHECK(m.decls.vars.size() == 1);
  CHECK(m.commands.empty());
}

TEST_CASE("rewards block attaches items to actions") {
  const char* text = R"(
x : [0..1] init 0;
[go] x=0 -> (x'=1);
[stay] x=1 -> true;
rewards "risk_HC"
  [go] true : 2;
  [go] x=0 : 3;
  [stay] true : 1;
endrewards
)";
  ProcessModel m = parse_model(text);
  REQUIRE(m.rewards.size() == 1);
  CHECK(m.rewards[0].name == "risk_HC");
  CHECK(m.rewards[0].items.size() == 3);
  ExplicitModel x = expand(m, {});
  CHECK(x.trans[0].actions[0].rewards[0] == doctest::Approx(5.0));  // items accumulate
}

TEST_CASE("parse errors: duplicates, cycles, syntax") {
  CHECK_THROWS_AS(parse_model("x : bool init false; x : bool init true;"), ParseError);
  CHECK_THROWS_AS(parse_model("formula a = b; formula b = a;"), ParseError);
  CHECK_THROWS_AS(parse_model("x : bool init; "), ParseError);
}

TEST_CASE("out-of-range assignment is a model error") {
  const char* text = R"(
x : [0..1] init 0;
[go] true -> (x'=x+1);
)";
  ProcessModel m = parse_model(text);
  CHECK_THROWS_AS(expand(m, {}), ModelError);
}

TEST_CASE("probability sums are validated per reachable state") {
  const char* text = R"(
x : [0..1] init 0;
[go] x=0 -> 0.5:(x'=1) + 0.4:(x'=0);
)";
  ProcessModel m = parse_model(text);
  CHECK_THROWS_AS(expand(m, {}), ModelError);
}

TEST_CASE("zero-probability branches are dropped") {
  const char* text = R"(
const double p = 0;
x : [0..1] init 0;
[go] x=0 -> p:(x'=1) + (1-p):(x'=0);
)";
  ProcessModel m = parse_model(text);
  ExplicitModel x = expand(m, {});
  CHECK(x.num_states() == 1);
  CHECK(x.trans[0].actions[0].succ.size() == 1);
}

TEST_CASE("undefined constants become parameters") {
  const char* text = R"(
const double p;
x : [0..1] init 0;
[go] x=0 -> p:(x'=1) + (1-p):(x'=0);
)";
  ProcessModel m = parse_model(text);
  CHECK(m.parameter_names() == std::vector<std::string>{"p"});
  CHECK_THROWS_AS(expand(m, {}), ModelError);
  ExplicitModel x = expand(m, {{"p", Value::real(0.25)}});
  CHECK(x.trans[0].actions[0].succ.size() == 2);
}

TEST_CASE("deadlock partition by final condition") {
  const char* text = R"(
x : [0..2] init 0;
goal : bool init false;
[a] x=0 -> 0.5:(x'=1)&(goal'=true) + 0.5:(x'=2);
)";
  ProcessModel m = parse_model(text);
  ExplicitModel x = expand(m, {});
  DeadlockSets dl = deadlock_states(x, parse_model_expr("goal", m));
  CHECK(dl.final_states.size() == 1);
  CHECK(dl.early.size() == 1);
}

TEST_CASE("induced chain keeps exactly the chosen distribution") {
  const char* text = R"(
x : [0..2] init 0;
[a] x=0 -> (x'=1);
[b] x=0 -> (x'=2);
[stay] x>0 -> true;
)";
  ProcessModel m = parse_model(text);
  ExplicitModel x = expand(m, {});
  REQUIRE(x.trans[0].actions.size() == 2);
  Policy pi;
  pi.choice.assign(x.num_states(), 0);
  pi.choice[0] = 1;  // pick [b]
  ExplicitModel d = induced_dtmc(x, pi);
  CHECK(d.kind == ModelKind::Dtmc);
  REQUIRE(d.trans[0].actions.size() == 1);
  CHECK(d.trans[0].actions[0].label == "b");

  // A deterministic MDP induces an isomorphic chain under its only policy.
  Policy all0;
  all0.choice.assign(x.num_states(), 0);
  ExplicitModel d0 = induced_dtmc(x, all0);
  CHECK(d0.num_states() == x.num_states());
}

TEST_CASE("expansion is deterministic") {
  ProcessModel m = parse_model(kCoin);
  ExplicitModel a = expand(m, {});
  ExplicitModel b = expand(m, {});
  REQUIRE(a.num_states() == b.num_states());
  for (std::size_t s = 0; s < a.num_states(); ++s) {
    CHECK(a.states[s].v == b.states[s].v);
    REQUIRE(a.trans[s].actions.size() == b.trans[s].actions.size());
    for (std::size_t k = 0; k < a.trans[s].actions.size(); ++k)
      CHECK(a.trans[s].actions[k].succ == b.trans[s].actions[k].succ);
  }
}

TEST_CASE("state cap is an error, not a truncation") {
  const char* text = R"(
x : [0..1000] init 0;
[go] x<1000 -> (x'=x+1);
[stay] x=1000 -> true;
)";
  ProcessModel m = parse_model(text);
  ExpandOptions opts;
  opts.state_cap = 10;
  CHECK_THROWS_AS(expand(m, {}, opts), ModelError);
}

TEST_CASE("print-parse round trip is structurally faithful") {
  for (const char* text : {kCoin, R"(
const int lim = 3;
x : [0..lim] init 0;
formula top = x=lim;
label "done" = top;
[up] !top -> 0.25:(x'=x+1) + 0.75:(x'=0);
[stay] top -> true;
rewards "steps"
  [up] true : 1;
endrewards
)"}) {
    ProcessModel m = parse_model(text);
    ProcessModel m2 = parse_model(print_model(m));
    CHECK(print_model(m2) == print_model(m));
    ExplicitModel a = expand(m, {});
    ExplicitModel b = expand(m2, {});
    CHECK(a.num_states() == b.num_states());
  }
}

TEST_CASE("every reachable state respects variable bounds") {
  ProcessModel m = parse_model(R"(
x : [2..5] init 3;
[up] x<5 -> 0.5:(x'=x+1) + 0.5:(x'=2);
[stay] x=5 -> true;
)");
  ExplicitModel x = expand(m, {});
  for (const auto& s : x.states) {
    CHECK(s.v[0] >= 2);
    CHECK(s.v[0] <= 5);
  }
}

TEST_CASE("chain rows sum to one") {
  ProcessModel m = parse_model(kCoin);
  m.kind = ModelKind::Dtmc;
  ExplicitModel x = expand(m, {});
  for (const auto& st : x.trans) {
    for (const auto& a : st.actions) {
      double sum = 0;
      for (auto [t, p] : a.succ) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
