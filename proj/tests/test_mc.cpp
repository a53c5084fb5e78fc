#include "doctest.h"
#include "safectrl/mc.hpp"
#include "support/oracles.hpp"

using namespace safectrl;

namespace {

ExplicitModel chain_of(const std::string& text) {
  ProcessModel m = parse_model(text);
  m.kind = ModelKind::Dtmc;
  return expand(m, {});
}

ExplicitModel mdp_of(const std::string& text) {
  ProcessModel m = parse_model(text);
  return expand(m, {});
}

std::vector<bool> sat(const ExplicitModel& x, const std::string& e) {
  return x.sat_expr(parse_expr(e, x.decls));
}

}  // namespace

TEST_CASE("reachability on a two-outcome chain") {
  ExplicitModel x = chain_of(R"(
s : [0..2] init 0;
[split] s=0 -> 0.2:(s'=1) + 0.8:(s'=2);
[g] s=1 -> true;
[t] s=2 -> true;
)");
  auto v = prob_path(x, PathKind::Finally, sat(x, "true"), sat(x, "s=1"), -1, OptMode::Exact);
  CHECK(v[x.initial] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("almost-sure absorption") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[flip] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[g] s=1 -> true;
)");
  auto v = prob_path(x, PathKind::Finally, sat(x, "true"), sat(x, "s=1"), -1, OptMode::Exact);
  CHECK(v[x.initial] == doctest::Approx(1.0));
}

TEST_CASE("min and max reachability on the two-action fixture") {
  ExplicitModel x = mdp_of(R"(
s : [0..2] init 0;
[a] s=0 -> 0.5:(s'=1) + 0.5:(s'=2);
[b] s=0 -> 0.4:(s'=1) + 0.6:(s'=0);
[g] s=1 -> true;
[t] s=2 -> true;
)");
  std::vector<bool> goal = sat(x, "s=1");
  std::vector<bool> tt = sat(x, "true");
  auto vmax = prob_path(x, PathKind::Finally, tt, goal, -1, OptMode::Max);
  auto vmin = prob_path(x, PathKind::Finally, tt, goal, -1, OptMode::Min);
  CHECK(vmax[x.initial] == doctest::Approx(1.0));
  CHECK(vmin[x.initial] == doctest::Approx(0.5));

  oracle::PolicyExtremes e = oracle::policy_extremes(x, tt, goal, -1);
  CHECK(vmax[x.initial] == doctest::Approx(e.pmax).epsilon(1e-6));
  CHECK(vmin[x.initial] == doctest::Approx(e.pmin).epsilon(1e-6));
}

TEST_CASE("weak until degenerate cases") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[m] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[n] s=1 -> (s'=0);
)");
  // phi everywhere, psi empty: G phi, probability one.
  auto v = prob_path(x, PathKind::WeakUntil, sat(x, "true"), sat(x, "false"), -1, OptMode::Exact);
  CHECK(v[x.initial] == doctest::Approx(1.0));
  // psi holds initially: satisfied immediately.
  auto w = prob_path(x, PathKind::WeakUntil, sat(x, "false"), sat(x, "s=0"), -1, OptMode::Exact);
  CHECK(w[x.initial] == doctest::Approx(1.0));
}

TEST_CASE("weak until decomposes into until plus globally on chains") {
  ExplicitModel x = chain_of(R"(
s : [0..2] init 0;
[a] s=0 -> 0.3:(s'=1) + 0.4:(s'=2) + 0.3:(s'=0);
[b] s=1 -> true;
[c] s=2 -> true;
)");
  std::vector<bool> phi = sat(x, "s=0 | s=2");
  std::vector<bool> psi = sat(x, "s=2");
  auto w = prob_path(x, PathKind::WeakUntil, phi, psi, -1, OptMode::Exact);
  auto u = prob_path(x, PathKind::Until, phi, psi, -1, OptMode::Exact);
  auto g = prob_path(x, PathKind::Globally, phi, phi, -1, OptMode::Exact);
  // On this fixture the G phi paths and the U psi paths are disjoint.
  CHECK(w[x.initial] == doctest::Approx(u[x.initial] + 0.0).epsilon(1e-8));
  CHECK(w[x.initial] >= u[x.initial]);
  CHECK(g[x.initial] <= w[x.initial] + 1e-9);
}

TEST_CASE("duality of weak until and until on random chains") {
  Rng rng(4242);
  for (int it = 0; it < 25; ++it) {
    ExplicitModel x = oracle::random_dtmc(rng, 30);
    std::vector<bool> phi(x.num_states()), psi(x.num_states());
    for (std::size_t s = 0; s < x.num_states(); ++s) {
      phi[s] = rng.below(4) != 0;
      psi[s] = rng.below(4) == 0;
    }
    auto w = prob_path(x, PathKind::WeakUntil, phi, psi, -1, OptMode::Exact);
    std::vector<bool> l(x.num_states()), r(x.num_states());
    for (std::size_t s = 0; s < x.num_states(); ++s) {
      l[s] = phi[s] && !psi[s];
      r[s] = !phi[s] && !psi[s];
    }
    auto u = prob_path(x, PathKind::Until, l, r, -1, OptMode::Exact);
    for (std::size_t s = 0; s < x.num_states(); ++s)
      CHECK(w[s] + u[s] == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("expected reward to absorption matches the geometric series") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[step] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[done] s=1 -> true;
rewards "steps"
  [step] true : 1;
endrewards
)");
  std::vector<bool> goal = sat(x, "s=1");
  auto v = expected_reward(x, 0, RewardObj::ReachGoal, -1, &goal, OptMode::Exact);
  CHECK(v[x.initial] == doctest::Approx(2.0).epsilon(1e-6));

  SUBCASE("zero rewards stay zero") {
    ExplicitModel y = chain_of(R"(
s : [0..1] init 0;
[step] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[done] s=1 -> true;
rewards "zip"
endrewards
)");
    std::vector<bool> g2 = sat(y, "s=1");
    auto w = expected_reward(y, 0, RewardObj::ReachGoal, -1, &g2, OptMode::Exact);
    CHECK(w[y.initial] == doctest::Approx(0.0));
  }

  SUBCASE("zero-step bounded accumulation is zero") {
    auto w = expected_reward(x, 0, RewardObj::CumulativeBounded, 0, nullptr, OptMode::Exact);
    CHECK(w[x.initial] == doctest::Approx(0.0));
  }
}

TEST_CASE("unreachable goal is an infinite reachability reward") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[stay] s=0 -> true;
rewards "r"
  [stay] true : 1;
endrewards
)");
  std::vector<bool> goal = sat(x, "s=1");
  auto v = expected_reward(x, 0, RewardObj::ReachGoal, -1, &goal, OptMode::Exact);
  CHECK(std::isinf(v[x.initial]));
}

TEST_CASE("positive recurrent reward makes total reward infinite") {
  ExplicitModel x = chain_of(R"(
s : [0..0] init 0;
[loop] s=0 -> true;
rewards "r"
  [loop] true : 1;
endrewards
)");
  CHECK_THROWS_AS(expected_reward(x, 0, RewardObj::Cumulative, -1, nullptr, OptMode::Exact),
                  ModelError);
}

TEST_CASE("steady state of the symmetric flip is one half") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[f] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[g] s=1 -> 0.5:(s'=0) + 0.5:(s'=1);
)");
  double v = steady_state(x, parse_expr("s=0", x.decls));
  CHECK(v == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("steady state of a certain absorber is one") {
  ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
[go] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[stay] s=1 -> true;
)");
  CHECK(steady_state(x, parse_expr("s=1", x.decls)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("steady state splits over two absorbing classes by reachability") {
  ExplicitModel x = chain_of(R"(
s : [0..2] init 0;
[go] s=0 -> 0.3:(s'=1) + 0.7:(s'=2);
[a] s=1 -> true;
[b] s=2 -> true;
)");
  CHECK(steady_state(x, parse_expr("s=1", x.decls)) == doctest::Approx(0.3).epsilon(1e-8));
  // A hard period-two cycle must still converge.
  ExplicitModel y = chain_of(R"(
s : [0..1] init 0;
[f] s=0 -> (s'=1);
[g] s=1 -> (s'=0);
)");
  CHECK(steady_state(y, parse_expr("s=0", y.decls)) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("accident freedom aggregates over the unsafe region") {
  SUBCASE("mishap unreachable") {
    ExplicitModel x = chain_of(R"(
s : [0..1] init 0;
bad : bool init false;
[go] s=0 -> (s'=1);
[stay] s=1 -> true;
)");
    Triple t = accident_freedom(x, parse_expr("s=0", x.decls), parse_expr("bad", x.decls),
                                parse_expr("s=1", x.decls));
    CHECK(t.min == doctest::Approx(1.0));
    CHECK(t.mean == doctest::Approx(1.0));
    CHECK(t.max == doctest::Approx(1.0));
  }
  SUBCASE("direct split") {
    ExplicitModel x = chain_of(R"(
s : [0..2] init 0;
[go] s=0 -> 0.2:(s'=2) + 0.8:(s'=1);
[ok] s=1 -> true;
[boom] s=2 -> true;
)");
    Triple t = accident_freedom(x, parse_expr("s=0", x.decls), parse_expr("s=2", x.decls),
                                parse_expr("s=1", x.decls));
    CHECK(t.min == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(t.max == doctest::Approx(0.8).epsilon(1e-8));
  }
  SUBCASE("empty region is an error") {
    ExplicitModel x = chain_of("s : [0..0] init 0;\n[l] true -> true;\n");
    CHECK_THROWS_AS(accident_freedom(x, parse_expr("false", x.decls),
                                     parse_expr("false", x.decls), parse_expr("true", x.decls)),
                    ModelError);
  }
}

TEST_CASE("optimal policy picks the surer action") {
  ExplicitModel x = mdp_of(R"(
s : [0..2] init 0;
[a] s=0 -> 0.5:(s'=1) + 0.5:(s'=2);
[b] s=0 -> 0.4:(s'=1) + 0.6:(s'=0);
[g] s=1 -> true;
[t] s=2 -> true;
)");
  PropertyQuery q = parse_property("Pmax=? [ F s=1 ]", x);
  SynthResult r = synth_optimal_policy(x, q);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(x.trans[0].actions[std::size_t(r.policy.choice[0])].label == "b");

  SUBCASE("single-action states have the unique policy") {
    ExplicitModel y = mdp_of(R"(
s : [0..1] init 0;
[only] s=0 -> (s'=1);
[stay] s=1 -> true;
)");
    SynthResult r2 = synth_optimal_policy(y, parse_property("Pmax=? [ F s=1 ]", y));
    CHECK(r2.policy.choice[0] == 0);
    CHECK(r2.value == doctest::Approx(1.0));
  }

  SUBCASE("maximising an infinite total reward is an error") {
    ExplicitModel y = mdp_of(R"(
s : [0..0] init 0;
[loop] true -> true;
rewards "r"
  [loop] true : 2;
endrewards
)");
    CHECK_THROWS_AS(synth_optimal_policy(y, parse_property("R{\"r\"}max=? [ C ]", y)),
                    ModelError);
  }
}

TEST_CASE("qualitative path quantifiers on the action graph") {
  ExplicitModel x = mdp_of(R"(
s : [0..2] init 0;
[a] s=0 -> 0.5:(s'=1) + 0.5:(s'=0);
[b] s=0 -> (s'=2);
[g] s=1 -> true;
[t] s=2 -> true;
)");
  CHECK(check_query(x, parse_property("E [ F s=1 ]", x)).truth);
  CHECK(check_query(x, parse_property("E [ F s=2 ]", x)).truth);
  CHECK_FALSE(check_query(x, parse_property("A [ F s=1 ]", x)).truth);
  CHECK(check_query(x, parse_property("A [ F (s=1 | s=2 | s=0) ]", x)).truth);
  CHECK(check_query(x, parse_property("E [ G s!=1 ]", x)).truth);
  CHECK(check_query(x, parse_property("A [ s<2 U<=1 (s=1 | s=2 | s=0) ]", x)).truth);
  CHECK(check_query(x, parse_property("E [ X s=2 ]", x)).truth);
  CHECK_FALSE(check_query(x, parse_property("A [ X s=2 ]", x)).truth);
  CHECK(check_query(x, parse_property("A [ X s<=2 ]", x)).truth);
}

TEST_CASE("monotonicity: larger targets never lower max reachability") {
  Rng rng(777);
  for (int it = 0; it < 20; ++it) {
    ExplicitModel x = oracle::random_mdp(rng, 9, 3, false);
    std::vector<bool> small(x.num_states()), big(x.num_states()), tt(x.num_states(), true);
    for (std::size_t s = 0; s < x.num_states(); ++s) {
      small[s] = rng.below(4) == 0;
      big[s] = small[s] || rng.below(3) == 0;
    }
    auto vs = prob_path(x, PathKind::Finally, tt, small, -1, OptMode::Max);
    auto vb = prob_path(x, PathKind::Finally, tt, big, -1, OptMode::Max);
    for (std::size_t s = 0; s < x.num_states(); ++s) {
      CHECK(vb[s] >= vs[s] - 1e-9);
      CHECK(vs[s] >= -1e-9);
      CHECK(vs[s] <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("bounded until takes exactly k steps") {
  ExplicitModel x = chain_of(R"(
s : [0..3] init 0;
[a] s<3 -> (s'=s+1);
[stay] s=3 -> true;
)");
  std::vector<bool> tt = sat(x, "true");
  std::vector<bool> goal = sat(x, "s=3");
  CHECK(prob_path(x, PathKind::Until, tt, goal, 2, OptMode::Exact)[0] == doctest::Approx(0.0));
  CHECK(prob_path(x, PathKind::Until, tt, goal, 3, OptMode::Exact)[0] == doctest::Approx(1.0));
}

TEST_CASE("steady-state masses inside a recurrent class sum to one") {
  Rng rng(31);
  for (int it = 0; it < 10; ++it) {
    ExplicitModel x = oracle::random_dtmc(rng, 40);
    double all = steady_state(x, parse_expr("true", x.decls));
    CHECK(all == doctest::Approx(1.0).epsilon(1e-8));
  }
}
