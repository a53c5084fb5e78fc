#pragma once

// Test-only oracles, kept independent of the library's iterative engines:
// exhaustive policy enumeration over small MDPs with dense linear solves, and
// a direct-from-the-definitions evaluator for trace formulas.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "safectrl/mc.hpp"
#include "safectrl/model.hpp"
#include "safectrl/mtl.hpp"
#include "safectrl/rng.hpp"

namespace oracle {

using safectrl::ExplicitModel;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    double d = a[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      if (a[r][col] == 0.0) continue;
      double f = a[r][col] / d;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

// Markov chain as dense rows; deadlock rows are absorbing.
struct Chain {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

  std::size_t n() const { return rows.size(); }

  static Chain induced(const ExplicitModel& x, const std::vector<std::size_t>& pick) {
    Chain c;
    c.rows.resize(x.num_states());
    for (std::uint32_t s = 0; s < x.num_states(); ++s) {
      if (x.trans[s].actions.empty()) {
        c.rows[s].push_back({s, 1.0});
      } else {
        c.rows[s] = x.trans[s].actions[pick[s]].succ;
      }
    }
    return c;
  }
};

// Exact reachability probability of `psi` through `phi` by linear solve.
inline std::vector<double> chain_until(const Chain& c, const std::vector<bool>& phi,
                                       const std::vector<bool>& psi) {
  const std::size_t n = c.n();
  // States with no phi-path to psi get probability zero.
  std::vector<bool> can(n, false);
  for (std::size_t s = 0; s < n; ++s) can[s] = psi[s];
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (can[s] || !phi[s] || psi[s]) continue;
      for (auto [t, p] : c.rows[s])
        if (p > 0 && can[t]) {
          can[s] = true;
          grew = true;
          break;
        }
    }
  }
  std::vector<int> idx(n, -1);
  std::vector<std::size_t> maybe;
  for (std::size_t s = 0; s < n; ++s)
    if (can[s] && !psi[s]) {
      idx[s] = int(maybe.size());
      maybe.push_back(s);
    }
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    if (psi[s]) out[s] = 1.0;
  if (!maybe.empty()) {
    std::vector<std::vector<double>> a(maybe.size(), std::vector<double>(maybe.size(), 0.0));
    std::vector<double> b(maybe.size(), 0.0);
    for (std::size_t r = 0; r < maybe.size(); ++r) {
      a[r][r] = 1.0;
      for (auto [t, p] : c.rows[maybe[r]]) {
        if (psi[t])
          b[r] += p;
        else if (idx[t] >= 0)
          a[r][std::size_t(idx[t])] -= p;
      }
    }
    std::vector<double> x = solve_dense(a, b);
    for (std::size_t r = 0; r < maybe.size(); ++r) out[maybe[r]] = x[r];
  }
  return out;
}

// Expected reward to `goal`; infinite where the chain misses the goal with
// positive probability.
inline std::vector<double> chain_reach_reward(const ExplicitModel& x,
                                              const std::vector<std::size_t>& pick,
                                              int reward_index,
                                              const std::vector<bool>& goal) {
  Chain c = Chain::induced(x, pick);
  std::vector<bool> tt(c.n(), true);
  std::vector<double> reach = chain_until(c, tt, goal);
  std::vector<double> out(c.n(), 0.0);
  std::vector<int> idx(c.n(), -1);
  std::vector<std::size_t> maybe;
  for (std::size_t s = 0; s < c.n(); ++s) {
    if (goal[s]) continue;
    if (reach[s] < 1.0 - 1e-9) {
      out[s] = kInf;
    } else {
      idx[s] = int(maybe.size());
      maybe.push_back(s);
    }
  }
  if (maybe.empty()) return out;
  std::vector<std::vector<double>> a(maybe.size(), std::vector<double>(maybe.size(), 0.0));
  std::vector<double> b(maybe.size(), 0.0);
  for (std::size_t r = 0; r < maybe.size(); ++r) {
    std::size_t s = maybe[r];
    a[r][r] = 1.0;
    b[r] = x.trans[s].actions.empty() ? 0.0
                                      : x.trans[s].actions[pick[s]].rewards[std::size_t(reward_index)];
    for (auto [t, p] : c.rows[s]) {
      if (goal[t]) continue;
      if (idx[t] >= 0) a[r][std::size_t(idx[t])] -= p;
    }
  }
  std::vector<double> sol = solve_dense(a, b);
  for (std::size_t r = 0; r < maybe.size(); ++r) out[maybe[r]] = sol[r];
  return out;
}

// Total expected reward; infinite if a reachable recurrent class of the
// induced chain carries positive reward.
inline std::vector<double> chain_total_reward(const ExplicitModel& x,
                                              const std::vector<std::size_t>& pick,
                                              int reward_index) {
  Chain c = Chain::induced(x, pick);
  const std::size_t n = c.n();
  auto reward_of = [&](std::size_t s) {
    return x.trans[s].actions.empty()
               ? 0.0
               : x.trans[s].actions[pick[s]].rewards[std::size_t(reward_index)];
  };
  // Recurrent states: those that cannot reach a state from which they cannot
  // return; detect via simple SCC-free approach: s is transient iff it can
  // reach some state that cannot reach s. Small n, so do it quadratically.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (auto [t, p] : c.rows[u])
        if (p > 0 && !reach[s][t]) {
          reach[s][t] = true;
          stack.push_back(t);
        }
    }
  }
  std::vector<bool> recurrent(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    bool rec = true;
    for (std::size_t t = 0; t < n && rec; ++t)
      if (reach[s][t] && !reach[t][s]) rec = false;
    recurrent[s] = rec;
  }
  for (std::size_t s = 0; s < n; ++s)
    if (recurrent[s] && reach[0][s] && reward_of(s) > 0.0)
      return std::vector<double>(n, kInf);  // caller only reads the initial state

  std::vector<int> idx(n, -1);
  std::vector<std::size_t> tr;
  for (std::size_t s = 0; s < n; ++s) {
    if (recurrent[s]) continue;
    idx[s] = int(tr.size());
    tr.push_back(s);
  }
  std::vector<double> out(n, 0.0);
  if (tr.empty()) return out;
  std::vector<std::vector<double>> a(tr.size(), std::vector<double>(tr.size(), 0.0));
  std::vector<double> b(tr.size(), 0.0);
  for (std::size_t r = 0; r < tr.size(); ++r) {
    std::size_t s = tr[r];
    a[r][r] = 1.0;
    b[r] = reward_of(s);
    for (auto [t, p] : c.rows[s])
      if (idx[t] >= 0) a[r][std::size_t(idx[t])] -= p;
  }
  std::vector<double> sol = solve_dense(a, b);
  for (std::size_t r = 0; r < tr.size(); ++r) out[tr[r]] = sol[r];
  return out;
}

// Enumerates every deterministic memoryless policy.
inline void each_policy(const ExplicitModel& x,
                        const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> pick(x.num_states(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t s) {
    if (s == x.num_states()) {
      fn(pick);
      return;
    }
    std::size_t k = std::max<std::size_t>(1, x.trans[s].actions.size());
    for (std::size_t a = 0; a < k; ++a) {
      pick[s] = a;
      rec(s + 1);
    }
  };
  rec(0);
}

struct PolicyExtremes {
  double pmin = 1.0, pmax = 0.0;
  double wmin = 1.0;                 // weak-until minimum
  double rmax_reach = -kInf;         // reach reward maximum
  double rmax_total = -kInf;         // total reward maximum
};

inline PolicyExtremes policy_extremes(const ExplicitModel& x, const std::vector<bool>& phi,
                                      const std::vector<bool>& psi, int reward_index) {
  PolicyExtremes e;
  e.pmin = kInf;
  e.pmax = -kInf;
  e.wmin = kInf;
  std::vector<bool> tt(x.num_states(), true);
  std::vector<bool> wl(x.num_states()), wr(x.num_states());
  for (std::size_t s = 0; s < x.num_states(); ++s) {
    wl[s] = phi[s] && !psi[s];
    wr[s] = !phi[s] && !psi[s];
  }
  each_policy(x, [&](const std::vector<std::size_t>& pick) {
    Chain c = Chain::induced(x, pick);
    double pu = chain_until(c, phi, psi)[x.initial];
    e.pmin = std::min(e.pmin, pu);
    e.pmax = std::max(e.pmax, pu);
    double w = 1.0 - chain_until(c, wl, wr)[x.initial];
    e.wmin = std::min(e.wmin, w);
    if (reward_index >= 0) {
      double rr = chain_reach_reward(x, pick, reward_index, psi)[x.initial];
      e.rmax_reach = std::max(e.rmax_reach, rr);
      double rt = chain_total_reward(x, pick, reward_index)[x.initial];
      e.rmax_total = std::max(e.rmax_total, rt);
    }
  });
  return e;
}

// ---- naive trace-formula evaluation, straight from the definitions --------

inline bool naive_mtl(const safectrl::TimedTrace& t, const safectrl::Mtl& f, std::size_t i) {
  using safectrl::MtlKind;
  switch (f->kind) {
    case MtlKind::Atom:
      return safectrl::eval_bool(f->atom, t.records[i].snap);
    case MtlKind::Not:
      return !naive_mtl(t, f->a, i);
    case MtlKind::And:
      return naive_mtl(t, f->a, i) && naive_mtl(t, f->b, i);
    case MtlKind::Or:
      return naive_mtl(t, f->a, i) || naive_mtl(t, f->b, i);
    case MtlKind::Implies:
      return !naive_mtl(t, f->a, i) || naive_mtl(t, f->b, i);
    case MtlKind::Globally:
      for (std::size_t j = i; j < t.records.size(); ++j)
        if (!naive_mtl(t, f->a, j)) return false;
      return true;
    case MtlKind::Finally:
      for (std::size_t j = i; j < t.records.size(); ++j)
        if (naive_mtl(t, f->a, j)) return true;
      return false;
    case MtlKind::Until:
      for (std::size_t j = i; j < t.records.size(); ++j) {
        double dt = t.records[j].ms - t.records[i].ms;
        bool in_window = !f->has_interval || (dt >= f->lo && dt <= f->hi);
        if (in_window && naive_mtl(t, f->b, j)) {
          bool all = true;
          for (std::size_t k = i; k < j; ++k)
            if (!naive_mtl(t, f->a, k)) all = false;
          if (all) return true;
        }
      }
      return false;
  }
  return false;
}

// ---- random fixtures -------------------------------------------------------

// Random MDP with a bounded policy count, built directly as an ExplicitModel.
inline ExplicitModel random_mdp(safectrl::Rng& rng, std::size_t max_states, int max_actions,
                                bool with_rewards, double policy_cap = 20000.0) {
  using namespace safectrl;
  while (true) {
    std::size_t n = 3 + rng.below(max_states - 2);
    ExplicitModel x;
    x.kind = ModelKind::Mdp;
    x.initial = 0;
    x.reward_names.push_back("r");
    double policies = 1.0;
    for (std::uint32_t s = 0; s < n; ++s) {
      State st;
      st.v = {std::int64_t(s)};
      x.states.push_back(st);
      x.trans.emplace_back();
      std::size_t acts = 1 + rng.below(std::uint64_t(max_actions));
      policies *= double(acts);
      for (std::size_t a = 0; a < acts; ++a) {
        ExplicitAction act;
        act.label = std::string(1, char('a' + a));
        std::size_t succs = 1 + rng.below(2);
        double total = 0.0;
        std::vector<double> w(succs);
        for (auto& v : w) {
          v = 0.05 + rng.uniform();
          total += v;
        }
        for (std::size_t k = 0; k < succs; ++k) {
          std::uint32_t t = std::uint32_t(rng.below(n));
          double p = w[k] / total;
          bool merged = false;
          for (auto& [u, q] : act.succ)
            if (u == t) {
              q += p;
              merged = true;
            }
          if (!merged) act.succ.emplace_back(t, p);
        }
        act.rewards.push_back(with_rewards ? double(rng.below(4)) : 0.0);
        x.trans[s].actions.push_back(std::move(act));
      }
    }
    VarDecl d;
    d.name = "s";
    d.kind = VarKind::BoundedInt;
    d.lo = 0;
    d.hi = std::int64_t(n) - 1;
    d.init = 0;
    x.decls.vars.push_back(d);
    if (policies <= policy_cap) return x;
  }
}

inline ExplicitModel random_dtmc(safectrl::Rng& rng, std::size_t max_states) {
  ExplicitModel x = random_mdp(rng, max_states, 1, false);
  x.kind = safectrl::ModelKind::Dtmc;
  return x;
}

}  // namespace oracle
