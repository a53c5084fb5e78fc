#include "safectrl/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace safectrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTie = 1e-9;

// Action-less states behave as absorbing: a virtual self-loop with no label
// and zero reward. All algorithms below go through this view.
struct View {
  const ExplicitModel& x;
  explicit View(const ExplicitModel& m) : x(m) {}

  std::size_t n() const { return x.num_states(); }

  std::size_t nacts(std::uint32_t s) const {
    std::size_t k = x.trans[s].actions.size();
    return k == 0 ? 1 : k;
  }

  bool is_virtual(std::uint32_t s) const { return x.trans[s].actions.empty(); }

  // Successor list of action a of state s; for the virtual action the single
  // successor is s itself.
  template <typename Fn>
  void each_succ(std::uint32_t s, std::size_t a, Fn&& fn) const {
    if (is_virtual(s)) {
      fn(s, 1.0);
      return;
    }
    for (const auto& [t, p] : x.trans[s].actions[a].succ) fn(t, p);
  }

  double reward(std::uint32_t s, std::size_t a, int rk) const {
    if (is_virtual(s)) return 0.0;
    return x.trans[s].actions[a].rewards[std::size_t(rk)];
  }

  const std::string& label(std::uint32_t s, std::size_t a) const {
    static const std::string none;
    if (is_virtual(s)) return none;
    return x.trans[s].actions[a].label;
  }

  std::vector<std::vector<std::uint32_t>> predecessors() const {
    std::vector<std::vector<std::uint32_t>> pre(n());
    for (std::uint32_t s = 0; s < n(); ++s)
      for (std::size_t a = 0; a < nacts(s); ++a)
        each_succ(s, a, [&](std::uint32_t t, double) { pre[t].push_back(s); });
    for (auto& v : pre) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return pre;
  }
};

std::vector<bool> vec_not(const std::vector<bool>& a) {
  std::vector<bool> r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = !a[k];
  return r;
}

std::vector<bool> vec_and(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::vector<bool> r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] && b[k];
  return r;
}

std::vector<bool> vec_or(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::vector<bool> r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] || b[k];
  return r;
}

// ----- qualitative sets ------------------------------------------------

// mu Z. psi \/ (phi /\ EX Z): states with some path into psi through phi.
std::vector<bool> exists_until(const View& v, const std::vector<bool>& phi,
                               const std::vector<bool>& psi) {
  auto pre = v.predecessors();
  std::vector<bool> z(v.n(), false);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < v.n(); ++s)
    if (psi[s]) {
      z[s] = true;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    std::uint32_t t = stack.back();
    stack.pop_back();
    for (std::uint32_t s : pre[t])
      if (!z[s] && phi[s]) {
        z[s] = true;
        stack.push_back(s);
      }
  }
  return z;
}

// nu Z. phi /\ EX Z, via graph-level successor counts and a removal worklist.
std::vector<bool> exists_globally(const View& v, const std::vector<bool>& phi) {
  std::vector<bool> z = phi;
  std::vector<std::vector<std::uint32_t>> succ(v.n()), pre(v.n());
  for (std::uint32_t s = 0; s < v.n(); ++s) {
    if (!z[s]) continue;
    std::vector<std::uint32_t> out;
    for (std::size_t a = 0; a < v.nacts(s); ++a)
      v.each_succ(s, a, [&](std::uint32_t t, double) { out.push_back(t); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    succ[s] = std::move(out);
  }
  std::vector<std::int32_t> count(v.n(), 0);
  for (std::uint32_t s = 0; s < v.n(); ++s) {
    if (!z[s]) continue;
    for (std::uint32_t t : succ[s])
      if (z[t]) {
        ++count[s];
        pre[t].push_back(s);
      }
  }
  std::vector<std::uint32_t> removal;
  for (std::uint32_t s = 0; s < v.n(); ++s)
    if (z[s] && count[s] == 0) removal.push_back(s);
  while (!removal.empty()) {
    std::uint32_t t = removal.back();
    removal.pop_back();
    z[t] = false;
    for (std::uint32_t s : pre[t]) {
      if (!z[s]) continue;
      if (--count[s] == 0) removal.push_back(s);
    }
  }
  return z;
}

std::vector<bool> exists_next(const View& v, const std::vector<bool>& phi) {
  std::vector<bool> r(v.n(), false);
  for (std::uint32_t s = 0; s < v.n(); ++s)
    for (std::size_t a = 0; a < v.nacts(s) && !r[s]; ++a)
      v.each_succ(s, a, [&](std::uint32_t t, double) { r[s] = r[s] || phi[t]; });
  return r;
}

std::vector<bool> exists_until_bounded(const View& v, const std::vector<bool>& phi,
                                       const std::vector<bool>& psi, long k) {
  std::vector<bool> z = psi;
  for (long j = 0; j < k; ++j) {
    std::vector<bool> nx = exists_next(v, z);
    bool changed = false;
    for (std::uint32_t s = 0; s < v.n(); ++s) {
      bool val = psi[s] || (phi[s] && nx[s]);
      if (val != z[s]) changed = true;
      z[s] = z[s] || val;
    }
    if (!changed) break;
  }
  return z;
}

// Pmax[phi U psi] > 0
std::vector<bool> prob_pos_max(const View& v, const std::vector<bool>& phi,
                               const std::vector<bool>& psi) {
  return exists_until(v, phi, psi);
}

// Pmin[phi U psi] > 0: mu Z. psi \/ (phi /\ forall a: succ(a) meets Z),
// computed with per-action hit flags driven by a worklist.
std::vector<bool> prob_pos_min(const View& v, const std::vector<bool>& phi,
                               const std::vector<bool>& psi) {
  std::vector<bool> z = psi;
  // (state, action) pairs indexed consecutively.
  std::vector<std::size_t> first(v.n() + 1, 0);
  for (std::uint32_t s = 0; s < v.n(); ++s) first[s + 1] = first[s] + v.nacts(s);
  std::vector<bool> hit(first[v.n()], false);
  std::vector<std::int32_t> unsat(v.n(), 0);
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> pre(v.n());
  for (std::uint32_t s = 0; s < v.n(); ++s) {
    unsat[s] = std::int32_t(v.nacts(s));
    for (std::size_t a = 0; a < v.nacts(s); ++a)
      v.each_succ(s, a, [&](std::uint32_t t, double) { pre[t].push_back({s, first[s] + a}); });
  }
  std::vector<std::uint32_t> work;
  for (std::uint32_t s = 0; s < v.n(); ++s)
    if (psi[s]) work.push_back(s);
  while (!work.empty()) {
    std::uint32_t t = work.back();
    work.pop_back();
    for (auto [s, pair_ix] : pre[t]) {
      if (hit[pair_ix]) continue;
      hit[pair_ix] = true;
      if (--unsat[s] == 0 && !z[s] && phi[s]) {
        z[s] = true;
        work.push_back(s);
      }
    }
  }
  return z;
}

// Pmax[phi U psi] = 1: nu Y. mu Z. psi \/ (phi /\ exists a: succ(a) in Y /\ succ(a) meets Z)
std::vector<bool> prob1_max(const View& v, const std::vector<bool>& phi,
                            const std::vector<bool>& psi) {
  std::vector<bool> y(v.n(), true);
  while (true) {
    std::vector<bool> z = psi;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::uint32_t s = 0; s < v.n(); ++s) {
        if (z[s] || !phi[s] || !y[s]) continue;
        bool ok = false;
        for (std::size_t a = 0; a < v.nacts(s) && !ok; ++a) {
          bool inside = true, meets = false;
          v.each_succ(s, a, [&](std::uint32_t t, double) {
            inside = inside && y[t];
            meets = meets || z[t];
          });
          ok = inside && meets;
        }
        if (ok) {
          z[s] = true;
          grew = true;
        }
      }
    }
    if (z == y) return y;
    y = z;
  }
}

// Pmin[phi U psi] = 1: nu Y. mu Z. psi \/ (phi /\ forall a: succ(a) in Y /\ succ(a) meets Z)
std::vector<bool> prob1_min(const View& v, const std::vector<bool>& phi,
                            const std::vector<bool>& psi) {
  std::vector<bool> y(v.n(), true);
  while (true) {
    std::vector<bool> z = psi;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::uint32_t s = 0; s < v.n(); ++s) {
        if (z[s] || !phi[s] || !y[s]) continue;
        bool ok = true;
        for (std::size_t a = 0; a < v.nacts(s) && ok; ++a) {
          bool inside = true, meets = false;
          v.each_succ(s, a, [&](std::uint32_t t, double) {
            inside = inside && y[t];
            meets = meets || z[t];
          });
          ok = inside && meets;
        }
        if (ok) {
          z[s] = true;
          grew = true;
        }
      }
    }
    if (z == y) return y;
    y = z;
  }
}

// ----- SCC / BSCC / MEC -------------------------------------------------

// Iterative Tarjan over an arbitrary successor relation.
struct SccResult {
  std::vector<std::int32_t> comp;  // state -> component id
  std::int32_t count = 0;
};

template <typename SuccFn>
SccResult tarjan(std::size_t n, SuccFn&& succ_of) {
  SccResult res;
  res.comp.assign(n, -1);
  std::vector<std::int32_t> low(n, -1), idx(n, -1);
  std::vector<bool> onstack(n, false);
  std::vector<std::uint32_t> stack;
  std::int32_t next_index = 0;

  struct Frame {
    std::uint32_t s;
    std::size_t child = 0;
  };
  std::vector<std::uint32_t> order;  // temp successor buffer per frame

  for (std::uint32_t root = 0; root < n; ++root) {
    if (idx[root] >= 0) continue;
    std::vector<Frame> frames{{root}};
    idx[root] = low[root] = next_index++;
    stack.push_back(root);
    onstack[root] = true;
    std::vector<std::vector<std::uint32_t>> succs{succ_of(root)};
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.child < succs.back().size()) {
        std::uint32_t t = succs.back()[f.child++];
        if (idx[t] < 0) {
          idx[t] = low[t] = next_index++;
          stack.push_back(t);
          onstack[t] = true;
          frames.push_back({t});
          succs.push_back(succ_of(t));
        } else if (onstack[t]) {
          low[f.s] = std::min(low[f.s], idx[t]);
        }
      } else {
        if (low[f.s] == idx[f.s]) {
          while (true) {
            std::uint32_t w = stack.back();
            stack.pop_back();
            onstack[w] = false;
            res.comp[w] = res.count;
            if (w == f.s) break;
          }
          ++res.count;
        }
        std::uint32_t done = f.s;
        frames.pop_back();
        succs.pop_back();
        if (!frames.empty()) low[frames.back().s] = std::min(low[frames.back().s], low[done]);
      }
    }
  }
  return res;
}

std::vector<std::uint32_t> state_succs(const View& v, std::uint32_t s) {
  std::vector<std::uint32_t> out;
  for (std::size_t a = 0; a < v.nacts(s); ++a)
    v.each_succ(s, a, [&](std::uint32_t t, double) { out.push_back(t); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Bottom SCCs of a DTMC (components with no edge leaving them).
std::vector<std::vector<std::uint32_t>> bsccs(const View& v) {
  SccResult scc = tarjan(v.n(), [&](std::uint32_t s) { return state_succs(v, s); });
  std::vector<bool> bottom(std::size_t(scc.count), true);
  for (std::uint32_t s = 0; s < v.n(); ++s)
    for (std::uint32_t t : state_succs(v, s))
      if (scc.comp[t] != scc.comp[s]) bottom[std::size_t(scc.comp[s])] = false;
  std::vector<std::vector<std::uint32_t>> out(std::size_t(scc.count));
  for (std::uint32_t s = 0; s < v.n(); ++s) out[std::size_t(scc.comp[s])].push_back(s);
  std::vector<std::vector<std::uint32_t>> keep;
  for (std::size_t c = 0; c < out.size(); ++c)
    if (bottom[c]) keep.push_back(std::move(out[c]));
  return keep;
}

// Maximal end components: refine SCCs, keeping only actions closed in the
// current candidate component, until stable. Returns per-state component id
// (-1 for states in no MEC).
std::vector<std::int32_t> max_end_components(const View& v) {
  std::vector<std::int32_t> comp(v.n(), 0);
  std::int32_t ncomp = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    // Internal edges: actions whose successors all stay in the same component.
    auto succ_internal = [&](std::uint32_t s) {
      std::vector<std::uint32_t> out;
      if (comp[s] < 0) return out;
      for (std::size_t a = 0; a < v.nacts(s); ++a) {
        bool closed = true;
        v.each_succ(s, a, [&](std::uint32_t t, double) { closed = closed && comp[t] == comp[s]; });
        if (closed) v.each_succ(s, a, [&](std::uint32_t t, double) { out.push_back(t); });
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    };
    SccResult scc = tarjan(v.n(), succ_internal);
    // A state belongs to an end component only if it has a closed action
    // inside its refined SCC and the SCC is nontrivial or self-looping.
    std::vector<std::int32_t> next(v.n(), -1);
    std::vector<int> size(std::size_t(scc.count), 0);
    for (std::uint32_t s = 0; s < v.n(); ++s) ++size[std::size_t(scc.comp[s])];
    for (std::uint32_t s = 0; s < v.n(); ++s) {
      if (comp[s] < 0) continue;
      bool has_closed = false;
      for (std::size_t a = 0; a < v.nacts(s) && !has_closed; ++a) {
        bool closed = true;
        bool self_or_multi = size[std::size_t(scc.comp[s])] > 1;
        v.each_succ(s, a, [&](std::uint32_t t, double) {
          closed = closed && scc.comp[t] == scc.comp[s];
          self_or_multi = self_or_multi || t == s;
        });
        has_closed = closed && self_or_multi;
      }
      next[s] = has_closed ? scc.comp[s] : -1;
    }
    if (next != comp) {
      changed = true;
      comp = std::move(next);
      ncomp = scc.count;
      (void)ncomp;
    }
  }
  return comp;
}

// ----- value iteration --------------------------------------------------

struct ViResult {
  std::vector<double> value;
  std::vector<std::int32_t> arg;  // chosen action per state (for synthesis)
};

double opt_init(OptMode m) { return m == OptMode::Max ? -kInf : kInf; }

bool better(OptMode m, double cand, double best) {
  return m == OptMode::Max ? cand > best : cand < best;
}

// Jacobi sweeps for unbounded until probabilities on the "maybe" region.
ViResult until_values(const View& v, const std::vector<bool>& phi, const std::vector<bool>& psi,
                      OptMode mode, const McOptions& opts) {
  std::vector<bool> s0, s1;
  if (v.x.kind == ModelKind::Dtmc || mode == OptMode::Exact) {
    s0 = vec_not(prob_pos_max(v, phi, psi));
    std::vector<bool> avoid = vec_and(phi, vec_not(psi));
    s1 = vec_not(exists_until(v, avoid, s0));
    for (std::uint32_t s = 0; s < v.n(); ++s)
      if (s0[s]) s1[s] = false;
  } else if (mode == OptMode::Max) {
    s0 = vec_not(prob_pos_max(v, phi, psi));
    s1 = prob1_max(v, phi, psi);
  } else {
    s0 = vec_not(prob_pos_min(v, phi, psi));
    s1 = prob1_min(v, phi, psi);
  }

  ViResult r;
  r.value.assign(v.n(), 0.0);
  r.arg.assign(v.n(), -1);
  for (std::uint32_t s = 0; s < v.n(); ++s)
    if (s1[s]) r.value[s] = 1.0;

  std::vector<double> next(v.n());
  for (long it = 0; it < opts.max_iterations; ++it) {
    double resid = 0.0;
    for (std::uint32_t s = 0; s < v.n(); ++s) {
      if (s0[s] || s1[s]) {
        next[s] = r.value[s];
        continue;
      }
      double best = opt_init(mode == OptMode::Exact ? OptMode::Max : mode);
      for (std::size_t a = 0; a < v.nacts(s); ++a) {
        double q = 0.0;
        v.each_succ(s, a, [&](std::uint32_t t, double p) { q += p * r.value[t]; });
        if (mode == OptMode::Exact) {
          best = q;  // single action
          break;
        }
        if (better(mode, q, best)) best = q;
      }
      next[s] = best == -kInf || best == kInf ? 0.0 : best;
      resid = std::max(resid, std::abs(next[s] - r.value[s]));
    }
    r.value.swap(next);
    if (resid <= opts.epsilon) {
      // Final pass to record argopt choices.
      for (std::uint32_t s = 0; s < v.n(); ++s) {
        if (v.is_virtual(s)) continue;
        std::int32_t best_a = -1;
        double best = opt_init(mode == OptMode::Exact ? OptMode::Max : mode);
        for (std::size_t a = 0; a < v.nacts(s); ++a) {
          double q = 0.0;
          v.each_succ(s, a, [&](std::uint32_t t, double p) { q += p * r.value[t]; });
          if (best_a < 0 || better(mode == OptMode::Exact ? OptMode::Max : mode, q, best)) {
            best = q;
            best_a = std::int32_t(a);
          }
        }
        r.arg[s] = best_a;
      }
      return r;
    }
  }
  throw ModelError("value iteration did not converge within the iteration cap");
}

std::vector<double> bounded_until_values(const View& v, const std::vector<bool>& phi,
                                         const std::vector<bool>& psi, long k, OptMode mode) {
  std::vector<double> val(v.n(), 0.0);
  for (std::uint32_t s = 0; s < v.n(); ++s)
    if (psi[s]) val[s] = 1.0;
  std::vector<double> next(v.n());
  for (long j = 0; j < k; ++j) {
    for (std::uint32_t s = 0; s < v.n(); ++s) {
      if (psi[s]) {
        next[s] = 1.0;
        continue;
      }
      if (!phi[s]) {
        next[s] = 0.0;
        continue;
      }
      double best = opt_init(mode == OptMode::Exact ? OptMode::Max : mode);
      for (std::size_t a = 0; a < v.nacts(s); ++a) {
        double q = 0.0;
        v.each_succ(s, a, [&](std::uint32_t t, double p) { q += p * val[t]; });
        if (mode == OptMode::Exact) {
          best = q;
          break;
        }
        if (better(mode, q, best)) best = q;
      }
      next[s] = best == -kInf || best == kInf ? 0.0 : best;
    }
    val.swap(next);
  }
  return val;
}

}  // namespace

std::vector<double> prob_path(const ExplicitModel& x, PathKind path, const std::vector<bool>& phi,
                              const std::vector<bool>& psi, long bound, OptMode mode,
                              const McOptions& opts) {
  View v(x);
  if (mode == OptMode::Exact && x.kind != ModelKind::Dtmc)
    throw ModelError("plain P=? requires a DTMC; use Pmin/Pmax on an MDP");
  if ((mode == OptMode::Min || mode == OptMode::Max) && x.kind == ModelKind::Dtmc)
    mode = OptMode::Exact;

  switch (path) {
    case PathKind::Next: {
      std::vector<double> val(v.n(), 0.0);
      for (std::uint32_t s = 0; s < v.n(); ++s) {
        double best = opt_init(mode == OptMode::Exact ? OptMode::Max : mode);
        for (std::size_t a = 0; a < v.nacts(s); ++a) {
          double q = 0.0;
          v.each_succ(s, a, [&](std::uint32_t t, double p) { q += psi[t] ? p : 0.0; });
          if (mode == OptMode::Exact) {
            best = q;
            break;
          }
          if (better(mode, q, best)) best = q;
        }
        val[s] = best == -kInf || best == kInf ? 0.0 : best;
      }
      return val;
    }
    case PathKind::Until:
      if (bound >= 0) return bounded_until_values(v, phi, psi, bound, mode);
      return until_values(v, phi, psi, mode, opts).value;
    case PathKind::Finally: {
      std::vector<bool> tt(v.n(), true);
      if (bound >= 0) return bounded_until_values(v, tt, psi, bound, mode);
      return until_values(v, tt, psi, mode, opts).value;
    }
    case PathKind::Globally: {
      // P[G phi] = 1 - P'[F !phi] with the opposite optimisation.
      OptMode dual = mode == OptMode::Max ? OptMode::Min : mode == OptMode::Min ? OptMode::Max : mode;
      std::vector<bool> tt(v.n(), true);
      std::vector<double> f =
          bound >= 0 ? bounded_until_values(v, tt, vec_not(phi), bound, dual)
                     : until_values(v, tt, vec_not(phi), dual, opts).value;
      for (auto& q : f) q = 1.0 - q;
      return f;
    }
    case PathKind::WeakUntil: {
      // P[phi W psi] = 1 - P'[(phi & !psi) U (!phi & !psi)].
      if (bound >= 0) throw ModelError("bounded weak until is not supported");
      OptMode dual = mode == OptMode::Max ? OptMode::Min : mode == OptMode::Min ? OptMode::Max : mode;
      std::vector<bool> l = vec_and(phi, vec_not(psi));
      std::vector<bool> r = vec_and(vec_not(phi), vec_not(psi));
      std::vector<double> u = until_values(v, l, r, dual, opts).value;
      for (auto& q : u) q = 1.0 - q;
      return u;
    }
  }
  throw ModelError("corrupt path formula");
}

std::vector<double> expected_reward(const ExplicitModel& x, int reward_index, RewardObj obj,
                                    long bound, const std::vector<bool>* goal, OptMode mode,
                                    const McOptions& opts) {
  View v(x);
  if (reward_index < 0 || std::size_t(reward_index) >= x.reward_names.size())
    throw ModelError("unknown reward structure");
  if (mode == OptMode::Exact && x.kind != ModelKind::Dtmc)
    throw ModelError("plain R=? requires a DTMC; use Rmin/Rmax on an MDP");
  if ((mode == OptMode::Min || mode == OptMode::Max) && x.kind == ModelKind::Dtmc)
    mode = OptMode::Exact;
  OptMode sweep = mode == OptMode::Exact ? OptMode::Max : mode;

  std::vector<double> val(v.n(), 0.0);
  std::vector<double> next(v.n());

  if (obj == RewardObj::CumulativeBounded) {
    if (bound < 0) throw ModelError("C<=k objective needs a bound");
    for (long j = 0; j < bound; ++j) {
      for (std::uint32_t s = 0; s < v.n(); ++s) {
        double best = opt_init(sweep);
        for (std::size_t a = 0; a < v.nacts(s); ++a) {
          double q = v.reward(s, a, reward_index);
          v.each_succ(s, a, [&](std::uint32_t t, double p) { q += p * val[t]; });
          if (mode == OptMode::Exact) {
            best = q;
            break;
          }
          if (better(mode, q, best)) best = q;
        }
        next[s] = best == -kInf || best == kInf ? 0.0 : best;
      }
      val.swap(next);
    }
    return val;
  }

  std::vector<bool> infinite(v.n(), false);
  if (obj == RewardObj::ReachGoal) {
    if (!goal) throw ModelError("reachability reward needs a goal set");
    // States that reach the goal with probability 1 under every policy have a
    // finite value; everything else is reported as infinite.
    std::vector<bool> tt(v.n(), true);
    std::vector<bool> sure;
    if (x.kind == ModelKind::Dtmc) {
      // P[F goal] = 1: complement of reaching (through !goal) the states with
      // reach probability 0.
      std::vector<bool> zero = vec_not(prob_pos_max(v, tt, *goal));
      sure = vec_not(exists_until(v, vec_not(*goal), zero));
    } else {
      sure = prob1_min(v, tt, *goal);
    }
    infinite = vec_not(sure);
  } else {
    // Total reward: a closed recurrent structure with positive reward makes
    // the supremum infinite.
    if (mode != OptMode::Min) {
      if (x.kind == ModelKind::Dtmc) {
        for (const auto& b : bsccs(v)) {
          double rsum = 0.0;
          for (std::uint32_t s : b)
            for (std::size_t a = 0; a < v.nacts(s); ++a) rsum += v.reward(s, a, reward_index);
          if (rsum > 0.0)
            throw ModelError("infinite total reward: positive reward in a recurrent class");
        }
      } else {
        std::vector<std::int32_t> mec = max_end_components(v);
        for (std::uint32_t s = 0; s < v.n(); ++s) {
          if (mec[s] < 0) continue;
          for (std::size_t a = 0; a < v.nacts(s); ++a) {
            if (v.reward(s, a, reward_index) <= 0.0) continue;
            bool closed = true;
            v.each_succ(s, a, [&](std::uint32_t t, double) { closed = closed && mec[t] == mec[s]; });
            if (closed)
              throw ModelError("infinite total reward: positive reward inside an end component");
          }
        }
      }
    }
  }

  for (long it = 0; it < opts.max_iterations; ++it) {
    double resid = 0.0;
    for (std::uint32_t s = 0; s < v.n(); ++s) {
      if (infinite[s]) {
        next[s] = kInf;
        continue;
      }
      if (obj == RewardObj::ReachGoal && (*goal)[s]) {
        next[s] = 0.0;
        continue;
      }
      double best = opt_init(sweep);
      for (std::size_t a = 0; a < v.nacts(s); ++a) {
        double q = v.reward(s, a, reward_index);
        bool touches_inf = false;
        v.each_succ(s, a, [&](std::uint32_t t, double p) {
          if (infinite[t])
            touches_inf = true;
          else
            q += p * val[t];
        });
        if (touches_inf) q = kInf;
        if (mode == OptMode::Exact) {
          best = q;
          break;
        }
        if (better(mode, q, best)) best = q;
      }
      next[s] = best == -kInf ? 0.0 : best;
      if (std::isfinite(next[s]) && std::isfinite(val[s]))
        resid = std::max(resid, std::abs(next[s] - val[s]));
      else if (std::isfinite(next[s]) != std::isfinite(val[s]))
        resid = std::max(resid, 1.0);
    }
    val.swap(next);
    if (resid <= opts.epsilon) return val;
  }
  throw ModelError("reward iteration did not converge within the iteration cap");
}

namespace {

std::vector<double> reach_probability(const View& v, const std::vector<bool>& target,
                                      const McOptions& opts) {
  std::vector<bool> tt(v.n(), true);
  return until_values(v, tt, target, OptMode::Exact, opts).value;
}

}  // namespace

double steady_state(const ExplicitModel& x, const Expr& ap, const McOptions& opts) {
  if (x.kind != ModelKind::Dtmc) throw ModelError("steady-state requires a DTMC");
  View v(x);
  std::vector<bool> apset = x.sat_expr(ap);

  // Reach weights over the recurrent classes sum to one exactly; normalising
  // strips the value-iteration residual so class masses stay a partition.
  std::vector<std::vector<std::uint32_t>> classes = bsccs(v);
  std::vector<double> weight(classes.size(), 0.0);
  double wsum = 0.0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::vector<bool> inb(v.n(), false);
    for (std::uint32_t s : classes[k]) inb[s] = true;
    weight[k] = reach_probability(v, inb, opts)[x.initial];
    wsum += weight[k];
  }
  if (wsum <= 0.0) throw ModelError("no recurrent class reachable");

  double total = 0.0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& b = classes[k];
    double w = weight[k] / wsum;
    if (w <= 0.0) continue;

    // Stationary distribution of the class, via power iteration on the lazy
    // chain (I+P)/2; same fixpoint, no periodicity issues.
    std::vector<std::size_t> pos(v.n(), 0);
    for (std::size_t k = 0; k < b.size(); ++k) pos[b[k]] = k;
    std::vector<double> pi(b.size(), 1.0 / double(b.size()));
    std::vector<double> nx(b.size());
    for (long it = 0; it < opts.max_iterations; ++it) {
      std::fill(nx.begin(), nx.end(), 0.0);
      for (std::size_t k = 0; k < b.size(); ++k) {
        std::uint32_t s = b[k];
        nx[k] += 0.5 * pi[k];
        v.each_succ(s, 0, [&](std::uint32_t t, double p) { nx[pos[t]] += 0.5 * p * pi[k]; });
      }
      double resid = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) resid = std::max(resid, std::abs(nx[k] - pi[k]));
      pi.swap(nx);
      if (resid <= opts.steady_residual) break;
      if (it + 1 == opts.max_iterations)
        throw ModelError("stationary distribution did not converge");
    }
    double mass = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (apset[b[k]]) mass += pi[k];
    total += w * mass;
  }
  return total;
}

Triple accident_freedom(const ExplicitModel& x, const Expr& xi, const Expr& mishap,
                        const Expr& inact, const McOptions& opts) {
  std::vector<bool> xiset = x.sat_expr(xi);
  bool any = false;
  for (bool b : xiset) any = any || b;
  if (!any) throw ModelError("empty unsafe region");
  std::vector<bool> phi = vec_not(x.sat_expr(mishap));
  std::vector<bool> psi = x.sat_expr(inact);
  OptMode mode = x.kind == ModelKind::Dtmc ? OptMode::Exact : OptMode::Min;
  std::vector<double> val = prob_path(x, PathKind::WeakUntil, phi, psi, -1, mode, opts);
  Triple t;
  t.min = kInf;
  t.max = -kInf;
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::uint32_t s = 0; s < x.num_states(); ++s) {
    if (!xiset[s]) continue;
    t.min = std::min(t.min, val[s]);
    t.max = std::max(t.max, val[s]);
    sum += val[s];
    ++cnt;
  }
  t.mean = sum / double(cnt);
  return t;
}

// ----- state-formula evaluation ------------------------------------------

namespace {

bool cmp_ok(CmpKind c, double v, double bound) {
  switch (c) {
    case CmpKind::Lt:
      return v < bound;
    case CmpKind::Le:
      return v <= bound;
    case CmpKind::Gt:
      return v > bound;
    case CmpKind::Ge:
      return v >= bound;
  }
  return false;
}

std::vector<double> quantitative_vector(const ExplicitModel& x, const Pctl& f,
                                        const McOptions& opts);

std::vector<bool> sat_rec(const ExplicitModel& x, const Pctl& f, const McOptions& opts) {
  View v(x);
  switch (f->kind) {
    case PctlKind::Atom:
      return x.sat_expr(f->atom);
    case PctlKind::Deadlock: {
      std::vector<bool> r(x.num_states(), false);
      for (std::uint32_t s = 0; s < x.num_states(); ++s) r[s] = x.trans[s].actions.empty();
      return r;
    }
    case PctlKind::Not:
      return vec_not(sat_rec(x, f->a, opts));
    case PctlKind::And:
      return vec_and(sat_rec(x, f->a, opts), sat_rec(x, f->b, opts));
    case PctlKind::Or:
      return vec_or(sat_rec(x, f->a, opts), sat_rec(x, f->b, opts));
    case PctlKind::Exists:
    case PctlKind::Forall: {
      // Unary path operators (X, F, G) keep their operand in `left`;
      // U and W use (left, right).
      bool forall = f->kind == PctlKind::Forall;
      std::vector<bool> l = sat_rec(x, f->left, opts);
      std::vector<bool> r = f->right ? sat_rec(x, f->right, opts) : std::vector<bool>();
      std::vector<bool> tt(x.num_states(), true);
      if (!forall) {
        switch (f->path) {
          case PathKind::Next:
            return exists_next(v, l);
          case PathKind::Finally:
            return f->step_bound >= 0 ? exists_until_bounded(v, tt, l, f->step_bound)
                                      : exists_until(v, tt, l);
          case PathKind::Globally:
            return exists_globally(v, l);
          case PathKind::Until:
            return f->step_bound >= 0 ? exists_until_bounded(v, l, r, f->step_bound)
                                      : exists_until(v, l, r);
          case PathKind::WeakUntil:
            return vec_or(exists_until(v, l, r), exists_globally(v, l));
        }
        throw ModelError("corrupt path formula");
      }
      switch (f->path) {
        case PathKind::Next:
          return vec_not(exists_next(v, vec_not(l)));
        case PathKind::Globally:
          return vec_not(exists_until(v, tt, vec_not(l)));
        case PathKind::Finally: {
          if (f->step_bound >= 0) {
            // A F<=k psi = ! E[G<=k !psi]; unroll the bounded G fixpoint.
            std::vector<bool> np = vec_not(l);
            std::vector<bool> z = np;
            for (long j = 0; j < f->step_bound; ++j) z = vec_and(np, exists_next(v, z));
            return vec_not(z);
          }
          return vec_not(exists_globally(v, vec_not(l)));
        }
        case PathKind::Until: {
          if (f->step_bound >= 0) {
            // Backward k-step fixpoint with forall-successor steps.
            std::vector<bool> z = r;
            for (long j = 0; j < f->step_bound; ++j) {
              std::vector<bool> nx(x.num_states());
              for (std::uint32_t s = 0; s < x.num_states(); ++s) {
                bool all = true;
                for (std::size_t a = 0; a < v.nacts(s) && all; ++a)
                  v.each_succ(s, a, [&](std::uint32_t t2, double) { all = all && z[t2]; });
                nx[s] = r[s] || (l[s] && all);
              }
              z.swap(nx);
            }
            return z;
          }
          // A[l U r] = !( E[!r U (!l & !r)] \/ EG !r )
          std::vector<bool> nl = vec_not(l), nr = vec_not(r);
          std::vector<bool> bad =
              vec_or(exists_until(v, nr, vec_and(nl, nr)), exists_globally(v, nr));
          return vec_not(bad);
        }
        case PathKind::WeakUntil: {
          std::vector<bool> nl = vec_not(l), nr = vec_not(r);
          return vec_not(exists_until(v, nr, vec_and(nl, nr)));
        }
      }
      throw ModelError("corrupt path formula");
    }
    case PctlKind::Prob:
    case PctlKind::Reward:
    case PctlKind::Steady: {
      if (!f->has_bound)
        throw ModelError("quantitative '=?' queries are only allowed at the top level");
      if (f->kind == PctlKind::Steady) {
        double val = steady_state(x, f->atom, opts);
        std::vector<bool> r(x.num_states(), cmp_ok(f->cmp, val, f->bound_value));
        return r;
      }
      // A threshold on an MDP constrains the worst case: lower bounds use the
      // minimising policy, upper bounds the maximising one.
      Pctl eff = f;
      if (x.kind == ModelKind::Mdp && f->mode == OptMode::Exact) {
        auto n = std::make_shared<PctlNode>(*f);
        n->mode = (f->cmp == CmpKind::Ge || f->cmp == CmpKind::Gt) ? OptMode::Min : OptMode::Max;
        eff = n;
      }
      std::vector<double> vals = quantitative_vector(x, eff, opts);
      std::vector<bool> r(x.num_states(), false);
      for (std::uint32_t s = 0; s < x.num_states(); ++s)
        r[s] = cmp_ok(f->cmp, vals[s], f->bound_value);
      return r;
    }
  }
  throw ModelError("corrupt state formula");
}

std::vector<double> quantitative_vector(const ExplicitModel& x, const Pctl& f,
                                        const McOptions& opts) {
  if (f->kind == PctlKind::Prob) {
    std::vector<bool> tt(x.num_states(), true);
    switch (f->path) {
      case PathKind::Next:
      case PathKind::Finally: {
        std::vector<bool> target = sat_rec(x, f->left, opts);
        return prob_path(x, f->path, tt, target, f->step_bound, f->mode, opts);
      }
      case PathKind::Globally: {
        std::vector<bool> phi = sat_rec(x, f->left, opts);
        return prob_path(x, f->path, phi, phi, f->step_bound, f->mode, opts);
      }
      case PathKind::Until:
      case PathKind::WeakUntil: {
        std::vector<bool> phi = sat_rec(x, f->left, opts);
        std::vector<bool> psi = sat_rec(x, f->right, opts);
        return prob_path(x, f->path, phi, psi, f->step_bound, f->mode, opts);
      }
    }
    throw ModelError("corrupt path formula");
  }
  if (f->kind == PctlKind::Reward) {
    int rk = x.reward_index(f->reward_name);
    if (rk < 0) throw ModelError("unknown reward structure: " + f->reward_name);
    if (f->robj == RewardObj::ReachGoal) {
      std::vector<bool> goal = sat_rec(x, f->left, opts);
      return expected_reward(x, rk, f->robj, -1, &goal, f->mode, opts);
    }
    return expected_reward(x, rk, f->robj, f->step_bound, nullptr, f->mode, opts);
  }
  throw ModelError("formula has no quantitative vector");
}

}  // namespace

std::vector<bool> sat_states(const ExplicitModel& x, const Pctl& f, const McOptions& opts) {
  return sat_rec(x, f, opts);
}

CheckResult check_query(const ExplicitModel& x, const PropertyQuery& q, const McOptions& opts) {
  CheckResult res;
  const Pctl& f = q.root;
  bool quantitative =
      (f->kind == PctlKind::Prob || f->kind == PctlKind::Reward || f->kind == PctlKind::Steady) &&
      !f->has_bound;

  if (q.filter != PropertyQuery::Filter::None) {
    if (!quantitative || f->kind == PctlKind::Steady)
      throw ModelError("filter(...) expects a quantitative P or R query");
    std::vector<double> vals = quantitative_vector(x, f, opts);
    std::vector<bool> sel = x.sat_expr(q.filter_expr);
    double vmin = kInf, vmax = -kInf, sum = 0.0;
    std::size_t cnt = 0;
    for (std::uint32_t s = 0; s < x.num_states(); ++s) {
      if (!sel[s]) continue;
      vmin = std::min(vmin, vals[s]);
      vmax = std::max(vmax, vals[s]);
      sum += vals[s];
      ++cnt;
    }
    if (cnt == 0) throw ModelError("filter selects no states");
    res.has_aggregate = true;
    res.agg_min = vmin;
    res.agg_max = vmax;
    res.agg_mean = sum / double(cnt);
    res.value = q.filter == PropertyQuery::Filter::Min   ? vmin
                : q.filter == PropertyQuery::Filter::Max ? vmax
                                                         : res.agg_mean;
    return res;
  }

  if (quantitative) {
    if (f->kind == PctlKind::Steady) {
      res.value = steady_state(x, f->atom, opts);
      return res;
    }
    std::vector<double> vals = quantitative_vector(x, f, opts);
    res.value = vals[x.initial];
    return res;
  }

  std::vector<bool> sat = sat_rec(x, f, opts);
  res.is_boolean = true;
  if (q.forall_states) {
    res.truth = true;
    for (std::uint32_t s = 0; s < x.num_states(); ++s) res.truth = res.truth && sat[s];
  } else {
    res.truth = sat[x.initial];
  }
  return res;
}

SynthResult synth_optimal_policy(const ExplicitModel& x, const PropertyQuery& objective,
                                 const McOptions& opts) {
  if (x.kind != ModelKind::Mdp) throw ModelError("policy synthesis requires an MDP");
  const Pctl& f = objective.root;
  if (f->has_bound || (f->kind != PctlKind::Prob && f->kind != PctlKind::Reward))
    throw ModelError("synthesis objective must be a quantitative P or R query");
  if (f->mode == OptMode::Exact) throw ModelError("synthesis objective needs min or max");
  View v(x);

  std::vector<double> value;
  std::vector<bool> progress(x.num_states(), false);
  int rk = -1;
  std::vector<bool> goal;

  if (f->kind == PctlKind::Prob) {
    value = quantitative_vector(x, f, opts);
    if (f->path == PathKind::Finally) {
      goal = sat_rec(x, f->left, opts);
      progress = goal;
    } else if (f->path == PathKind::Until) {
      goal = sat_rec(x, f->right, opts);
      progress = goal;
    } else if (f->path == PathKind::Next) {
      goal = sat_rec(x, f->left, opts);
      for (std::uint32_t s = 0; s < x.num_states(); ++s) progress[s] = true;
    } else {
      // G / W / X objectives: greedy choice on the converged vector.
      for (std::uint32_t s = 0; s < x.num_states(); ++s) progress[s] = true;
    }
  } else {
    rk = x.reward_index(f->reward_name);
    if (rk < 0) throw ModelError("unknown reward structure: " + f->reward_name);
    value = quantitative_vector(x, f, opts);
    if (f->robj == RewardObj::ReachGoal) {
      goal = sat_rec(x, f->left, opts);
      progress = goal;
    } else {
      for (std::uint32_t s = 0; s < x.num_states(); ++s) progress[s] = value[s] == 0.0;
    }
  }

  // Q-values under the converged vector.
  auto qvalue = [&](std::uint32_t s, std::size_t a) {
    double q = rk >= 0 ? v.reward(s, a, rk) : 0.0;
    bool inf = false;
    if (f->kind == PctlKind::Prob && f->path == PathKind::Next) {
      q = 0.0;
      v.each_succ(s, a, [&](std::uint32_t t, double p) { q += goal.empty() ? 0.0 : (goal[t] ? p : 0.0); });
      return q;
    }
    v.each_succ(s, a, [&](std::uint32_t t, double p) {
      if (std::isinf(value[t]))
        inf = true;
      else
        q += p * value[t];
    });
    return inf ? kInf : q;
  };
  auto is_opt = [&](std::uint32_t s, std::size_t a) {
    double q = qvalue(s, a);
    if (std::isinf(value[s])) return std::isinf(q);
    // For reach-probability objectives the fixpoint holds exactly on 0/1
    // states; elsewhere compare within the tie tolerance.
    return std::abs(q - value[s]) <= kTie + 1e-6 * std::abs(value[s]);
  };

  // Distance-to-progress through optimal actions; breaks fixpoint ties that
  // would otherwise let the policy idle in a value-preserving cycle. An
  // action with positive immediate reward is itself progress.
  std::vector<long> dist(x.num_states(), -1);
  for (std::uint32_t s = 0; s < x.num_states(); ++s)
    if (progress[s] || (f->kind == PctlKind::Prob && value[s] == 0.0)) dist[s] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t s = 0; s < x.num_states(); ++s) {
      if (v.is_virtual(s)) continue;
      if (dist[s] == 0) continue;
      long best = -1;
      for (std::size_t a = 0; a < v.nacts(s); ++a) {
        if (!is_opt(s, a)) continue;
        if (rk >= 0 && v.reward(s, a, rk) > 0.0) {
          best = best < 0 ? 1 : std::min(best, 1L);
          continue;
        }
        long dmin = -1;
        v.each_succ(s, a, [&](std::uint32_t t, double) {
          if (dist[t] >= 0) dmin = dmin < 0 ? dist[t] : std::min(dmin, dist[t]);
        });
        if (dmin >= 0) best = best < 0 ? dmin + 1 : std::min(best, dmin + 1);
      }
      if (best >= 0 && (dist[s] < 0 || best < dist[s])) {
        dist[s] = best;
        changed = true;
      }
    }
  }

  SynthResult out;
  out.policy.choice.assign(x.num_states(), -1);
  for (std::uint32_t s = 0; s < x.num_states(); ++s) {
    if (v.is_virtual(s)) continue;
    std::int32_t pick = -1;
    long pick_dist = -1;
    for (std::size_t a = 0; a < v.nacts(s); ++a) {
      if (!is_opt(s, a)) continue;
      long d;
      if (rk >= 0 && v.reward(s, a, rk) > 0.0) {
        d = 1;
      } else {
        long dmin = -1;
        v.each_succ(s, a, [&](std::uint32_t t, double) {
          if (dist[t] >= 0) dmin = dmin < 0 ? dist[t] : std::min(dmin, dist[t]);
        });
        d = dmin < 0 ? std::numeric_limits<long>::max() : dmin + 1;
      }
      bool take = pick < 0 || d < pick_dist ||
                  (d == pick_dist && v.label(s, std::size_t(a)) < v.label(s, std::size_t(pick)));
      if (take) {
        pick = std::int32_t(a);
        pick_dist = d;
      }
    }
    if (pick < 0) pick = 0;  // defensive: pick the first action
    out.policy.choice[s] = pick;
  }
  if (std::isinf(value[x.initial]))
    throw ModelError("objective is infinite at the initial state");
  out.value = value[x.initial];
  return out;
}

}  // namespace safectrl
