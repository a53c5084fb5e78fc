#include "safectrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "scan.hpp"

namespace safectrl {

namespace {

using detail::Lexer;

struct StateHash {
  std::size_t operator()(const State& s) const {
    std::size_t h = 1469598103934665603ull;
    for (std::int64_t x : s.v) {
      h ^= std::size_t(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct ModelParser {
  Lexer lex;
  ProcessModel m;
  std::vector<std::string> all_formula_names;  // prescanned, for cycle diagnostics

  explicit ModelParser(const std::string& text) : lex(text) { prescan_formulas(text); }

  // Formula references are inlined at parse time, so a formula may only use
  // formulas declared above it; a cycle necessarily references a later name.
  void prescan_formulas(const std::string& text) {
    Lexer scan(text);
    while (!scan.eof()) {
      if (scan.try_consume("formula")) {
        if (scan.ident_ahead()) all_formula_names.push_back(scan.ident());
      } else {
        scan.advance();
      }
    }
  }

  ProcessModel run() {
    while (!lex.eof()) {
      if (lex.try_consume("const")) {
        parse_const();
      } else if (lex.try_consume("formula")) {
        parse_formula();
      } else if (lex.try_consume("label")) {
        parse_label();
      } else if (lex.try_consume("rewards")) {
        parse_rewards();
      } else if (lex.peek() == '[') {
        parse_command();
      } else if (lex.ident_ahead()) {
        parse_var();
      } else {
        lex.fail("expected declaration, command or rewards block");
      }
    }
    return m;
  }

  void check_fresh(const std::string& name) {
    if (m.decls.has_name(name) || m.find_formula(name))
      throw ParseError("duplicate declaration: " + name, lex.line, lex.col);
  }

  void parse_const() {
    Value::Type t;
    if (lex.try_consume("int"))
      t = Value::Type::Int;
    else if (lex.try_consume("double"))
      t = Value::Type::Real;
    else if (lex.try_consume("bool"))
      t = Value::Type::Bool;
    else
      lex.fail("expected int, double or bool");
    std::string name = lex.ident();
    check_fresh(name);
    if (lex.try_consume("=")) {
      Expr e = expr();
      if (e->op != ExprOp::Lit) lex.fail("constant " + name + " must be a literal");
      Value v = e->lit;
      if (t == Value::Type::Real && v.type == Value::Type::Int) v = Value::real(double(v.i));
      if (v.type != t) lex.fail("constant " + name + " has mismatched type");
      m.decls.constants[name] = v;
    } else {
      m.decls.parameters[name] = t;
    }
    lex.consume(";");
  }

  void parse_var() {
    std::string name = lex.ident();
    check_fresh(name);
    lex.consume(":");
    VarDecl d;
    d.name = name;
    if (lex.try_consume("bool")) {
      d.kind = VarKind::Boolean;
      d.lo = 0;
      d.hi = 1;
      lex.consume("init");
      if (lex.try_consume("true"))
        d.init = 1;
      else if (lex.try_consume("false"))
        d.init = 0;
      else
        lex.fail("expected true or false");
    } else {
      lex.consume("[");
      d.lo = bound_value();
      lex.consume("..");
      d.hi = bound_value();
      lex.consume("]");
      if (d.lo > d.hi) lex.fail("empty range for " + name);
      lex.consume("init");
      d.init = bound_value();
      if (d.init < d.lo || d.init > d.hi) lex.fail("init of " + name + " outside its range");
    }
    lex.consume(";");
    m.decls.vars.push_back(d);
  }

  std::int64_t bound_value() {
    if (lex.ident_ahead()) {
      std::string name = lex.ident();
      auto it = m.decls.constants.find(name);
      if (it == m.decls.constants.end() || it->second.type != Value::Type::Int)
        lex.fail("expected integer constant: " + name);
      return it->second.i;
    }
    Value v = lex.number();
    if (v.type != Value::Type::Int) lex.fail("expected integer literal");
    return v.i;
  }

  void parse_formula() {
    std::string name = lex.ident();
    check_fresh(name);
    lex.consume("=");
    Expr e = expr();
    lex.consume(";");
    m.formulas.emplace_back(name, e);
  }

  void parse_label() {
    std::string name = lex.quoted();
    for (const auto& [n, _] : m.labels)
      if (n == name) lex.fail("duplicate label: " + name);
    lex.consume("=");
    Expr e = expr();
    lex.consume(";");
    if (e->type != Value::Type::Bool) lex.fail("label " + name + " must be boolean");
    m.labels.emplace_back(name, e);
  }

  void parse_command() {
    lex.consume("[");
    std::string label = lex.ident();
    lex.consume("]");
    Command c;
    c.label = label;
    c.guard = expr();
    if (c.guard->type != Value::Type::Bool) lex.fail("guard must be boolean");
    lex.consume("->");
    if (lex.try_consume("true")) {  // no-op self loop
      Branch b;
      b.prob = expr_lit(Value::integer(1));
      c.branches.push_back(b);
    } else {
      while (true) {
        c.branches.push_back(parse_branch());
        if (!lex.try_consume("+")) break;
      }
    }
    lex.consume(";");
    m.commands.push_back(std::move(c));
  }

  Branch parse_branch() {
    Branch b;
    // `prob : update` or a bare update (probability 1). An update starts with
    // '(' followed by an identifier and a prime.
    bool bare_update = false;
    if (lex.peek() == '(') {
      Lexer probe = lex;
      probe.consume("(");
      if (probe.ident_ahead()) {
        probe.ident();
        bare_update = probe.peek() == '\'';
      }
    }
    if (!bare_update) {
      Expr p = expr();
      if (p->type == Value::Type::Bool) lex.fail("branch probability must be numeric");
      lex.consume(":");
      b.prob = p;
    } else {
      b.prob = expr_lit(Value::integer(1));
    }
    if (lex.try_consume("true")) return b;  // explicit no-op update
    while (true) {
      lex.consume("(");
      std::string var = lex.ident();
      lex.consume("'");
      lex.consume("=");
      Expr rhs = expr();
      lex.consume(")");
      int k = m.decls.var_index(var);
      if (k < 0) lex.fail("assignment to undeclared variable: " + var);
      const VarDecl& d = m.decls.vars[std::size_t(k)];
      bool ok_type = d.kind == VarKind::Boolean ? rhs->type == Value::Type::Bool
                                                : rhs->type == Value::Type::Int;
      if (!ok_type) lex.fail("assignment to " + var + " has mismatched type");
      for (const auto& a : b.assigns)
        if (a.var == k) lex.fail("variable assigned twice in one update: " + var);
      b.assigns.push_back({k, rhs});
      if (!lex.try_consume("&")) break;
    }
    return b;
  }

  void parse_rewards() {
    RewardStruct r;
    r.name = lex.quoted();
    for (const auto& prev : m.rewards)
      if (prev.name == r.name) lex.fail("duplicate reward structure: " + r.name);
    while (!lex.try_consume("endrewards")) {
      lex.consume("[");
      RewardItem it;
      it.action = lex.ident();
      lex.consume("]");
      it.guard = expr();
      if (it.guard->type != Value::Type::Bool) lex.fail("reward guard must be boolean");
      lex.consume(":");
      it.value = expr();
      if (it.value->type == Value::Type::Bool) lex.fail("reward value must be numeric");
      lex.consume(";");
      r.items.push_back(std::move(it));
    }
    m.rewards.push_back(std::move(r));
  }

  // Parses an expression; formula names resolve to their (already inlined)
  // bodies, so every stored expression is formula-free.
  Expr expr() {
    DeclTable aug = m.decls;
    for (const auto& [name, body] : m.formulas) aug.parameters[name] = body->type;
    int at_line = lex.line, at_col = lex.col;
    Expr raw;
    try {
      raw = detail::parse_expr_stream(lex, aug);
    } catch (const ParseError& e) {
      // Distinguish a forward/cyclic formula reference from a plain unknown.
      const std::string msg = e.what();
      auto p = msg.find("unknown identifier: ");
      if (p != std::string::npos) {
        std::string name = msg.substr(p + 20);
        name = name.substr(0, name.find(' '));
        if (std::find(all_formula_names.begin(), all_formula_names.end(), name) !=
            all_formula_names.end())
          throw ParseError("cyclic or forward formula reference: " + name, at_line, at_col);
      }
      throw;
    }
    return inline_formulas(raw);
  }

  Expr inline_formulas(const Expr& e) {
    if (e->op == ExprOp::Param) {
      for (const auto& [n, body] : m.formulas)
        if (n == e->name) return body;
      return e;  // genuine parameter
    }
    if (e->args.empty()) return e;
    auto n = std::make_shared<ExprNode>(*e);
    bool changed = false;
    for (auto& a : n->args) {
      Expr nb = inline_formulas(a);
      if (nb != a) changed = true;
      a = nb;
    }
    return changed ? Expr(n) : e;
  }
};

}  // namespace

const Expr* ProcessModel::find_formula(const std::string& name) const {
  for (const auto& [n, e] : formulas)
    if (n == name) return &e;
  return nullptr;
}

const Expr* ProcessModel::find_label(const std::string& name) const {
  for (const auto& [n, e] : labels)
    if (n == name) return &e;
  return nullptr;
}

State ProcessModel::initial_state() const {
  State s;
  s.v.reserve(decls.vars.size());
  for (const auto& d : decls.vars) s.v.push_back(d.init);
  return s;
}

std::vector<std::string> ProcessModel::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : decls.parameters) out.push_back(n);
  return out;
}

ProcessModel parse_model(const std::string& text) {
  ModelParser p(text);
  return p.run();
}

Expr parse_model_expr(const std::string& text, const ProcessModel& m) {
  DeclTable aug = m.decls;
  for (const auto& [name, body] : m.formulas) aug.parameters[name] = body->type;
  Expr raw = parse_expr(text, aug);
  std::function<Expr(const Expr&)> subst = [&](const Expr& e) -> Expr {
    if (e->op == ExprOp::Param) {
      for (const auto& [n, body] : m.formulas)
        if (n == e->name) return body;
      return e;
    }
    if (e->args.empty()) return e;
    auto n = std::make_shared<ExprNode>(*e);
    for (auto& a : n->args) a = subst(a);
    return n;
  };
  return subst(raw);
}

int ExplicitModel::reward_index(const std::string& name) const {
  for (std::size_t k = 0; k < reward_names.size(); ++k)
    if (reward_names[k] == name) return int(k);
  return -1;
}

std::vector<bool> ExplicitModel::sat_expr(const Expr& e) const {
  std::vector<bool> out(states.size(), false);
  for (std::size_t k = 0; k < states.size(); ++k) out[k] = eval_bool(e, states[k]);
  return out;
}

const Expr* ExplicitModel::find_label(const std::string& name) const {
  for (const auto& [n, e] : labels)
    if (n == name) return &e;
  return nullptr;
}

ExplicitModel expand(const ProcessModel& m, const std::map<std::string, Value>& params,
                     const ExpandOptions& opts) {
  for (const auto& [name, type] : m.decls.parameters) {
    (void)type;
    if (!params.count(name)) throw ModelError("parameter not bound: " + name);
  }
  std::vector<Command> cmds = m.commands;
  for (auto& c : cmds) {
    c.guard = bind_params(c.guard, params, true);
    for (auto& b : c.branches) {
      b.prob = bind_params(b.prob, params, true);
      for (auto& a : b.assigns) a.value = bind_params(a.value, params, true);
    }
  }
  std::vector<RewardStruct> rews = m.rewards;
  for (auto& r : rews)
    for (auto& it : r.items) {
      it.guard = bind_params(it.guard, params, true);
      it.value = bind_params(it.value, params, true);
    }

  ExplicitModel x;
  x.kind = m.kind;
  x.decls = m.decls;
  for (const auto& [name, v] : params) x.decls.constants[name] = v;
  x.decls.parameters.clear();
  for (const auto& r : rews) x.reward_names.push_back(r.name);
  x.labels = m.labels;

  std::unordered_map<State, std::uint32_t, StateHash> index;
  std::deque<std::uint32_t> queue;
  State init = m.initial_state();
  index.emplace(init, 0);
  x.states.push_back(init);
  x.trans.emplace_back();
  queue.push_back(0);
  x.initial = 0;

  auto intern = [&](State&& s) -> std::uint32_t {
    auto it = index.find(s);
    if (it != index.end()) return it->second;
    if (x.states.size() >= opts.state_cap)
      throw ModelError("state-space cap exceeded (" + std::to_string(opts.state_cap) + " states)");
    std::uint32_t id = std::uint32_t(x.states.size());
    index.emplace(s, id);
    x.states.push_back(std::move(s));
    x.trans.emplace_back();
    queue.push_back(id);
    return id;
  };

  const double tol = opts.prob_tolerance;
  while (!queue.empty()) {
    std::uint32_t sid = queue.front();
    queue.pop_front();
    State cur = x.states[sid];  // copy: x.states may reallocate below

    std::vector<ExplicitAction> acts;
    for (const auto& c : cmds) {
      if (!eval_bool(c.guard, cur)) continue;
      ExplicitAction a;
      a.label = c.label;
      double total = 0.0;
      for (const auto& b : c.branches) {
        double p = eval(b.prob, cur).as_real();
        if (p < -tol) throw ModelError("negative branch probability in command " + c.label);
        if (p <= 0.0) continue;  // zero-probability branches dropped
        total += p;
        State next = cur;
        for (const auto& asg : b.assigns) {
          Value v = eval(asg.value, cur);
          std::int64_t raw = v.type == Value::Type::Bool ? (v.b ? 1 : 0) : v.as_int();
          const VarDecl& d = m.decls.vars[std::size_t(asg.var)];
          if (raw < d.lo || raw > d.hi)
            throw ModelError("assignment drives " + d.name + " out of range in command " +
                             c.label + " (value " + std::to_string(raw) + ")");
          next.v[std::size_t(asg.var)] = raw;
        }
        std::uint32_t tid = intern(std::move(next));
        bool merged = false;
        for (auto& [t, q] : a.succ)
          if (t == tid) {
            q += p;
            merged = true;
            break;
          }
        if (!merged) a.succ.emplace_back(tid, p);
      }
      if (a.succ.empty()) continue;
      if (std::abs(total - 1.0) > tol)
        throw ModelError("probabilities of command " + c.label + " sum to " +
                         std::to_string(total) + " in a reachable state");
      a.rewards.assign(rews.size(), 0.0);
      for (std::size_t rk = 0; rk < rews.size(); ++rk) {
        for (const auto& it : rews[rk].items) {
          if (it.action != c.label) continue;
          if (!eval_bool(it.guard, cur)) continue;
          double v = eval(it.value, cur).as_real();
          if (v < 0.0) throw ModelError("negative reward for action " + c.label);
          a.rewards[rk] += v;
        }
      }
      acts.push_back(std::move(a));
    }

    if (m.kind == ModelKind::Dtmc && acts.size() > 1 && !m.priority_labels.empty()) {
      // Priority commands (the controller's) resolve deterministically: the
      // enabled one whose label ranks earliest in priority_labels wins.
      std::size_t best = acts.size();
      std::size_t best_rank = m.priority_labels.size();
      for (std::size_t k = 0; k < acts.size(); ++k) {
        auto it = std::find(m.priority_labels.begin(), m.priority_labels.end(), acts[k].label);
        if (it == m.priority_labels.end()) continue;
        std::size_t rank = std::size_t(it - m.priority_labels.begin());
        if (rank < best_rank) {
          best_rank = rank;
          best = k;
        }
      }
      if (best < acts.size()) {
        ExplicitAction chosen = std::move(acts[best]);
        acts.clear();
        acts.push_back(std::move(chosen));
      }
    }
    if (m.kind == ModelKind::Dtmc && acts.size() > 1) {
      // Residual choice resolves uniformly at random across enabled commands.
      ExplicitAction mix;
      mix.label = acts[0].label;
      mix.rewards.assign(rews.size(), 0.0);
      double w = 1.0 / double(acts.size());
      for (const auto& a : acts) {
        for (const auto& [t, p] : a.succ) {
          bool merged = false;
          for (auto& [mt, mp] : mix.succ)
            if (mt == t) {
              mp += w * p;
              merged = true;
              break;
            }
          if (!merged) mix.succ.emplace_back(t, w * p);
        }
        for (std::size_t rk = 0; rk < rews.size(); ++rk) mix.rewards[rk] += w * a.rewards[rk];
      }
      acts.clear();
      acts.push_back(std::move(mix));
    }
    x.trans[sid].actions = std::move(acts);
  }
  return x;
}

DeadlockSets deadlock_states(const ExplicitModel& x, const Expr& final_expr) {
  DeadlockSets out;
  for (std::uint32_t s = 0; s < x.num_states(); ++s) {
    if (!x.trans[s].actions.empty()) continue;
    if (eval_bool(final_expr, x.states[s]))
      out.final_states.push_back(s);
    else
      out.early.push_back(s);
  }
  return out;
}

ExplicitModel induced_dtmc(const ExplicitModel& mdp, const Policy& pi) {
  if (pi.choice.size() != mdp.num_states())
    throw ModelError("policy size does not match the model");
  ExplicitModel d;
  d.kind = ModelKind::Dtmc;
  d.states = mdp.states;
  d.initial = mdp.initial;
  d.reward_names = mdp.reward_names;
  d.labels = mdp.labels;
  d.decls = mdp.decls;
  d.trans.resize(mdp.num_states());
  for (std::uint32_t s = 0; s < mdp.num_states(); ++s) {
    const auto& acts = mdp.trans[s].actions;
    if (acts.empty()) continue;
    std::int32_t c = pi.choice[s];
    if (c < 0 || std::size_t(c) >= acts.size())
      throw ModelError("policy undefined on state " + std::to_string(s));
    d.trans[s].actions.push_back(acts[std::size_t(c)]);
  }
  return d;
}

namespace {

std::string decl_kind_str(const VarDecl& d) {
  if (d.kind == VarKind::Boolean) return "bool";
  return "[" + std::to_string(d.lo) + ".." + std::to_string(d.hi) + "]";
}

}  // namespace

std::string print_model(const ProcessModel& m) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, v] : m.decls.constants) {
    const char* t =
        v.type == Value::Type::Bool ? "bool" : v.type == Value::Type::Int ? "int" : "double";
    os << "const " << t << " " << name << " = " << v.str() << ";\n";
  }
  for (const auto& [name, t] : m.decls.parameters) {
    const char* ts = t == Value::Type::Bool ? "bool" : t == Value::Type::Int ? "int" : "double";
    os << "const " << ts << " " << name << ";\n";
  }
  for (const auto& d : m.decls.vars) {
    os << d.name << " : " << decl_kind_str(d) << " init ";
    if (d.kind == VarKind::Boolean)
      os << (d.init ? "true" : "false");
    else
      os << d.init;
    os << ";\n";
  }
  for (const auto& [name, e] : m.formulas)
    os << "formula " << name << " = " << pretty_print(e) << ";\n";
  for (const auto& [name, e] : m.labels)
    os << "label \"" << name << "\" = " << pretty_print(e) << ";\n";
  for (const auto& c : m.commands) {
    os << "[" << c.label << "] " << pretty_print(c.guard) << " -> ";
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
      if (k) os << " + ";
      const auto& b = c.branches[k];
      os << pretty_print(b.prob) << ":";
      if (b.assigns.empty()) {
        os << "true";
      } else {
        for (std::size_t j = 0; j < b.assigns.size(); ++j) {
          if (j) os << "&";
          os << "(" << m.decls.vars[std::size_t(b.assigns[j].var)].name << "'="
             << pretty_print(b.assigns[j].value) << ")";
        }
      }
    }
    os << ";\n";
  }
  for (const auto& r : m.rewards) {
    os << "rewards \"" << r.name << "\"\n";
    for (const auto& it : r.items)
      os << "  [" << it.action << "] " << pretty_print(it.guard) << " : "
         << pretty_print(it.value) << ";\n";
    os << "endrewards\n";
  }
  return os.str();
}

}  // namespace safectrl
