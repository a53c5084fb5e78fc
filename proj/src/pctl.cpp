#include <sstream>

#include "safectrl/mc.hpp"
#include "scan.hpp"

namespace safectrl {

namespace {

using detail::Lexer;

struct PropParser {
  Lexer lex;
  const ExplicitModel& x;

  PropParser(const std::string& text, const ExplicitModel& ctx) : lex(text), x(ctx) {}

  PropertyQuery parse_line() {
    PropertyQuery q;
    if (lex.try_consume("filter")) {
      lex.consume("(");
      if (lex.try_consume("min"))
        q.filter = PropertyQuery::Filter::Min;
      else if (lex.try_consume("avg"))
        q.filter = PropertyQuery::Filter::Avg;
      else if (lex.try_consume("max"))
        q.filter = PropertyQuery::Filter::Max;
      else
        lex.fail("expected min, avg or max");
      lex.consume(",");
      q.root = state_formula(true);
      lex.consume(",");
      q.filter_expr = atom_expr();
      lex.consume(")");
    } else if (lex.try_consume("forall")) {
      q.forall_states = true;
      q.root = state_formula(false);
    } else {
      q.root = state_formula(true);
    }
    if (!lex.eof()) lex.fail("trailing input after property");
    return q;
  }

  Pctl state_formula(bool top) {
    Pctl a = conj(top);
    while (lex.try_consume("|")) {
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::Or;
      n->a = a;
      n->b = conj(false);
      a = n;
    }
    return a;
  }

  Pctl conj(bool top) {
    Pctl a = unary(top);
    while (lex.try_consume("&")) {
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::And;
      n->a = a;
      n->b = unary(false);
      a = n;
    }
    return a;
  }

  Pctl unary(bool top) {
    if (lex.try_consume("!")) {
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::Not;
      n->a = unary(false);
      return n;
    }
    return primary(top);
  }

  Pctl primary(bool top) {
    if (lex.peek_word("E") || lex.peek_word("A")) {
      bool ex = lex.try_consume("E");
      if (!ex) lex.consume("A");
      auto n = std::make_shared<PctlNode>();
      n->kind = ex ? PctlKind::Exists : PctlKind::Forall;
      lex.consume("[");
      parse_path(*n);
      lex.consume("]");
      return n;
    }
    if (lex.peek_word("Pmax") || lex.peek_word("Pmin") || lex.peek_word("P")) {
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::Prob;
      if (lex.try_consume("Pmax"))
        n->mode = OptMode::Max;
      else if (lex.try_consume("Pmin"))
        n->mode = OptMode::Min;
      else
        lex.consume("P");
      parse_spec(*n, top, n->mode != OptMode::Exact);
      lex.consume("[");
      parse_path(*n);
      lex.consume("]");
      return n;
    }
    if (lex.peek_word("R")) {
      lex.consume("R");
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::Reward;
      lex.consume("{");
      n->reward_name = lex.quoted();
      lex.consume("}");
      parse_spec(*n, top);
      lex.consume("[");
      if (lex.try_consume("F")) {
        n->robj = RewardObj::ReachGoal;
        n->left = state_formula(false);
      } else {
        lex.consume("C");
        if (lex.try_consume("<=")) {
          n->robj = RewardObj::CumulativeBounded;
          Value k = lex.number();
          n->step_bound = k.as_int();
        } else {
          n->robj = RewardObj::Cumulative;
        }
      }
      lex.consume("]");
      return n;
    }
    if (lex.peek_word("S")) {
      lex.consume("S");
      auto n = std::make_shared<PctlNode>();
      n->kind = PctlKind::Steady;
      parse_spec(*n, top);
      lex.consume("[");
      n->atom = atom_expr();
      lex.consume("]");
      return n;
    }
    if (lex.try_consume("(")) {
      Pctl inner = state_formula(false);
      lex.consume(")");
      return inner;
    }
    auto n = std::make_shared<PctlNode>();
    if (lex.peek() == '"') {
      std::string name = peek_quoted();
      if (!x.find_label(name) && name == "deadlock") {
        lex.quoted();
        n->kind = PctlKind::Deadlock;
        return n;
      }
    }
    n->kind = PctlKind::Atom;
    n->atom = atom_expr();
    return n;
  }

  std::string peek_quoted() {
    Lexer probe = lex;
    return probe.quoted();
  }

  void parse_spec(PctlNode& n, bool top, bool mode_fixed = false) {
    if (!mode_fixed) {
      if (lex.try_consume("min"))
        n.mode = OptMode::Min;
      else if (lex.try_consume("max"))
        n.mode = OptMode::Max;
    }
    if (lex.try_consume("=?")) {
      if (!top) lex.fail("'=?' queries are only allowed at the top level");
      n.quantitative = true;
      return;
    }
    n.has_bound = true;
    if (lex.try_consume("<="))
      n.cmp = CmpKind::Le;
    else if (lex.try_consume(">="))
      n.cmp = CmpKind::Ge;
    else if (lex.try_consume("<"))
      n.cmp = CmpKind::Lt;
    else if (lex.try_consume(">"))
      n.cmp = CmpKind::Gt;
    else
      lex.fail("expected =?, <, <=, > or >=");
    n.bound_value = lex.number().as_real();
  }

  void parse_path(PctlNode& n) {
    if (lex.try_consume("X")) {
      n.path = PathKind::Next;
      n.left = state_formula(false);
      return;
    }
    if (lex.try_consume("F")) {
      n.path = PathKind::Finally;
      if (lex.try_consume("<=")) n.step_bound = lex.number().as_int();
      n.left = state_formula(false);
      return;
    }
    if (lex.try_consume("G")) {
      n.path = PathKind::Globally;
      if (lex.try_consume("<=")) n.step_bound = lex.number().as_int();
      n.left = state_formula(false);
      return;
    }
    n.left = state_formula(false);
    if (lex.try_consume("U")) {
      n.path = PathKind::Until;
      if (lex.try_consume("<=")) n.step_bound = lex.number().as_int();
    } else if (lex.try_consume("W")) {
      n.path = PathKind::WeakUntil;
    } else {
      lex.fail("expected U or W in path formula");
    }
    n.right = state_formula(false);
  }

  // A state atom: quoted label, the built-in "init", or a raw expression over
  // the model's variables and constants.
  Expr atom_expr() {
    if (lex.peek() == '"') {
      std::string name = lex.quoted();
      if (const Expr* e = x.find_label(name)) return *e;
      if (name == "init") {
        Expr acc = expr_true();
        const State& s0 = x.states[x.initial];
        for (std::size_t k = 0; k < x.decls.vars.size(); ++k) {
          Expr var = expr_var(x.decls, x.decls.vars[k].name);
          Expr lit = x.decls.vars[k].kind == VarKind::Boolean
                         ? expr_lit(Value::boolean(s0.v[k] != 0))
                         : expr_lit(Value::integer(s0.v[k]));
          acc = expr_and(acc, expr_cmp(ExprOp::Eq, var, lit));
        }
        return acc;
      }
      lex.fail("unknown label: " + name);
    }
    Expr e = detail::parse_expr_stream(lex, x.decls);
    if (e->type != Value::Type::Bool) lex.fail("state atom must be boolean");
    return e;
  }
};

}  // namespace

PropertyQuery parse_property(const std::string& line, const ExplicitModel& ctx) {
  std::string body = line;
  std::optional<bool> expected;
  auto dir = line.find("// expect:");
  if (dir != std::string::npos) {
    std::string tail = line.substr(dir + 10);
    body = line.substr(0, dir);
    auto t = tail.find("true");
    auto f = tail.find("false");
    if (t != std::string::npos)
      expected = true;
    else if (f != std::string::npos)
      expected = false;
  }
  PropParser p(body, ctx);
  PropertyQuery q = p.parse_line();
  q.source = body;
  while (!q.source.empty() && std::isspace(static_cast<unsigned char>(q.source.back())))
    q.source.pop_back();
  q.expected = expected;
  return q;
}

std::vector<PropertyQuery> parse_properties(const std::string& text, const ExplicitModel& ctx) {
  std::vector<PropertyQuery> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::string stripped = line;
    auto pos = stripped.find("//");
    std::string code = pos == std::string::npos ? stripped : stripped.substr(0, pos);
    bool blank = true;
    for (char c : code)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    out.push_back(parse_property(line, ctx));
  }
  return out;
}

std::string print_property(const PropertyQuery& q) { return q.source; }

}  // namespace safectrl
