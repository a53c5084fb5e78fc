#include "safectrl/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "scan.hpp"

namespace safectrl {

std::int64_t Value::as_int() const {
  if (type == Type::Int) return i;
  if (type == Type::Bool) return b ? 1 : 0;
  throw ModelError("real value used where an integer is required");
}

bool Value::as_bool() const {
  if (type == Type::Bool) return b;
  throw ModelError("numeric value used where a boolean is required");
}

std::string Value::str() const {
  switch (type) {
    case Type::Bool:
      return b ? "true" : "false";
    case Type::Int:
      return std::to_string(i);
    case Type::Real: {
      std::ostringstream os;
      os.precision(17);
      os << r;
      return os.str();
    }
  }
  return "?";
}

bool Value::operator==(const Value& o) const {
  if (type != o.type) return false;
  switch (type) {
    case Type::Bool:
      return b == o.b;
    case Type::Int:
      return i == o.i;
    case Type::Real:
      return r == o.r;
  }
  return false;
}

int DeclTable::var_index(const std::string& name) const {
  for (std::size_t k = 0; k < vars.size(); ++k)
    if (vars[k].name == name) return int(k);
  return -1;
}

const VarDecl* DeclTable::find_var(const std::string& name) const {
  int k = var_index(name);
  return k < 0 ? nullptr : &vars[k];
}

bool DeclTable::has_name(const std::string& name) const {
  return var_index(name) >= 0 || constants.count(name) > 0 || parameters.count(name) > 0;
}

int DeclTable::add_var(const VarDecl& d) {
  if (has_name(d.name)) throw ModelError("duplicate declaration: " + d.name);
  if (d.kind == VarKind::BoundedInt && (d.init < d.lo || d.init > d.hi))
    throw ModelError("initial value of " + d.name + " outside [" + std::to_string(d.lo) + ".." +
                     std::to_string(d.hi) + "]");
  vars.push_back(d);
  return int(vars.size()) - 1;
}

Expr expr_lit(Value v) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Lit;
  n->lit = v;
  n->type = v.type;
  return n;
}

Expr expr_true() { return expr_lit(Value::boolean(true)); }
Expr expr_false() { return expr_lit(Value::boolean(false)); }

Expr expr_var(const DeclTable& decls, const std::string& name) {
  int k = decls.var_index(name);
  if (k < 0) throw ModelError("unknown variable: " + name);
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Var;
  n->var = k;
  n->name = name;
  n->type = decls.vars[k].kind == VarKind::Boolean ? Value::Type::Bool : Value::Type::Int;
  return n;
}

static Expr mk(ExprOp op, Value::Type t, std::vector<Expr> args) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->type = t;
  n->args = std::move(args);
  return n;
}

Expr expr_not(Expr a) {
  if (a->op == ExprOp::Lit) return expr_lit(Value::boolean(!a->lit.as_bool()));
  return mk(ExprOp::Not, Value::Type::Bool, {std::move(a)});
}

Expr expr_and(Expr a, Expr b) {
  if (a->op == ExprOp::Lit) return a->lit.as_bool() ? b : expr_false();
  if (b->op == ExprOp::Lit) return b->lit.as_bool() ? a : expr_false();
  return mk(ExprOp::And, Value::Type::Bool, {std::move(a), std::move(b)});
}

Expr expr_or(Expr a, Expr b) {
  if (a->op == ExprOp::Lit) return a->lit.as_bool() ? expr_true() : b;
  if (b->op == ExprOp::Lit) return b->lit.as_bool() ? expr_true() : a;
  return mk(ExprOp::Or, Value::Type::Bool, {std::move(a), std::move(b)});
}

Expr expr_cmp(ExprOp op, Expr a, Expr b) { return mk(op, Value::Type::Bool, {std::move(a), std::move(b)}); }

Expr expr_and_all(const std::vector<Expr>& xs) {
  Expr acc = expr_true();
  for (const auto& x : xs) acc = expr_and(acc, x);
  return acc;
}

Expr expr_or_all(const std::vector<Expr>& xs) {
  Expr acc = expr_false();
  for (const auto& x : xs) acc = expr_or(acc, x);
  return acc;
}

namespace {

using detail::Lexer;

struct ExprParser {
  Lexer& lex;
  const DeclTable& decls;

  Expr parse() {
    Expr e = ternary();
    return e;
  }

  Expr ternary() {
    Expr c = disjunction();
    if (lex.try_consume("?")) {
      if (c->type != Value::Type::Bool) lex.fail("condition of ?: must be boolean");
      Expr a = ternary();
      lex.consume(":");
      Expr b = ternary();
      Value::Type t = unify_numeric_or_same(a, b);
      return mk(ExprOp::Ite, t, {c, a, b});
    }
    return c;
  }

  Expr disjunction() {
    Expr a = conjunction();
    while (lex.try_consume("|")) {
      Expr b = conjunction();
      require_bool(a);
      require_bool(b);
      a = mk(ExprOp::Or, Value::Type::Bool, {a, b});
    }
    return a;
  }

  Expr conjunction() {
    Expr a = comparison();
    while (lex.try_consume("&")) {
      Expr b = comparison();
      require_bool(a);
      require_bool(b);
      a = mk(ExprOp::And, Value::Type::Bool, {a, b});
    }
    return a;
  }

  Expr comparison() {
    Expr a = additive();
    ExprOp op;
    if (lex.try_consume("!=")) {
      op = ExprOp::Ne;
    } else if (lex.try_consume("<=")) {
      op = ExprOp::Le;
    } else if (lex.try_consume(">=")) {
      op = ExprOp::Ge;
    } else if (lex.try_consume("=")) {
      op = ExprOp::Eq;
    } else if (lex.try_consume("<")) {
      op = ExprOp::Lt;
    } else if (lex.try_consume(">")) {
      op = ExprOp::Gt;
    } else {
      return a;
    }
    Expr b = additive();
    if (op == ExprOp::Eq || op == ExprOp::Ne) {
      if (a->type == Value::Type::Bool || b->type == Value::Type::Bool) {
        if (a->type != Value::Type::Bool || b->type != Value::Type::Bool)
          lex.fail("cannot compare boolean with number");
      }
    } else {
      require_numeric(a);
      require_numeric(b);
    }
    return mk(op, Value::Type::Bool, {a, b});
  }

  Expr additive() {
    Expr a = multiplicative();
    while (true) {
      if (lex.try_consume("+")) {
        Expr b = multiplicative();
        a = arith(ExprOp::Add, a, b);
      } else if (!lex.peek_word("->") && lex.try_consume("-")) {
        Expr b = multiplicative();
        a = arith(ExprOp::Sub, a, b);
      } else {
        return a;
      }
    }
  }

  Expr multiplicative() {
    Expr a = unary();
    while (true) {
      if (lex.try_consume("*")) {
        Expr b = unary();
        a = arith(ExprOp::Mul, a, b);
      } else if (lex.try_consume("/")) {
        Expr b = unary();
        require_numeric(a);
        require_numeric(b);
        if (b->op == ExprOp::Lit && b->lit.as_real() == 0.0) lex.fail("division by constant zero");
        a = mk(ExprOp::Div, Value::Type::Real, {a, b});
      } else {
        return a;
      }
    }
  }

  Expr unary() {
    if (lex.try_consume("!")) {
      Expr a = unary();
      require_bool(a);
      return mk(ExprOp::Not, Value::Type::Bool, {a});
    }
    if (lex.try_consume("-")) {
      Expr a = unary();
      require_numeric(a);
      return mk(ExprOp::Neg, a->type, {a});
    }
    return primary();
  }

  Expr primary() {
    if (lex.try_consume("(")) {
      Expr e = ternary();
      lex.consume(")");
      return e;
    }
    if (lex.try_consume("true")) return expr_lit(Value::boolean(true));
    if (lex.try_consume("false")) return expr_lit(Value::boolean(false));
    if (lex.try_consume("mod")) {
      lex.consume("(");
      Expr a = ternary();
      lex.consume(",");
      Expr b = ternary();
      lex.consume(")");
      if (a->type != Value::Type::Int || b->type != Value::Type::Int)
        lex.fail("mod expects integer operands");
      if (b->op == ExprOp::Lit && b->lit.as_int() == 0) lex.fail("mod by constant zero");
      return mk(ExprOp::Mod, Value::Type::Int, {a, b});
    }
    if (lex.ident_ahead()) {
      int line = lex.line, col = lex.col;
      std::string name = lex.ident();
      int k = decls.var_index(name);
      if (k >= 0) {
        auto n = std::make_shared<ExprNode>();
        n->op = ExprOp::Var;
        n->var = k;
        n->name = name;
        n->type = decls.vars[k].kind == VarKind::Boolean ? Value::Type::Bool : Value::Type::Int;
        return n;
      }
      auto it = decls.constants.find(name);
      if (it != decls.constants.end()) return expr_lit(it->second);
      auto pt = decls.parameters.find(name);
      if (pt != decls.parameters.end()) {
        auto n = std::make_shared<ExprNode>();
        n->op = ExprOp::Param;
        n->name = name;
        n->type = pt->second;
        return n;
      }
      throw ParseError("unknown identifier: " + name, line, col);
    }
    char c = lex.peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return expr_lit(lex.number());
    lex.fail("expected expression");
  }

  void require_bool(const Expr& e) {
    if (e->type != Value::Type::Bool) lex.fail("expected boolean operand");
  }
  void require_numeric(const Expr& e) {
    if (e->type == Value::Type::Bool) lex.fail("expected numeric operand");
  }

  Value::Type unify_numeric_or_same(const Expr& a, const Expr& b) {
    if (a->type == Value::Type::Bool && b->type == Value::Type::Bool) return Value::Type::Bool;
    if (a->type == Value::Type::Bool || b->type == Value::Type::Bool)
      lex.fail("branches of ?: have mismatched types");
    if (a->type == Value::Type::Real || b->type == Value::Type::Real) return Value::Type::Real;
    return Value::Type::Int;
  }

  Expr arith(ExprOp op, Expr a, Expr b) {
    require_numeric(a);
    require_numeric(b);
    Value::Type t =
        (a->type == Value::Type::Real || b->type == Value::Type::Real) ? Value::Type::Real : Value::Type::Int;
    return mk(op, t, {a, b});
  }
};

}  // namespace

Expr parse_expr(const std::string& text, const DeclTable& decls) {
  detail::Lexer lex(text);
  ExprParser p{lex, decls};
  Expr e = p.parse();
  if (!lex.eof()) lex.fail("trailing input after expression");
  return e;
}

namespace detail {
Expr parse_expr_stream(Lexer& lex, const DeclTable& decls) {
  ExprParser p{lex, decls};
  return p.parse();
}
}  // namespace detail

Value eval(const Expr& e, const State& s) {
  switch (e->op) {
    case ExprOp::Lit:
      return e->lit;
    case ExprOp::Var: {
      std::int64_t raw = s.v[std::size_t(e->var)];
      return e->type == Value::Type::Bool ? Value::boolean(raw != 0) : Value::integer(raw);
    }
    case ExprOp::Param:
      throw ModelError("unbound parameter in evaluation: " + e->name);
    case ExprOp::Not:
      return Value::boolean(!eval(e->args[0], s).as_bool());
    case ExprOp::Neg: {
      Value a = eval(e->args[0], s);
      if (a.type == Value::Type::Int) return Value::integer(-a.i);
      return Value::real(-a.as_real());
    }
    case ExprOp::And:
      return Value::boolean(eval(e->args[0], s).as_bool() && eval(e->args[1], s).as_bool());
    case ExprOp::Or:
      return Value::boolean(eval(e->args[0], s).as_bool() || eval(e->args[1], s).as_bool());
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul: {
      Value a = eval(e->args[0], s);
      Value b = eval(e->args[1], s);
      if (e->type == Value::Type::Int) {
        std::int64_t x = a.as_int(), y = b.as_int();
        if (e->op == ExprOp::Add) return Value::integer(x + y);
        if (e->op == ExprOp::Sub) return Value::integer(x - y);
        return Value::integer(x * y);
      }
      double x = a.as_real(), y = b.as_real();
      if (e->op == ExprOp::Add) return Value::real(x + y);
      if (e->op == ExprOp::Sub) return Value::real(x - y);
      return Value::real(x * y);
    }
    case ExprOp::Div: {
      double y = eval(e->args[1], s).as_real();
      if (y == 0.0) throw ModelError("division by zero at evaluation time");
      return Value::real(eval(e->args[0], s).as_real() / y);
    }
    case ExprOp::Mod: {
      std::int64_t y = eval(e->args[1], s).as_int();
      if (y == 0) throw ModelError("mod by zero at evaluation time");
      std::int64_t x = eval(e->args[0], s).as_int();
      std::int64_t m = x % y;
      if (m < 0) m += (y < 0 ? -y : y);
      return Value::integer(m);
    }
    case ExprOp::Eq:
    case ExprOp::Ne: {
      Value a = eval(e->args[0], s);
      Value b = eval(e->args[1], s);
      bool eq;
      if (a.type == Value::Type::Bool)
        eq = a.b == b.as_bool();
      else if (a.type == Value::Type::Int && b.type == Value::Type::Int)
        eq = a.i == b.i;
      else
        eq = a.as_real() == b.as_real();
      return Value::boolean(e->op == ExprOp::Eq ? eq : !eq);
    }
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge: {
      Value a = eval(e->args[0], s);
      Value b = eval(e->args[1], s);
      bool res;
      if (a.type == Value::Type::Int && b.type == Value::Type::Int) {
        std::int64_t x = a.i, y = b.i;
        res = e->op == ExprOp::Lt ? x < y : e->op == ExprOp::Le ? x <= y : e->op == ExprOp::Gt ? x > y : x >= y;
      } else {
        double x = a.as_real(), y = b.as_real();
        res = e->op == ExprOp::Lt ? x < y : e->op == ExprOp::Le ? x <= y : e->op == ExprOp::Gt ? x > y : x >= y;
      }
      return Value::boolean(res);
    }
    case ExprOp::Ite:
      return eval(e->args[0], s).as_bool() ? eval(e->args[1], s) : eval(e->args[2], s);
  }
  throw ModelError("corrupt expression node");
}

bool eval_bool(const Expr& e, const State& s) { return eval(e, s).as_bool(); }

Expr bind_params(const Expr& e, const std::map<std::string, Value>& params, bool require_closed) {
  switch (e->op) {
    case ExprOp::Lit:
    case ExprOp::Var:
      return e;
    case ExprOp::Param: {
      auto it = params.find(e->name);
      if (it == params.end()) {
        if (require_closed) throw ModelError("parameter not bound: " + e->name);
        return e;
      }
      Value v = it->second;
      if (e->type == Value::Type::Real && v.type == Value::Type::Int) v = Value::real(double(v.i));
      if (v.type != e->type) throw ModelError("parameter " + e->name + " bound with wrong type");
      return expr_lit(v);
    }
    default: {
      auto n = std::make_shared<ExprNode>(*e);
      bool changed = false;
      for (auto& a : n->args) {
        Expr nb = bind_params(a, params, require_closed);
        if (nb != a) changed = true;
        a = nb;
      }
      if (!changed) return e;
      return n;
    }
  }
}

bool references_param(const Expr& e) {
  if (e->op == ExprOp::Param) return true;
  for (const auto& a : e->args)
    if (references_param(a)) return true;
  return false;
}

void collect_vars(const Expr& e, std::vector<int>& out) {
  if (e->op == ExprOp::Var) {
    if (std::find(out.begin(), out.end(), e->var) == out.end()) out.push_back(e->var);
  }
  for (const auto& a : e->args) collect_vars(a, out);
}

namespace {

int prec_of(ExprOp op) {
  switch (op) {
    case ExprOp::Ite:
      return 0;
    case ExprOp::Or:
      return 1;
    case ExprOp::And:
      return 2;
    case ExprOp::Eq:
    case ExprOp::Ne:
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge:
      return 3;
    case ExprOp::Add:
    case ExprOp::Sub:
      return 4;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 5;
    case ExprOp::Not:
    case ExprOp::Neg:
      return 6;
    default:
      return 7;
  }
}

void print_rec(const Expr& e, int parent_prec, std::string& out) {
  int p = prec_of(e->op);
  auto binop = [&](const char* sym) {
    bool paren = p < parent_prec;
    if (paren) out += "(";
    print_rec(e->args[0], p, out);
    out += sym;
    print_rec(e->args[1], p + 1, out);
    if (paren) out += ")";
  };
  switch (e->op) {
    case ExprOp::Lit:
      out += e->lit.str();
      return;
    case ExprOp::Var:
    case ExprOp::Param:
      out += e->name;
      return;
    case ExprOp::Not:
      out += "!";
      print_rec(e->args[0], p, out);
      return;
    case ExprOp::Neg:
      out += "-";
      print_rec(e->args[0], p, out);
      return;
    case ExprOp::And:
      binop(" & ");
      return;
    case ExprOp::Or:
      binop(" | ");
      return;
    case ExprOp::Add:
      binop(" + ");
      return;
    case ExprOp::Sub:
      binop(" - ");
      return;
    case ExprOp::Mul:
      binop(" * ");
      return;
    case ExprOp::Div:
      binop(" / ");
      return;
    case ExprOp::Mod:
      out += "mod(";
      print_rec(e->args[0], 0, out);
      out += ", ";
      print_rec(e->args[1], 0, out);
      out += ")";
      return;
    case ExprOp::Eq:
      binop(" = ");
      return;
    case ExprOp::Ne:
      binop(" != ");
      return;
    case ExprOp::Lt:
      binop(" < ");
      return;
    case ExprOp::Le:
      binop(" <= ");
      return;
    case ExprOp::Gt:
      binop(" > ");
      return;
    case ExprOp::Ge:
      binop(" >= ");
      return;
    case ExprOp::Ite: {
      bool paren = p < parent_prec || parent_prec > 0;
      if (paren) out += "(";
      print_rec(e->args[0], 1, out);
      out += " ? ";
      print_rec(e->args[1], 1, out);
      out += " : ";
      print_rec(e->args[2], 0, out);
      if (paren) out += ")";
      return;
    }
  }
}

}  // namespace

std::string pretty_print(const Expr& e) {
  std::string out;
  print_rec(e, 0, out);
  return out;
}

}  // namespace safectrl
