#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace safectrl {

/// Error with a source position, thrown by all text-format parsers.
struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                           std::to_string(col_) + ")"),
        line(line_),
        column(col_) {}
};

/// Semantic error in a model (bad bounds, bad probability, ...).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Value {
  enum class Type { Bool, Int, Real };
  Type type = Type::Int;
  bool b = false;
  std::int64_t i = 0;
  double r = 0.0;

  static Value boolean(bool v) {
    Value x;
    x.type = Type::Bool;
    x.b = v;
    return x;
  }
  static Value integer(std::int64_t v) {
    Value x;
    x.type = Type::Int;
    x.i = v;
    return x;
  }
  static Value real(double v) {
    Value x;
    x.type = Type::Real;
    x.r = v;
    return x;
  }

  bool is_bool() const { return type == Type::Bool; }
  bool is_numeric() const { return type != Type::Bool; }
  double as_real() const { return type == Type::Real ? r : (type == Type::Int ? double(i) : (b ? 1.0 : 0.0)); }
  std::int64_t as_int() const;
  bool as_bool() const;
  std::string str() const;
  bool operator==(const Value& o) const;
};

enum class VarKind { Boolean, BoundedInt };

struct VarDecl {
  std::string name;
  VarKind kind = VarKind::BoundedInt;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t init = 0;  // bools stored as 0/1
};

/// Declaration context an expression is checked against: state variables
/// (by index) plus named constants. Undefined constants act as parameters.
struct DeclTable {
  std::vector<VarDecl> vars;
  std::map<std::string, Value> constants;
  std::map<std::string, Value::Type> parameters;  // declared, no value yet

  int var_index(const std::string& name) const;
  const VarDecl* find_var(const std::string& name) const;
  bool has_name(const std::string& name) const;
  int add_var(const VarDecl& d);
};

/// Total valuation of the declared state variables, ordered by declaration.
struct State {
  std::vector<std::int64_t> v;
  bool operator==(const State& o) const { return v == o.v; }
  bool operator<(const State& o) const { return v < o.v; }
};

enum class ExprOp {
  Lit,
  Var,
  Param,
  Not,
  Neg,
  And,
  Or,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Ite,
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op = ExprOp::Lit;
  Value lit;             // Lit
  int var = -1;          // Var: index into DeclTable::vars
  std::string name;      // Var/Param: source name
  Value::Type type = Value::Type::Bool;
  std::vector<Expr> args;
};

Expr expr_lit(Value v);
Expr expr_true();
Expr expr_false();
Expr expr_var(const DeclTable& decls, const std::string& name);
Expr expr_not(Expr a);
Expr expr_and(Expr a, Expr b);
Expr expr_or(Expr a, Expr b);
Expr expr_cmp(ExprOp op, Expr a, Expr b);

/// Conjunction of a list; empty list yields `true`.
Expr expr_and_all(const std::vector<Expr>& xs);
/// Disjunction of a list; empty list yields `false`.
Expr expr_or_all(const std::vector<Expr>& xs);

/// Parses a type-checked expression. Every identifier must resolve to a
/// variable, a constant, or a declared parameter in `decls`.
Expr parse_expr(const std::string& text, const DeclTable& decls);

Value eval(const Expr& e, const State& s);
bool eval_bool(const Expr& e, const State& s);

/// Substitutes parameter values and constant-folds. Throws ModelError if a
/// parameter remains unbound and `require_closed` is set.
Expr bind_params(const Expr& e, const std::map<std::string, Value>& params, bool require_closed);

bool references_param(const Expr& e);
void collect_vars(const Expr& e, std::vector<int>& out);

std::string pretty_print(const Expr& e);

}  // namespace safectrl
