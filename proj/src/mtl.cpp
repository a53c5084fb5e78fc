#include "safectrl/mtl.hpp"

#include <map>
#include <sstream>

#include "scan.hpp"

namespace safectrl {

namespace {

using detail::Lexer;

struct MtlParser {
  Lexer lex;
  const DeclTable& decls;

  MtlParser(const std::string& text, const DeclTable& d) : lex(text), decls(d) {}

  Mtl parse() {
    Mtl f = implies();
    if (!lex.eof()) lex.fail("trailing input after formula");
    return f;
  }

  Mtl implies() {
    Mtl a = disj();
    if (lex.try_consume("->")) {
      Mtl b = implies();
      return node(MtlKind::Implies, a, b);
    }
    return a;
  }

  Mtl disj() {
    Mtl a = conj();
    while (lex.try_consume("|")) a = node(MtlKind::Or, a, conj());
    return a;
  }

  Mtl conj() {
    Mtl a = until();
    while (lex.try_consume("&")) a = node(MtlKind::And, a, until());
    return a;
  }

  Mtl until() {
    Mtl a = unary();
    if (lex.try_consume("U")) {
      auto n = std::make_shared<MtlNode>();
      n->kind = MtlKind::Until;
      n->a = a;
      if (lex.try_consume("[")) {
        n->has_interval = true;
        n->lo = lex.number().as_real();
        lex.consume(",");
        n->hi = lex.number().as_real();
        lex.consume("]");
        if (n->lo < 0 || n->hi < n->lo) lex.fail("interval must satisfy 0 <= a <= b");
      }
      n->b = unary();
      return n;
    }
    return a;
  }

  Mtl unary() {
    if (lex.try_consume("!")) return node(MtlKind::Not, unary(), nullptr);
    if (lex.try_consume("G")) return node(MtlKind::Globally, unary(), nullptr);
    if (lex.try_consume("F")) return node(MtlKind::Finally, unary(), nullptr);
    if (lex.try_consume("(")) {
      Mtl inner = implies();
      lex.consume(")");
      return inner;
    }
    auto n = std::make_shared<MtlNode>();
    n->kind = MtlKind::Atom;
    n->atom = detail::parse_expr_stream(lex, decls);
    if (n->atom->type != Value::Type::Bool) lex.fail("atom must be boolean");
    return n;
  }

  static Mtl node(MtlKind k, Mtl a, Mtl b) {
    auto n = std::make_shared<MtlNode>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
};

void collect_nodes(const Mtl& f, std::vector<const MtlNode*>& out) {
  out.push_back(f.get());
  if (f->a) collect_nodes(f->a, out);
  if (f->b) collect_nodes(f->b, out);
}

struct Evaluator {
  const TimedTrace& t;
  std::map<const MtlNode*, std::vector<signed char>> memo;  // -1 unknown, 0, 1

  bool eval(const MtlNode* f, std::size_t i) {
    auto& row = memo[f];
    if (row.empty()) row.assign(t.records.size(), -1);
    if (row[i] >= 0) return row[i] == 1;
    bool v = false;
    switch (f->kind) {
      case MtlKind::Atom:
        v = eval_bool(f->atom, t.records[i].snap);
        break;
      case MtlKind::Not:
        v = !eval(f->a.get(), i);
        break;
      case MtlKind::And:
        v = eval(f->a.get(), i) && eval(f->b.get(), i);
        break;
      case MtlKind::Or:
        v = eval(f->a.get(), i) || eval(f->b.get(), i);
        break;
      case MtlKind::Implies:
        v = !eval(f->a.get(), i) || eval(f->b.get(), i);
        break;
      case MtlKind::Globally: {
        v = true;
        for (std::size_t j = i; j < t.records.size() && v; ++j) v = eval(f->a.get(), j);
        break;
      }
      case MtlKind::Finally: {
        v = false;
        for (std::size_t j = i; j < t.records.size() && !v; ++j) v = eval(f->a.get(), j);
        break;
      }
      case MtlKind::Until: {
        v = false;
        for (std::size_t j = i; j < t.records.size(); ++j) {
          double dt = t.records[j].ms - t.records[i].ms;
          bool in_window = !f->has_interval || (dt >= f->lo && dt <= f->hi);
          if (in_window && eval(f->b.get(), j)) {
            v = true;
            break;
          }
          if (f->has_interval && dt > f->hi) break;
          if (!eval(f->a.get(), j)) break;
        }
        break;
      }
    }
    row[i] = v ? 1 : 0;
    return v;
  }
};

// Earliest index witnessing the failure, for diagnostics.
void locate(Evaluator& ev, const MtlNode* f, std::size_t i, long& idx, const MtlNode*& culprit) {
  switch (f->kind) {
    case MtlKind::Globally:
      for (std::size_t j = i; j < ev.t.records.size(); ++j)
        if (!ev.eval(f->a.get(), j)) {
          idx = long(j);
          culprit = f->a.get();
          return;
        }
      break;
    case MtlKind::And:
      if (!ev.eval(f->a.get(), i)) return locate(ev, f->a.get(), i, idx, culprit);
      return locate(ev, f->b.get(), i, idx, culprit);
    case MtlKind::Implies:
      return locate(ev, f->b.get(), i, idx, culprit);
    default:
      idx = long(i);
      culprit = f;
      return;
  }
}

}  // namespace

Mtl parse_mtl(const std::string& text, const DeclTable& decls) {
  MtlParser p(text, decls);
  Mtl f = p.parse();
  auto n = std::make_shared<MtlNode>(*f);
  n->source = text;
  return n;
}

std::string print_mtl(const Mtl& f) {
  if (!f->source.empty()) return f->source;
  switch (f->kind) {
    case MtlKind::Atom:
      return pretty_print(f->atom);
    case MtlKind::Not:
      return "!(" + print_mtl(f->a) + ")";
    case MtlKind::And:
      return "(" + print_mtl(f->a) + " & " + print_mtl(f->b) + ")";
    case MtlKind::Or:
      return "(" + print_mtl(f->a) + " | " + print_mtl(f->b) + ")";
    case MtlKind::Implies:
      return "(" + print_mtl(f->a) + " -> " + print_mtl(f->b) + ")";
    case MtlKind::Globally:
      return "G (" + print_mtl(f->a) + ")";
    case MtlKind::Finally:
      return "F (" + print_mtl(f->a) + ")";
    case MtlKind::Until: {
      std::ostringstream os;
      os << "(" << print_mtl(f->a) << " U";
      if (f->has_interval) os << "[" << f->lo << "," << f->hi << "]";
      os << " " << print_mtl(f->b) << ")";
      return os.str();
    }
  }
  return "?";
}

MtlVerdict check_trace(const TimedTrace& t, const Mtl& f) {
  if (t.records.empty()) throw ModelError("trace is empty");
  Evaluator ev{t, {}};
  MtlVerdict v;
  v.pass = ev.eval(f.get(), 0);
  if (!v.pass) {
    long idx = 0;
    const MtlNode* culprit = f.get();
    locate(ev, f.get(), 0, idx, culprit);
    v.violation_index = idx;
    v.subformula = print_mtl(std::make_shared<MtlNode>(*culprit));
  }
  return v;
}

std::string translate_detection_pattern(const TranslateNames& n, double d_ms) {
  std::ostringstream os;
  os << "G ((" << n.detector << ") & (" << n.inactive << ") -> (" << n.detector << ") U[0,"
     << d_ms << "] (" << n.active << "))";
  return os.str();
}

std::string translate_liveness_pattern(const TranslateNames& n) {
  std::ostringstream os;
  os << "((F (" << n.final_pred << ")) -> (G ((" << n.active << ") -> F (" << n.mitigated
     << ")) & G ((" << n.mitigated << ") -> F (" << n.inactive << ")))) & G !(" << n.mishap
     << ")";
  return os.str();
}

std::string print_trace(const TimedTrace& t) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& r : t.records) {
    os << r.ms << " | " << r.actor << " | " << r.event << " | ";
    for (std::size_t k = 0; k < t.decls.vars.size(); ++k) {
      if (k) os << ",";
      os << t.decls.vars[k].name << "=" << r.snap.v[k];
    }
    os << "\n";
  }
  return os.str();
}

TimedTrace parse_trace(const std::string& text) {
  TimedTrace t;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TraceRecord r;
    std::istringstream ls(line);
    std::string bar;
    ls >> r.ms >> bar >> r.actor >> bar >> r.event >> bar;
    std::string vars;
    std::getline(ls, vars);
    std::istringstream vs(vars);
    std::string item;
    std::vector<std::pair<std::string, std::int64_t>> pairs;
    while (std::getline(vs, item, ',')) {
      auto p = item.find('=');
      if (p == std::string::npos) continue;
      std::string name = item.substr(0, p);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
        name.erase(name.begin());
      pairs.emplace_back(name, std::stoll(item.substr(p + 1)));
    }
    if (first) {
      for (const auto& [n, _] : pairs) {
        VarDecl d;
        d.name = n;
        d.kind = VarKind::BoundedInt;
        d.lo = -(1ll << 40);
        d.hi = 1ll << 40;
        d.init = 0;
        t.decls.vars.push_back(d);
      }
      first = false;
    }
    r.snap.v.assign(t.decls.vars.size(), 0);
    for (const auto& [n, v] : pairs) {
      int k = t.decls.var_index(n);
      if (k >= 0) r.snap.v[std::size_t(k)] = v;
    }
    t.records.push_back(std::move(r));
  }
  return t;
}

}  // namespace safectrl
