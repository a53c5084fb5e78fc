#include "safectrl/risk.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "scan.hpp"

namespace safectrl {

namespace {

using detail::Lexer;

std::string strip_mode_ref(const std::string& s) {
  // Mode references may carry a leading '.'.
  return !s.empty() && s[0] == '.' ? s.substr(1) : s;
}

struct RiskParser {
  Lexer lex;
  RiskModel m;

  explicit RiskParser(const std::string& text) : lex(text) {}

  RiskModel run() {
    while (!lex.eof()) {
      if (lex.try_consume("mode")) {
        parse_mode();
      } else if (lex.try_consume("distances")) {
        parse_distances();
      } else if (lex.try_consume("profile")) {
        parse_profile();
      } else if (lex.try_consume("const")) {
        parse_const();
      } else if (lex.ident_ahead()) {
        parse_factor();
      } else {
        lex.fail("expected factor, mode, distances, profile or const");
      }
    }
    link();
    return m;
  }

  void parse_const() {
    std::string name = lex.ident();
    lex.consume("=");
    Value v = lex.number();
    if (v.type == Value::Type::Int) v = Value::real(double(v.i));
    lex.consume(";");
    m.constants[name] = v;
  }

  std::vector<std::string> id_list() {
    lex.consume("(");
    std::vector<std::string> out;
    while (true) {
      lex.try_consume(".");
      out.push_back(lex.ident());
      if (!lex.try_consume(",")) break;
    }
    lex.consume(")");
    return out;
  }

  void parse_factor() {
    RiskFactor f;
    f.id = lex.ident();
    while (!lex.try_consume(";")) {
      if (lex.try_consume("desc")) {
        f.description = lex.quoted();
      } else if (lex.try_consume("requiresOcc")) {
        f.requires_occ = id_list();
      } else if (lex.try_consume("prevents")) {
        f.prevents = id_list();
      } else if (lex.try_consume("mitPreventsMit")) {
        f.mit_prevents_mit = id_list();
      } else if (lex.try_consume("guard")) {
        f.guard_text = lex.quoted();
      } else if (lex.try_consume("detectedBy")) {
        auto ids = id_list();
        if (ids.size() != 1) lex.fail("detectedBy expects exactly one mode");
        f.detected_by = strip_mode_ref(ids[0]);
      } else if (lex.try_consume("mitigatedBy")) {
        for (auto& s : id_list()) f.mitigated_by.push_back(strip_mode_ref(s));
      } else if (lex.try_consume("resumedBy")) {
        for (auto& s : id_list()) f.resumed_by.push_back(strip_mode_ref(s));
      } else if (lex.try_consume("severity")) {
        lex.consume("=");
        f.severity = lex.number().as_real();
        if (f.severity < 0) lex.fail("severity must be nonnegative");
      } else {
        lex.fail("unknown factor attribute");
      }
    }
    for (const auto& prev : m.factors)
      if (prev.id == f.id) lex.fail("duplicate factor: " + f.id);
    m.factors.push_back(std::move(f));
  }

  void parse_mode() {
    MitigationOption o;
    o.name = lex.ident();
    while (!lex.try_consume(";")) {
      if (lex.try_consume("desc")) {
        o.description = lex.quoted();
      } else if (lex.try_consume("guard")) {
        o.guard_text = lex.quoted();
      } else if (lex.try_consume("cf")) {
        o.cf_text = lex.quoted();
      } else if (lex.try_consume("update")) {
        parse_update(o, lex.quoted());
      } else if (lex.try_consume("target")) {
        lex.consume("(");
        while (true) {
          std::string key = lex.ident();
          lex.consume("=");
          std::string val = lex.ident();
          if (key == "act")
            o.target_activity = val;
          else if (key == "safmod")
            o.target_safmod = val;
          else
            lex.fail("target expects act=... or safmod=...");
          if (!lex.try_consume(",")) break;
        }
        lex.consume(")");
      } else if (lex.try_consume("disruption")) {
        lex.consume("=");
        o.disruption_text = number_or_quoted();
      } else if (lex.try_consume("nuisance")) {
        lex.consume("=");
        o.nuisance_text = number_or_quoted();
      } else if (lex.try_consume("effort")) {
        lex.consume("=");
        o.effort_text = number_or_quoted();
      } else {
        lex.fail("unknown mode attribute");
      }
    }
    for (const auto& prev : m.modes)
      if (prev.name == o.name) lex.fail("duplicate mode: " + o.name);
    m.modes.push_back(std::move(o));
  }

  std::string number_or_quoted() {
    if (lex.peek() == '"') return lex.quoted();
    return lex.number().str();
  }

  // update "(x'=v)&(y'=w)"
  void parse_update(MitigationOption& o, const std::string& text) {
    Lexer ul(text);
    while (true) {
      ul.consume("(");
      std::string var = ul.ident();
      ul.consume("'");
      ul.consume("=");
      std::string rhs;
      int depth = 0;
      while (!ul.eof()) {
        char c = ul.peek();
        if (c == '(') depth++;
        if (c == ')') {
          if (depth == 0) break;
          depth--;
        }
        rhs += c;
        ul.advance();
      }
      ul.consume(")");
      o.updates.emplace_back(var, rhs);
      if (!ul.try_consume("&")) break;
    }
  }

  void parse_distances() {
    DistanceMatrix d;
    d.name = lex.ident();
    lex.consume("{");
    while (!lex.try_consume("}")) {
      std::string cat = lex.ident();
      lex.consume(":");
      std::vector<double> row;
      while (lex.peek() != ';') row.push_back(lex.number().as_real());
      lex.consume(";");
      if (row.size() != d.categories.size() + 1)
        lex.fail("row of " + cat + " must have " + std::to_string(d.categories.size() + 1) +
                 " entries");
      if (row.back() != 0.0) lex.fail("diagonal entry of " + cat + " must be 0");
      d.categories.push_back(cat);
      d.lower.push_back(std::move(row));
    }
    if (d.name == "act")
      m.act = std::move(d);
    else if (d.name == "safmod")
      m.safmod = std::move(d);
    else
      lex.fail("unknown distances block: " + d.name);
  }

  // profile { <header idents>; ROW: "v" "v" ...; ... }
  void parse_profile() {
    lex.consume("{");
    std::vector<std::string> cols;
    while (lex.peek() != ';') cols.push_back(lex.ident());
    lex.consume(";");
    while (!lex.try_consume("}")) {
      ProfileRow row;
      row.action = lex.ident();
      lex.consume(":");
      for (const auto& col : cols) {
        std::string cell = lex.quoted();
        if (col == "guard") {
          row.guard_text = cell;
        } else if (col == "guard_prod") {
          row.guard_prod_text = cell;
        } else if (col == "prod") {
          row.prod_text = cell;
        } else if (col.rfind("risk_", 0) == 0) {
          row.risk[col.substr(5)] = cell;
        } else {
          lex.fail("unknown profile column: " + col);
        }
      }
      lex.consume(";");
      m.profile.push_back(std::move(row));
    }
  }

  void link() {
    for (const auto& f : m.factors) {
      auto check_dep = [&](const std::vector<std::string>& ids, const char* kind) {
        for (const auto& id : ids)
          if (!m.find_factor(id))
            throw ModelError("factor " + f.id + " " + kind + " unknown factor " + id);
      };
      check_dep(f.requires_occ, "requiresOcc");
      check_dep(f.prevents, "prevents");
      check_dep(f.mit_prevents_mit, "mitPreventsMit");
      auto check_mode = [&](const std::string& name, const char* attr) {
        if (!name.empty() && !m.find_mode(name))
          throw ModelError("factor " + f.id + " " + attr + " references unknown mode " + name);
      };
      check_mode(f.detected_by, "detectedBy");
      for (const auto& n : f.mitigated_by) check_mode(n, "mitigatedBy");
      for (const auto& n : f.resumed_by) check_mode(n, "resumedBy");
    }
    for (const auto& row : m.profile)
      for (const auto& [fid, _] : row.risk)
        if (!m.find_factor(fid)) throw ModelError("profile references unknown factor " + fid);
    // requiresOcc must be acyclic.
    std::map<std::string, int> mark;  // 0 new, 1 in progress, 2 done
    std::function<void(const RiskFactor&)> visit = [&](const RiskFactor& f) {
      int& st = mark[f.id];
      if (st == 1) throw ModelError("cyclic requiresOcc involving " + f.id);
      if (st == 2) return;
      st = 1;
      for (const auto& id : f.requires_occ) visit(*m.find_factor(id));
      st = 2;
    };
    for (const auto& f : m.factors) visit(f);
  }
};

}  // namespace

int DistanceMatrix::index_of(const std::string& cat) const {
  for (std::size_t k = 0; k < categories.size(); ++k)
    if (categories[k] == cat) return int(k);
  return -1;
}

double grad(const DistanceMatrix& m, const std::string& from, const std::string& to) {
  int i = m.index_of(from);
  int j = m.index_of(to);
  if (i < 0) throw ModelError("unknown category: " + from);
  if (j < 0) throw ModelError("unknown category: " + to);
  if (i == j) return 0.0;
  if (i > j) return m.lower[std::size_t(i)][std::size_t(j)];
  return -m.lower[std::size_t(j)][std::size_t(i)];
}

const RiskFactor* RiskModel::find_factor(const std::string& id) const {
  for (const auto& f : factors)
    if (f.id == id) return &f;
  return nullptr;
}

const MitigationOption* RiskModel::find_mode(const std::string& name) const {
  for (const auto& o : modes)
    if (o.name == name) return &o;
  return nullptr;
}

std::vector<const MitigationOption*> RiskModel::mitigations(const RiskFactor& f) const {
  std::vector<const MitigationOption*> out;
  for (const auto& n : f.mitigated_by) out.push_back(find_mode(n));
  return out;
}

std::vector<const MitigationOption*> RiskModel::resumptions(const RiskFactor& f) const {
  std::vector<const MitigationOption*> out;
  for (const auto& n : f.resumed_by) out.push_back(find_mode(n));
  return out;
}

RiskModel parse_risk_model(const std::string& text) {
  RiskParser p(text);
  return p.run();
}

std::vector<RiskState> risk_space(const RiskModel& m) {
  const std::size_t n = m.factors.size();
  std::vector<std::size_t> idx_of;
  auto factor_index = [&](const std::string& id) {
    std::size_t j = 0;
    while (m.factors[j].id != id) ++j;
    return j;
  };

  auto consistent = [&](const RiskState& rs) {
    for (std::size_t i = 0; i < n; ++i) {
      const RiskFactor& f = m.factors[i];
      for (const auto& id : f.requires_occ)
        if (rs[i] != BasicPhase::Inactive && rs[factor_index(id)] == BasicPhase::Inactive)
          return false;
      for (const auto& id : f.prevents)
        if (rs[i] == BasicPhase::Active && rs[factor_index(id)] == BasicPhase::Active)
          return false;
      for (const auto& id : f.mit_prevents_mit)
        if (rs[i] == BasicPhase::Mitigated && rs[factor_index(id)] == BasicPhase::Mitigated)
          return false;
    }
    return true;
  };

  std::vector<RiskState> out;
  RiskState cur(n, BasicPhase::Inactive);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == n) {
      if (consistent(cur)) out.push_back(cur);
      return;
    }
    for (BasicPhase p : {BasicPhase::Inactive, BasicPhase::Active, BasicPhase::Mitigated}) {
      cur[k] = p;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

Expr unsafe_region_predicate(const RiskModel& m, const DeclTable& decls) {
  std::vector<Expr> parts;
  for (const auto& f : m.factors) {
    Expr pv = expr_var(decls, f.phase_var());
    for (const char* phase : {"act", "mit1", "mit2"}) {
      auto it = decls.constants.find(phase);
      if (it == decls.constants.end())
        throw ModelError("phase constant missing: " + std::string(phase));
      parts.push_back(expr_cmp(ExprOp::Eq, pv, expr_lit(it->second)));
    }
  }
  return expr_or_all(parts);
}

std::string print_risk_model(const RiskModel& m) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, v] : m.constants) os << "const " << name << " = " << v.str() << ";\n";
  for (const auto& f : m.factors) {
    os << f.id << " desc \"" << f.description << "\"";
    auto list = [&](const char* kw, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      os << "\n  " << kw << " (";
      for (std::size_t k = 0; k < ids.size(); ++k) os << (k ? "," : "") << ids[k];
      os << ")";
    };
    list("requiresOcc", f.requires_occ);
    list("prevents", f.prevents);
    list("mitPreventsMit", f.mit_prevents_mit);
    if (!f.guard_text.empty()) os << "\n  guard \"" << f.guard_text << "\"";
    if (!f.detected_by.empty()) os << "\n  detectedBy (." << f.detected_by << ")";
    auto modes = [&](const char* kw, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      os << "\n  " << kw << " (";
      for (std::size_t k = 0; k < ids.size(); ++k) os << (k ? ",." : ".") << ids[k];
      os << ")";
    };
    modes("mitigatedBy", f.mitigated_by);
    modes("resumedBy", f.resumed_by);
    os << "\n  severity = " << f.severity << ";\n";
  }
  for (const auto& o : m.modes) {
    os << "mode " << o.name << " desc \"" << o.description << "\"";
    if (!o.guard_text.empty()) os << "\n  guard \"" << o.guard_text << "\"";
    if (!o.cf_text.empty()) os << "\n  cf \"" << o.cf_text << "\"";
    if (!o.updates.empty()) {
      os << "\n  update \"";
      for (std::size_t k = 0; k < o.updates.size(); ++k)
        os << (k ? "&(" : "(") << o.updates[k].first << "'=" << o.updates[k].second << ")";
      os << "\"";
    }
    if (o.target_activity || o.target_safmod) {
      os << "\n  target (";
      if (o.target_activity) os << "act=" << *o.target_activity;
      if (o.target_activity && o.target_safmod) os << ", ";
      if (o.target_safmod) os << "safmod=" << *o.target_safmod;
      os << ")";
    }
    if (!o.disruption_text.empty()) os << "\n  disruption=\"" << o.disruption_text << "\"";
    if (!o.nuisance_text.empty()) os << "\n  nuisance=\"" << o.nuisance_text << "\"";
    if (!o.effort_text.empty()) os << "\n  effort=\"" << o.effort_text << "\"";
    os << ";\n";
  }
  auto dm = [&](const DistanceMatrix& d) {
    if (d.categories.empty()) return;
    os << "distances " << d.name << " {\n";
    for (std::size_t k = 0; k < d.categories.size(); ++k) {
      os << "  " << d.categories[k] << ":";
      for (double v : d.lower[k]) os << " " << v;
      os << ";\n";
    }
    os << "}\n";
  };
  dm(m.act);
  dm(m.safmod);
  if (!m.profile.empty()) {
    os << "profile {\n  guard";
    std::vector<std::string> fids;
    for (const auto& f : m.factors) fids.push_back(f.id);
    for (const auto& id : fids) os << " risk_" << id;
    os << " guard_prod prod;\n";
    for (const auto& r : m.profile) {
      os << "  " << r.action << ": \"" << r.guard_text << "\"";
      for (const auto& id : fids) {
        auto it = r.risk.find(id);
        os << " \"" << (it == r.risk.end() ? "" : it->second) << "\"";
      }
      os << " \"" << r.guard_prod_text << "\" \"" << r.prod_text << "\";\n";
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace safectrl
