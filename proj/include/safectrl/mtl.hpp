#pragma once

#include <memory>
#include <string>
#include <vector>

#include "safectrl/trace.hpp"

namespace safectrl {

enum class MtlKind { Atom, Not, And, Or, Implies, Globally, Finally, Until };

struct MtlNode;
using Mtl = std::shared_ptr<const MtlNode>;

struct MtlNode {
  MtlKind kind = MtlKind::Atom;
  Expr atom;
  Mtl a, b;
  bool has_interval = false;  // U only; closed [lo,hi] in ms
  double lo = 0.0, hi = 0.0;
  std::string source;
};

Mtl parse_mtl(const std::string& text, const DeclTable& decls);
std::string print_mtl(const Mtl& f);

struct MtlVerdict {
  bool pass = true;
  long violation_index = -1;
  std::string subformula;
};

/// Pointwise finite-trace semantics: G is weak at the trace end, F/U need a
/// witness inside the trace, U[a,b] compares timestamp differences in ms with
/// inclusive bounds.
MtlVerdict check_trace(const TimedTrace& t, const Mtl& f);

/// Rewrites the two supported verification patterns into their trace-checkable
/// counterparts (detection latency with window d_ms, and guarded liveness
/// with mishap freedom). Input and output are property-file lines; the
/// `names` argument supplies the factor-specific atoms.
struct TranslateNames {
  std::string detector;  // sensor predicate text
  std::string inactive;  // phase = inact text
  std::string active;    // phase = act text
  std::string mitigated;
  std::string final_pred;
  std::string mishap;
};

std::string translate_detection_pattern(const TranslateNames& n, double d_ms);
std::string translate_liveness_pattern(const TranslateNames& n);

}  // namespace safectrl
