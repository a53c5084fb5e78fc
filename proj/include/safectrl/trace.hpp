#pragma once

#include <string>
#include <vector>

#include "safectrl/expr.hpp"

namespace safectrl {

struct TraceRecord {
  double ms = 0.0;
  std::string actor;
  std::string event;
  State snap;
};

/// Finite timed trace: timestamps nondecreasing, first record at t=0.
struct TimedTrace {
  DeclTable decls;  // snapshot variables, fixed order
  std::vector<TraceRecord> records;
};

std::string print_trace(const TimedTrace& t);
TimedTrace parse_trace(const std::string& text);

}  // namespace safectrl
