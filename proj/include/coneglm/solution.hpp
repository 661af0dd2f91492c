#pragma once

#include <string>

#include "coneglm/types.hpp"

namespace coneglm {

enum class SolveStatus {
  optimal,
  infeasible,
  unbounded,
  iteration_limit,
  numeric_error
};

inline const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::numeric_error: return "numeric_error";
  }
  return "?";
}

struct Solution {
  SolveStatus status = SolveStatus::numeric_error;
  Vector primal;  // present iff status in {optimal, iteration_limit}
  double objective_value = kNaN;
  int iterations = 0;

  bool has_primal() const {
    return status == SolveStatus::optimal ||
           (status == SolveStatus::iteration_limit && primal.size() > 0);
  }
};

}  // namespace coneglm
