#pragma once

// Branch-and-bound over the binary selection/sign variables, using the
// continuous conic backend for node relaxations. Branching fixes variable
// bounds; fractional relaxations are rounded and repaired to produce early
// incumbents. Single-threaded and deterministic: best-bound node order with
// ties broken by node id, branching ties by lowest variable index.

#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "coneglm/backend.hpp"
#include "coneglm/program.hpp"
#include "coneglm/solution.hpp"

#ifdef CONEGLM_BNB_TRACE
#include <cstdio>
#define BNB_TRACE(...) std::fprintf(stderr, __VA_ARGS__)
#else
#define BNB_TRACE(...) ((void)0)
#endif

namespace coneglm {

enum class NodeOrder { best_bound, depth_first };
enum class BranchRule { most_fractional, first_fractional };

struct BnbConfig {
  double rel_gap = 1e-6;
  double int_tol = 1e-5;
  int max_nodes = 10000;
  NodeOrder node_order = NodeOrder::best_bound;
  BranchRule branching = BranchRule::most_fractional;
  std::string backend = "auto";

  void check() const {
    if (rel_gap <= 0 || int_tol <= 0)
      throw InputError("BnbConfig tolerances must be positive");
  }
};

struct MiSolution {
  Solution solution;        // best integral-feasible solution
  double best_bound = -kInf;
  int nodes = 0;            // nodes evaluated
  int root_iterations = 0;  // backend iterations at the root relaxation
  int numeric_failures = 0; // nodes pruned with a numeric-error warning
};

namespace bnb_detail {

struct Node {
  std::vector<std::pair<Index, double>> fixings;  // binary -> {0, 1}
  double bound;
  Vector warm;
  int depth;
  long id;
};

struct NodeCompare {
  // priority queue pops the smallest bound; ties by lowest node id
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

inline void apply_fixings(ConicProgram& p,
                          const std::vector<std::pair<Index, double>>& fixings) {
  for (auto& [i, v] : fixings) {
    p.lower[i] = v;
    p.upper[i] = v;
  }
}

inline double fractionality(double z) { return std::min(z, 1.0 - z); }

}  // namespace bnb_detail

// Best integral-feasible solution with proof:
// best_bound >= incumbent - rel_gap * (1 + |incumbent|).
inline MiSolution solve_mi(const ConicProgram& program,
                           const BnbConfig& config = {},
                           const Vector* warm_start = nullptr) {
  config.check();
  const auto& backend = BackendRegistry::instance().find(config.backend, program);
  auto solve_node = [&](const ConicProgram& p, const Vector* warm) {
    return backend.solve_warm ? backend.solve_warm(p, warm) : backend.solve(p);
  };

  MiSolution out;
  if (program.binaries.empty()) {
    out.solution = solve_node(program, warm_start);
    out.root_iterations = out.solution.iterations;
    out.best_bound = out.solution.status == SolveStatus::optimal
                         ? out.solution.objective_value
                         : -kInf;
    out.nodes = 1;
    return out;
  }

  const double gap_ok = config.rel_gap;
  bool have_incumbent = false;
  Solution incumbent;
  int total_iterations = 0;

  // round the binaries of a relaxation, re-solve with them fixed, and offer
  // the result as an incumbent
  auto try_incumbent = [&](const Vector& primal, const Vector* warm) {
    std::vector<std::pair<Index, double>> fix;
    fix.reserve(program.binaries.size());
    for (Index b : program.binaries)
      fix.push_back({b, primal[b] >= 0.5 ? 1.0 : 0.0});
    ConicProgram fixed = program;
    bnb_detail::apply_fixings(fixed, fix);
    Solution s = solve_node(fixed, warm ? warm : &primal);
    total_iterations += s.iterations;
    if (s.status != SolveStatus::optimal) return;
    if (!have_incumbent ||
        s.objective_value < incumbent.objective_value - 1e-12) {
      incumbent = std::move(s);
      have_incumbent = true;
    }
  };

  std::priority_queue<bnb_detail::Node, std::vector<bnb_detail::Node>,
                      bnb_detail::NodeCompare>
      open;
  std::vector<bnb_detail::Node> stack;  // depth_first storage
  long next_id = 0;

  auto push_node = [&](bnb_detail::Node n) {
    if (config.node_order == NodeOrder::best_bound) open.push(std::move(n));
    else stack.push_back(std::move(n));
  };
  auto pop_node = [&]() {
    bnb_detail::Node n;
    if (config.node_order == NodeOrder::best_bound) {
      n = open.top();
      open.pop();
    } else {
      n = stack.back();
      stack.pop_back();
    }
    return n;
  };
  auto open_empty = [&] {
    return config.node_order == NodeOrder::best_bound ? open.empty()
                                                      : stack.empty();
  };
  auto open_best_bound = [&]() -> double {
    if (config.node_order == NodeOrder::best_bound)
      return open.empty() ? kInf : open.top().bound;
    double b = kInf;
    for (const auto& n : stack) b = std::min(b, n.bound);
    return b;
  };

  push_node({{}, -kInf, warm_start ? *warm_start : Vector(), 0, next_id++});
  bool hit_node_limit = false;
  double exhausted_bound = kInf;  // tightest bound among pruned-with-warning

  while (!open_empty()) {
    if (out.nodes >= config.max_nodes) {
      hit_node_limit = true;
      break;
    }
    // global optimality proof
    const double lb = std::min(open_best_bound(), exhausted_bound);
    if (have_incumbent &&
        lb >= incumbent.objective_value -
                  gap_ok * (1.0 + std::abs(incumbent.objective_value))) {
      out.best_bound = lb;
      break;
    }

    bnb_detail::Node node = pop_node();
    if (have_incumbent &&
        node.bound >= incumbent.objective_value -
                          gap_ok * (1.0 + std::abs(incumbent.objective_value)))
      continue;

    ConicProgram sub = program;
    bnb_detail::apply_fixings(sub, node.fixings);
    const Vector* warm = node.warm.size() == program.num_vars ? &node.warm : nullptr;
    Solution rel = solve_node(sub, warm);
    ++out.nodes;
    total_iterations += rel.iterations;
    if (node.depth == 0) out.root_iterations = rel.iterations;
    BNB_TRACE("node id=%ld depth=%d bound=%.4f -> %s obj=%.4f fix=[", node.id,
              node.depth, node.bound, solve_status_name(rel.status),
              rel.objective_value);
#ifdef CONEGLM_BNB_TRACE
    for (auto& [i, v] : node.fixings) std::fprintf(stderr, "%d=%g ", (int)i, v);
    std::fprintf(stderr, "] inc=%.4f\n", have_incumbent ? incumbent.objective_value : -1.0);
#endif

    if (rel.status == SolveStatus::infeasible) continue;
    if (rel.status == SolveStatus::numeric_error ||
        rel.status == SolveStatus::unbounded) {
      ++out.numeric_failures;  // pruned with warning; parent bound kept
      exhausted_bound = std::min(exhausted_bound, node.bound);
      continue;
    }
    double node_bound = node.bound;
    if (rel.status == SolveStatus::optimal)
      node_bound = std::max(node_bound, rel.objective_value);
    // iteration_limit: feasible primal but no valid lower bound; keep the
    // parent bound and continue branching on the returned point
    if (!rel.has_primal()) {
      ++out.numeric_failures;
      exhausted_bound = std::min(exhausted_bound, node.bound);
      continue;
    }
    if (have_incumbent &&
        node_bound >= incumbent.objective_value -
                          gap_ok * (1.0 + std::abs(incumbent.objective_value)))
      continue;

    // integrality check
    Index branch_var = -1;
    double best_frac = config.int_tol;
    for (Index b : program.binaries) {
      const double f = bnb_detail::fractionality(rel.primal[b]);
      if (config.branching == BranchRule::first_fractional) {
        if (f > config.int_tol) {
          branch_var = b;
          break;
        }
      } else if (f > best_frac) {  // strict: ties resolve to lowest index
        best_frac = f;
        branch_var = b;
      }
    }

    if (branch_var < 0) {
      BNB_TRACE("  integral -> try incumbent\n");
      try_incumbent(rel.primal, nullptr);
      BNB_TRACE("  incumbent now %.4f\n", have_incumbent ? incumbent.objective_value : -1.0);
      continue;
    }
    BNB_TRACE("  branch on %d (z=%.4f)\n", (int)branch_var, rel.primal[branch_var]);
    if (node.depth == 0) try_incumbent(rel.primal, nullptr);  // rounding heuristic

    for (double v : {0.0, 1.0}) {
      bnb_detail::Node child;
      child.fixings = node.fixings;
      child.fixings.push_back({branch_var, v});
      child.bound = node_bound;
      child.warm = rel.primal;
      child.depth = node.depth + 1;
      child.id = next_id++;
      push_node(std::move(child));
    }
  }

  if (have_incumbent) {
    out.solution = std::move(incumbent);
    const double lb = std::min(open_best_bound(), exhausted_bound);
    out.best_bound = open_empty() && !hit_node_limit
                         ? out.solution.objective_value
                         : std::min(lb, out.solution.objective_value);
    const bool proven =
        !hit_node_limit &&
        (open_empty() ||
         out.best_bound >= out.solution.objective_value -
                               gap_ok * (1.0 + std::abs(out.solution.objective_value)));
    out.solution.status =
        proven ? SolveStatus::optimal : SolveStatus::iteration_limit;
  } else {
    out.solution.status = hit_node_limit || out.numeric_failures > 0
                              ? SolveStatus::iteration_limit
                              : SolveStatus::infeasible;
  }
  out.solution.iterations = total_iterations;
  return out;
}

// One KMax-style mixed-integer solve per k, largest k first so that each
// incumbent seeds the next solve's pruning bound via a drop-one repair.
// Per-k failures are recorded in the row, never aborting the sweep.
struct SequenceRow {
  Index k;
  MiSolution result;
};

inline std::vector<SequenceRow> sequence_solve(
    const std::function<ConicProgram(Index)>& program_for_k,
    std::vector<Index> k_values, const BnbConfig& config = {}) {
  std::sort(k_values.begin(), k_values.end(), std::greater<Index>());
  std::vector<SequenceRow> rows;
  Vector carry;  // previous incumbent, used as a warm hint
  for (Index k : k_values) {
    ConicProgram p = program_for_k(k);
    MiSolution r = solve_mi(p, config, carry.size() == p.num_vars ? &carry : nullptr);
    if (r.solution.has_primal()) carry = r.solution.primal;
    rows.push_back({k, std::move(r)});
  }
  return rows;
}

}  // namespace coneglm
