#pragma once

#include <functional>
#include <map>
#include <string>

#include "coneglm/barrier_solver.hpp"
#include "coneglm/program.hpp"
#include "coneglm/solution.hpp"

namespace coneglm {

// Continuous conic backend. `solve` ignores integrality marks; capability
// flags gate which programs a backend may receive.
struct BackendHandle {
  std::string name;
  bool supports_nonnegative = false;
  bool supports_second_order = false;
  bool supports_exponential = false;
  std::function<Solution(const ConicProgram&)> solve;
  // optional warm-started entry point (nullptr start = cold)
  std::function<Solution(const ConicProgram&, const Vector*)> solve_warm;

  bool capable_of(const ConicProgram& p) const {
    for (const auto& blk : p.blocks) {
      switch (blk.cone.kind) {
        case ConeKind::nonnegative:
          if (!supports_nonnegative) return false;
          break;
        case ConeKind::second_order:
          if (!supports_second_order) return false;
          break;
        case ConeKind::exponential_primal:
          if (!supports_exponential) return false;
          break;
        case ConeKind::zero:
          break;
      }
    }
    return true;
  }
};

class BackendRegistry {
 public:
  static BackendRegistry& instance() {
    static BackendRegistry reg;
    return reg;
  }

  void register_backend(BackendHandle handle) {
    order_.push_back(handle.name);
    backends_[handle.name] = std::move(handle);
  }

  // "auto" picks the first registered backend capable of the program.
  const BackendHandle& find(const std::string& name,
                            const ConicProgram& p) const {
    if (name == "auto") {
      for (const auto& n : order_) {
        const auto& b = backends_.at(n);
        if (b.capable_of(p)) return b;
      }
      throw InputError("no registered backend supports this program's cones");
    }
    auto it = backends_.find(name);
    if (it == backends_.end())
      throw InputError("unknown backend '" + name + "'");
    if (!it->second.capable_of(p))
      throw InputError("backend '" + name +
                       "' does not support all cones in this program");
    return it->second;
  }

  std::vector<std::string> names() const { return order_; }

 private:
  BackendRegistry() {
    // built-in barrier interior-point backends; the extended-precision
    // variant is the default because tight acceptance tolerances need it
    BackendHandle ld;
    ld.name = "barrier";
    ld.supports_nonnegative = ld.supports_second_order = ld.supports_exponential = true;
    ld.solve = [](const ConicProgram& p) {
      return BarrierSolver<long double>().solve(p);
    };
    ld.solve_warm = [](const ConicProgram& p, const Vector* warm) {
      return BarrierSolver<long double>().solve(p, warm);
    };
    register_backend(std::move(ld));

    BackendHandle f64;
    f64.name = "barrier-f64";
    f64.supports_nonnegative = f64.supports_second_order = f64.supports_exponential = true;
    f64.solve = [](const ConicProgram& p) {
      SolverConfig cfg;
      cfg.gap_abs = 1e-9;
      cfg.gap_rel = 1e-9;
      return BarrierSolver<double>(cfg).solve(p);
    };
    f64.solve_warm = [](const ConicProgram& p, const Vector* warm) {
      SolverConfig cfg;
      cfg.gap_abs = 1e-9;
      cfg.gap_rel = 1e-9;
      return BarrierSolver<double>(cfg).solve(p, warm);
    };
    register_backend(std::move(f64));
  }

  std::map<std::string, BackendHandle> backends_;
  std::vector<std::string> order_;
};

// Solve the continuous relaxation (integrality ignored). Capability errors
// are raised before any solve attempt.
inline Solution solve_continuous(const ConicProgram& program,
                                 const std::string& backend = "auto") {
  const auto& b = BackendRegistry::instance().find(backend, program);
  return b.solve(program);
}

}  // namespace coneglm
