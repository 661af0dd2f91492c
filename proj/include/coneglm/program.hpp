#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "coneglm/cones.hpp"
#include "coneglm/types.hpp"

namespace coneglm {

// One cone-constrained affine map: A*v + b in K.
struct ConeBlock {
  SparseMatrix A;  // cone.dim x num_vars
  Vector b;        // cone.dim
  Cone cone;

  Vector evaluate(const Vector& v) const { return A * v + b; }
};

// Linear objective over a variable vector, cone-constrained affine maps,
// variable bounds and integrality marks. Minimization convention.
struct ConicProgram {
  Index num_vars = 0;
  Vector objective;  // dense internally; sparse on disk
  std::vector<ConeBlock> blocks;
  Vector lower, upper;             // +-inf allowed
  std::vector<Index> binaries;     // variables restricted to {0, 1}
  std::vector<std::string> var_names;  // empty or size num_vars

  bool is_binary(Index i) const {
    return std::find(binaries.begin(), binaries.end(), i) != binaries.end();
  }
  Index total_cone_rows() const {
    Index r = 0;
    for (const auto& blk : blocks) r += blk.cone.dim;
    return r;
  }
  Index count_blocks(ConeKind k) const {
    Index c = 0;
    for (const auto& blk : blocks) c += blk.cone.kind == k;
    return c;
  }
  Index count_rows(ConeKind k) const {
    Index c = 0;
    for (const auto& blk : blocks)
      if (blk.cone.kind == k) c += blk.cone.dim;
    return c;
  }
};

// Incremental construction; finished programs are immutable by convention.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(Index num_vars) {
    p_.num_vars = num_vars;
    p_.objective = Vector::Zero(num_vars);
    p_.lower = Vector::Constant(num_vars, -kInf);
    p_.upper = Vector::Constant(num_vars, kInf);
  }
  explicit ProgramBuilder(ConicProgram base) : p_(std::move(base)) {}

  Index num_vars() const { return p_.num_vars; }

  Index add_variable(const std::string& name, double lo = -kInf,
                     double hi = kInf) {
    const Index i = p_.num_vars++;
    append(p_.objective, 0.0);
    append(p_.lower, lo);
    append(p_.upper, hi);
    if (!p_.var_names.empty() || !name.empty()) {
      p_.var_names.resize(static_cast<size_t>(p_.num_vars) - 1, "");
      p_.var_names.push_back(name);
    }
    for (auto& blk : p_.blocks) blk.A.conservativeResize(blk.cone.dim, p_.num_vars);
    return i;
  }

  void set_objective(Index i, double c) { p_.objective[i] = c; }
  void add_objective(Index i, double c) { p_.objective[i] += c; }
  void set_bounds(Index i, double lo, double hi) {
    p_.lower[i] = lo;
    p_.upper[i] = hi;
  }
  void tighten_lower(Index i, double lo) { p_.lower[i] = std::max(p_.lower[i], lo); }
  void tighten_upper(Index i, double hi) { p_.upper[i] = std::min(p_.upper[i], hi); }
  void mark_binary(Index i) {
    p_.binaries.push_back(i);
    tighten_lower(i, 0.0);
    tighten_upper(i, 1.0);
  }

  void add_block(const std::vector<Triplet>& entries, Vector offset, Cone cone) {
    SparseMatrix A(cone.dim, p_.num_vars);
    A.setFromTriplets(entries.begin(), entries.end());
    p_.blocks.push_back(ConeBlock{std::move(A), std::move(offset), cone});
  }

  // Single affine row: coeffs . v + offset in {>= 0 | == 0}.
  void add_row(const std::vector<std::pair<Index, double>>& coeffs,
               double offset, ConeKind kind) {
    std::vector<Triplet> tr;
    tr.reserve(coeffs.size());
    for (auto& [i, c] : coeffs) tr.emplace_back(0, static_cast<int>(i), c);
    Vector b(1);
    b[0] = offset;
    add_block(tr, b, kind == ConeKind::zero ? Cone::Zero(1) : Cone::Nonnegative(1));
  }

  ConicProgram take() { return std::move(p_); }
  const ConicProgram& peek() const { return p_; }

 private:
  static void append(Vector& v, double x) {
    v.conservativeResize(v.size() + 1);
    v[v.size() - 1] = x;
  }
  ConicProgram p_;
};

// Structural validation; returns human-readable defects, empty when ok.
inline std::vector<std::string> validate(const ConicProgram& p) {
  std::vector<std::string> defects;
  if (p.num_vars < 1) defects.push_back("program has no variables");
  if (p.objective.size() != p.num_vars)
    defects.push_back("objective length != num_vars");
  if (p.lower.size() != p.num_vars || p.upper.size() != p.num_vars)
    defects.push_back("bounds length != num_vars");
  for (size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& blk = p.blocks[k];
    const std::string tag = "block " + std::to_string(k) + " (" +
                            cone_kind_name(blk.cone.kind) + ")";
    if (blk.A.rows() != blk.cone.dim)
      defects.push_back(tag + ": affine map has " + std::to_string(blk.A.rows()) +
                        " rows, cone dimension is " + std::to_string(blk.cone.dim));
    if (blk.A.cols() != p.num_vars)
      defects.push_back(tag + ": affine map has " + std::to_string(blk.A.cols()) +
                        " columns, program has " + std::to_string(p.num_vars));
    if (blk.b.size() != blk.cone.dim)
      defects.push_back(tag + ": offset length != cone dimension");
    if (blk.cone.kind == ConeKind::exponential_primal && blk.cone.dim != 3)
      defects.push_back(tag + ": exponential cone must have dimension 3");
    if (blk.cone.kind == ConeKind::second_order && blk.cone.dim < 2)
      defects.push_back(tag + ": second_order cone must have dimension >= 2");
  }
  for (Index i = 0; i < std::min<Index>(p.lower.size(), p.upper.size()); ++i)
    if (p.lower[i] > p.upper[i])
      defects.push_back("variable " + std::to_string(i) + ": lower bound " +
                        std::to_string(p.lower[i]) + " > upper bound");
  for (Index i : p.binaries) {
    if (i < 0 || i >= p.num_vars) {
      defects.push_back("integrality index " + std::to_string(i) + " out of range");
      continue;
    }
    if (p.lower[i] < 0.0 || p.upper[i] > 1.0)
      defects.push_back("binary variable " + std::to_string(i) +
                        " has bounds outside [0, 1]");
  }
  if (!p.var_names.empty()) {
    if (static_cast<Index>(p.var_names.size()) != p.num_vars)
      defects.push_back("names length != num_vars");
    std::set<std::string> seen;
    for (const auto& n : p.var_names)
      if (!n.empty() && !seen.insert(n).second)
        defects.push_back("duplicate variable name '" + n + "'");
  }
  return defects;
}

struct FeasibilityReport {
  std::vector<double> block_violation;  // one entry per cone block
  double max_violation = 0.0;
  Index violated_blocks(double tol) const {
    Index c = 0;
    for (double v : block_violation) c += v > tol;
    return c;
  }
};

// Evaluates every cone block at `point`; violations are in the block's own
// units (see cone_violation).
inline FeasibilityReport feasibility_report(const ConicProgram& p,
                                            const Vector& point) {
  if (point.size() != p.num_vars)
    throw InputError("feasibility_report: point dimension mismatch");
  FeasibilityReport rep;
  rep.block_violation.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) {
    const double v = cone_violation(blk.evaluate(point), blk.cone);
    rep.block_violation.push_back(v);
    rep.max_violation = std::max(rep.max_violation, v);
  }
  return rep;
}

// Worst bound violation of `point`; bounds are not cone blocks, so they are
// reported separately from feasibility_report.
inline double bounds_violation(const ConicProgram& p, const Vector& point) {
  double v = 0.0;
  for (Index i = 0; i < p.num_vars; ++i) {
    if (std::isfinite(p.lower[i])) v = std::max(v, p.lower[i] - point[i]);
    if (std::isfinite(p.upper[i])) v = std::max(v, point[i] - p.upper[i]);
  }
  return v;
}

}  // namespace coneglm
