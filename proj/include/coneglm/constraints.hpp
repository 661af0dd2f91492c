#pragma once

// The holistic constraint catalog and its translation into linear rows,
// big-M couplings and binary variables appended to a conic program.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coneglm/program.hpp"
#include "coneglm/reformulate.hpp"
#include "coneglm/types.hpp"

namespace coneglm {

enum class ConstraintDir { le, eq, ge };

inline ConstraintDir parse_dir(const std::string& s) {
  if (s == "<=" || s == "<") return ConstraintDir::le;
  if (s == "==" || s == "=") return ConstraintDir::eq;
  if (s == ">=" || s == ">") return ConstraintDir::ge;
  throw InputError("unknown constraint direction '" + s + "'");
}

// --- Table of constraint specs -------------------------------------------

struct KMax {
  Index k;
};
struct GroupSparsity {
  std::vector<std::string> vars;
  Index k = 1;
};
struct RhoMax {
  double rho;
  std::vector<std::string> exclude = {"(Intercept)"};
  std::string use = "everything";
  std::string method = "pearson";
};
struct GroupInOut {
  std::vector<std::string> vars;
};
struct Include {
  std::vector<std::string> vars;
};
struct Lower {
  std::map<std::string, double> bounds;
};
struct Upper {
  std::map<std::string, double> bounds;
};
struct LinearConstraint {
  // one row: sum_j coeffs[name_j] * beta_j  dir  rhs
  struct Row {
    std::vector<std::pair<std::string, double>> coeffs;
    ConstraintDir dir;
    double rhs;
  };
  std::vector<Row> rows;
  bool on_big_m = false;  // rows over the selection binaries z instead of beta
};
struct GroupEqual {
  std::vector<std::string> vars;
};
struct SignCoherence {
  std::vector<std::string> vars;
  std::optional<double> big_m;  // overrides the fit-level big_m when set
};
struct PairwiseSignCoherence {
  double rho;
  std::string method = "pearson";
};
struct FairnessCovariance {
  std::vector<std::string> sensitive;  // data columns holding w^{(k)}
  std::vector<double> c;               // covariance limits, one per column
  Matrix W;  // n x K indicator matrix; filled in by the caller before fitting
};

using ConstraintSpec =
    std::variant<KMax, GroupSparsity, RhoMax, GroupInOut, Include, Lower,
                 Upper, LinearConstraint, GroupEqual, SignCoherence,
                 PairwiseSignCoherence, FairnessCovariance>;

// --- Correlation machinery -------------------------------------------------

// All unordered column-name pairs with |pearson correlation| strictly above
// rho, excluding the named columns. A constant column makes the correlation
// undefined and is an error under use = "everything".
inline std::vector<std::pair<std::string, std::string>> correlation_pairs(
    const Matrix& X, const std::vector<std::string>& names, double rho,
    const std::string& method = "pearson",
    const std::vector<std::string>& exclude = {"(Intercept)"},
    const std::string& use = "everything") {
  if (!(rho > 0.0 && rho <= 1.0)) throw InputError("rho must lie in (0, 1]");
  if (method != "pearson")
    throw InputError("correlation method '" + method + "' not supported");
  if (use != "everything")
    throw InputError("correlation use '" + use + "' not supported");
  std::vector<Index> cols;
  for (Index j = 0; j < X.cols(); ++j) {
    if (std::find(exclude.begin(), exclude.end(), names[j]) == exclude.end())
      cols.push_back(j);
  }
  const Index n = X.rows();
  std::vector<double> mean(cols.size()), sd(cols.size());
  for (size_t a = 0; a < cols.size(); ++a) {
    mean[a] = X.col(cols[a]).mean();
    sd[a] = std::sqrt((X.col(cols[a]).array() - mean[a]).square().sum());
    if (sd[a] <= 0.0)
      throw InputError("correlation undefined: column '" + names[cols[a]] +
                       "' is constant");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (size_t a = 0; a < cols.size(); ++a) {
    for (size_t b = a + 1; b < cols.size(); ++b) {
      double c = ((X.col(cols[a]).array() - mean[a]) *
                  (X.col(cols[b]).array() - mean[b]))
                     .sum() /
                 (sd[a] * sd[b]);
      if (!std::isfinite(c))
        throw InputError("correlation undefined between '" + names[cols[a]] +
                         "' and '" + names[cols[b]] + "'");
      if (std::abs(c) > rho) pairs.push_back({names[cols[a]], names[cols[b]]});
    }
  }
  (void)n;
  return pairs;
}

inline double pearson(const Vector& x, const Vector& y) {
  const double mx = x.mean(), my = y.mean();
  const double sx = std::sqrt((x.array() - mx).square().sum());
  const double sy = std::sqrt((y.array() - my).square().sum());
  return ((x.array() - mx) * (y.array() - my)).sum() / (sx * sy);
}

// --- Fairness --------------------------------------------------------------

// Covariance rows: for each sensitive column w^{(k)}, two rows
// +-(1/n) sum_i (w_i - wbar) x_i' beta <= c_k.
inline LinearConstraint build_fairness_rows(const Matrix& W,
                                            const std::vector<std::string>& w_names,
                                            const Matrix& X,
                                            const std::vector<std::string>& x_names,
                                            const Vector& c) {
  if (W.rows() != X.rows())
    throw InputError("fairness: W and X row counts differ");
  if (c.size() != W.cols())
    throw InputError("fairness: need one limit c_k per sensitive column");
  if (c.minCoeff() < 0.0) throw InputError("fairness limits must be >= 0");
  const double n = static_cast<double>(X.rows());
  LinearConstraint lc;
  for (Index k = 0; k < W.cols(); ++k) {
    const double wbar = W.col(k).mean();
    if ((W.col(k).array() - wbar).abs().maxCoeff() == 0.0)
      throw InputError("fairness: sensitive column '" + w_names[k] +
                       "' is constant");
    LinearConstraint::Row up, lo;
    for (Index j = 0; j < X.cols(); ++j) {
      const double coef =
          ((W.col(k).array() - wbar) * X.col(j).array()).sum() / n;
      up.coeffs.push_back({x_names[j], coef});
      lo.coeffs.push_back({x_names[j], coef});
    }
    if (c[k] == 0.0) {
      // a zero limit pins the covariance exactly; one equality row keeps the
      // feasible set's interior nonempty for interior-point backends
      up.dir = ConstraintDir::eq;
      up.rhs = 0.0;
      lc.rows.push_back(std::move(up));
      continue;
    }
    up.dir = ConstraintDir::le;
    up.rhs = c[k];
    lo.dir = ConstraintDir::ge;
    lo.rhs = -c[k];
    lc.rows.push_back(std::move(up));
    lc.rows.push_back(std::move(lo));
  }
  return lc;
}

// Ratio of positive-prediction rates, unprivileged (w = 0) over privileged
// (w = 1). Undefined cases yield NaN.
inline double disparate_impact(const std::vector<int>& predicted,
                               const std::vector<int>& w) {
  if (predicted.size() != w.size())
    throw InputError("disparate_impact: length mismatch");
  double n0 = 0, n1 = 0, p0 = 0, p1 = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i]) {
      ++n1;
      p1 += predicted[i];
    } else {
      ++n0;
      p0 += predicted[i];
    }
  }
  if (n0 == 0 || n1 == 0 || p1 == 0) return kNaN;
  return (p0 / n0) / (p1 / n1);
}

// --- Attachment -------------------------------------------------------------

// Constrained program: base extended with selection binaries z (one per
// non-intercept column, created on first need), sign binaries u, and the
// constraint rows.
struct AugmentedProgram {
  ConicProgram program;
  std::optional<IndexRange> z_range;          // selection binaries
  std::map<std::string, Index> z_of_column;   // column name -> z index
  std::vector<Index> u_vars;                  // sign-coherence binaries
  double big_m = 0.0;
};

namespace attach_detail {

inline bool needs_selection(const ConstraintSpec& s) {
  return std::holds_alternative<KMax>(s) ||
         std::holds_alternative<GroupSparsity>(s) ||
         std::holds_alternative<RhoMax>(s) ||
         std::holds_alternative<GroupInOut>(s) ||
         std::holds_alternative<Include>(s) ||
         (std::holds_alternative<LinearConstraint>(s) &&
          std::get<LinearConstraint>(s).on_big_m);
}

}  // namespace attach_detail

// Translate the specs into rows/binaries on top of `base`. Beta-space
// numeric constraints are taken as given (the fit pipeline maps them into
// the scaled space before calling attach). X is the design matrix the
// correlation-based specs refer to.
inline AugmentedProgram attach(const ConicProgram& base,
                               const VariableLayout& layout, const Matrix& X,
                               const std::vector<ConstraintSpec>& specs,
                               double big_m,
                               const std::vector<std::string>& column_names,
                               bool intercept_flag) {
  if (!(big_m > 0.0)) throw InputError("big_m must be positive");
  AugmentedProgram out;
  out.big_m = big_m;

  auto column_index = [&](const std::string& name) -> Index {
    for (size_t j = 0; j < column_names.size(); ++j)
      if (column_names[j] == name) return static_cast<Index>(j);
    return -1;
  };
  auto beta_of = [&](const std::string& name) -> Index {
    const Index j = column_index(name);
    if (j < 0) throw InputError("unknown design column '" + name + "'");
    return layout.beta.begin + j;
  };

  ProgramBuilder pb(base);

  // selection binaries for all non-intercept columns, created lazily
  bool any_selection = false;
  for (const auto& s : specs) any_selection |= attach_detail::needs_selection(s);
  if (any_selection) {
    const Index first = pb.num_vars();
    for (size_t j = 0; j < column_names.size(); ++j) {
      if (intercept_flag && j == 0) continue;
      const Index zi = pb.add_variable("z(" + column_names[j] + ")", 0.0, 1.0);
      pb.mark_binary(zi);
      out.z_of_column[column_names[j]] = zi;
    }
    out.z_range = IndexRange{first, pb.num_vars()};
    // big-M couplings -M z_j <= beta_j <= M z_j
    std::vector<Triplet> tr;
    Index row = 0;
    for (size_t j = 0; j < column_names.size(); ++j) {
      if (intercept_flag && j == 0) continue;
      const Index b = layout.beta.begin + static_cast<Index>(j);
      const Index z = out.z_of_column[column_names[j]];
      tr.emplace_back(static_cast<int>(row), static_cast<int>(z), big_m);
      tr.emplace_back(static_cast<int>(row), static_cast<int>(b), -1.0);
      ++row;
      tr.emplace_back(static_cast<int>(row), static_cast<int>(z), big_m);
      tr.emplace_back(static_cast<int>(row), static_cast<int>(b), 1.0);
      ++row;
    }
    pb.add_block(tr, Vector::Zero(row), Cone::Nonnegative(row));
  }
  auto z_of = [&](const std::string& name) -> Index {
    auto it = out.z_of_column.find(name);
    if (it == out.z_of_column.end())
      throw InputError("no selection variable for column '" + name +
                       "' (unknown or intercept)");
    return it->second;
  };

  // one shared sign binary per group: -M(1-u) <= s_j * beta_j <= M u
  auto add_sign_group =
      [&](const std::vector<std::pair<std::string, double>>& members,
          double m_val) {
        const Index u = pb.add_variable("u(" + members.front().first + ")",
                                        0.0, 1.0);
        pb.mark_binary(u);
        out.u_vars.push_back(u);
        std::vector<Triplet> tr;
        Vector off(2 * static_cast<Index>(members.size()));
        Index row = 0;
        for (auto& [name, sgn] : members) {
          const Index b = beta_of(name);
          // M u - s*beta >= 0
          tr.emplace_back(static_cast<int>(row), static_cast<int>(u), m_val);
          tr.emplace_back(static_cast<int>(row), static_cast<int>(b), -sgn);
          off[row] = 0.0;
          ++row;
          // s*beta + M(1-u) >= 0
          tr.emplace_back(static_cast<int>(row), static_cast<int>(b), sgn);
          tr.emplace_back(static_cast<int>(row), static_cast<int>(u), -m_val);
          off[row] = m_val;
          ++row;
        }
        pb.add_block(tr, std::move(off), Cone::Nonnegative(row));
      };

  for (const auto& spec : specs) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, KMax>) {
            const Index p_free =
                static_cast<Index>(column_names.size()) - (intercept_flag ? 1 : 0);
            if (s.k < 1 || s.k > p_free)
              throw InputError("k_max must lie in [1, " +
                               std::to_string(p_free) + "]");
            std::vector<std::pair<Index, double>> row;
            for (auto& [name, z] : out.z_of_column) row.push_back({z, -1.0});
            pb.add_row(row, static_cast<double>(s.k), ConeKind::nonnegative);
          } else if constexpr (std::is_same_v<T, GroupSparsity>) {
            if (s.k < 0 || s.k > static_cast<Index>(s.vars.size()))
              throw InputError("group_sparsity k must lie in [0, group size]");
            std::vector<std::pair<Index, double>> row;
            for (auto& name : s.vars) row.push_back({z_of(name), -1.0});
            pb.add_row(row, static_cast<double>(s.k), ConeKind::nonnegative);
          } else if constexpr (std::is_same_v<T, RhoMax>) {
            for (auto& [na, nb] : correlation_pairs(X, column_names, s.rho,
                                                    s.method, s.exclude, s.use))
              pb.add_row({{z_of(na), -1.0}, {z_of(nb), -1.0}}, 1.0,
                         ConeKind::nonnegative);
          } else if constexpr (std::is_same_v<T, GroupInOut>) {
            for (size_t i = 1; i < s.vars.size(); ++i)
              pb.add_row({{z_of(s.vars[0]), 1.0}, {z_of(s.vars[i]), -1.0}},
                         0.0, ConeKind::zero);
          } else if constexpr (std::is_same_v<T, Include>) {
            for (auto& name : s.vars) pb.set_bounds(z_of(name), 1.0, 1.0);
          } else if constexpr (std::is_same_v<T, Lower>) {
            for (auto& [name, b] : s.bounds) {
              pb.tighten_lower(beta_of(name), b);
              if (pb.peek().lower[beta_of(name)] > pb.peek().upper[beta_of(name)])
                throw InputError("contradictory bounds on '" + name + "'");
            }
          } else if constexpr (std::is_same_v<T, Upper>) {
            for (auto& [name, b] : s.bounds) {
              pb.tighten_upper(beta_of(name), b);
              if (pb.peek().lower[beta_of(name)] > pb.peek().upper[beta_of(name)])
                throw InputError("contradictory bounds on '" + name + "'");
            }
          } else if constexpr (std::is_same_v<T, LinearConstraint>) {
            for (const auto& r : s.rows) {
              std::vector<std::pair<Index, double>> row;
              for (auto& [name, coef] : r.coeffs) {
                if (coef == 0.0) continue;
                row.push_back({s.on_big_m ? z_of(name) : beta_of(name), coef});
              }
              switch (r.dir) {
                case ConstraintDir::le: {  // rhs - L v >= 0
                  for (auto& e : row) e.second = -e.second;
                  pb.add_row(row, r.rhs, ConeKind::nonnegative);
                  break;
                }
                case ConstraintDir::ge:
                  pb.add_row(row, -r.rhs, ConeKind::nonnegative);
                  break;
                case ConstraintDir::eq:
                  pb.add_row(row, -r.rhs, ConeKind::zero);
                  break;
              }
            }
          } else if constexpr (std::is_same_v<T, GroupEqual>) {
            for (size_t i = 1; i < s.vars.size(); ++i)
              pb.add_row({{beta_of(s.vars[0]), 1.0}, {beta_of(s.vars[i]), -1.0}},
                         0.0, ConeKind::zero);
          } else if constexpr (std::is_same_v<T, SignCoherence>) {
            std::vector<std::pair<std::string, double>> members;
            for (auto& name : s.vars) members.push_back({name, 1.0});
            add_sign_group(members, s.big_m.value_or(big_m));
          } else if constexpr (std::is_same_v<T, PairwiseSignCoherence>) {
            for (auto& [na, nb] :
                 correlation_pairs(X, column_names, s.rho, s.method)) {
              const double r = pearson(
                  X.col(column_index(na)), X.col(column_index(nb)));
              // positive correlation: same sign; negative: opposite signs
              add_sign_group({{na, 1.0}, {nb, r >= 0.0 ? 1.0 : -1.0}}, big_m);
            }
          } else if constexpr (std::is_same_v<T, FairnessCovariance>) {
            throw InputError(
                "fairness constraints must be expanded to linear rows before "
                "attach (see build_fairness_rows)");
          }
        },
        spec);
  }

  out.program = pb.take();
  return out;
}

// --- JSON constraint schema --------------------------------------------------

inline std::vector<ConstraintSpec> constraints_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("constraints JSON must be a list");
  std::vector<ConstraintSpec> specs;
  for (const auto& e : j) {
    const std::string type = e.at("type").get<std::string>();
    if (type == "k_max") {
      specs.push_back(KMax{e.at("k").get<Index>()});
    } else if (type == "group_sparsity") {
      GroupSparsity g;
      g.vars = e.at("vars").get<std::vector<std::string>>();
      g.k = e.value("k", 1);
      specs.push_back(std::move(g));
    } else if (type == "rho_max") {
      RhoMax r;
      r.rho = e.at("rho").get<double>();
      if (e.contains("exclude"))
        r.exclude = e["exclude"].get<std::vector<std::string>>();
      r.use = e.value("use", "everything");
      r.method = e.value("method", "pearson");
      specs.push_back(std::move(r));
    } else if (type == "group_inout") {
      specs.push_back(GroupInOut{e.at("vars").get<std::vector<std::string>>()});
    } else if (type == "include") {
      specs.push_back(Include{e.at("vars").get<std::vector<std::string>>()});
    } else if (type == "lower" || type == "upper") {
      std::map<std::string, double> b =
          e.at("bounds").get<std::map<std::string, double>>();
      if (type == "lower") specs.push_back(Lower{std::move(b)});
      else specs.push_back(Upper{std::move(b)});
    } else if (type == "linear") {
      LinearConstraint lc;
      lc.on_big_m = e.value("on_big_m", false);
      const auto& L = e.at("L");
      const auto& dir = e.at("dir");
      const auto& rhs = e.at("rhs");
      if (L.size() != dir.size() || L.size() != rhs.size())
        throw InputError("linear constraint: L, dir, rhs lengths differ");
      for (size_t r = 0; r < L.size(); ++r) {
        LinearConstraint::Row row;
        for (auto it = L[r].begin(); it != L[r].end(); ++it)
          row.coeffs.push_back({it.key(), it.value().get<double>()});
        row.dir = parse_dir(dir[r].get<std::string>());
        row.rhs = rhs[r].get<double>();
        lc.rows.push_back(std::move(row));
      }
      specs.push_back(std::move(lc));
    } else if (type == "group_equal") {
      specs.push_back(GroupEqual{e.at("vars").get<std::vector<std::string>>()});
    } else if (type == "sign_coherence") {
      SignCoherence sc;
      sc.vars = e.at("vars").get<std::vector<std::string>>();
      if (e.contains("big_m")) sc.big_m = e["big_m"].get<double>();
      specs.push_back(std::move(sc));
    } else if (type == "pairwise_sign_coherence") {
      PairwiseSignCoherence pc;
      pc.rho = e.at("rho").get<double>();
      pc.method = e.value("method", "pearson");
      specs.push_back(std::move(pc));
    } else if (type == "fairness") {
      FairnessCovariance f;
      f.sensitive = e.at("sensitive").get<std::vector<std::string>>();
      f.c = e.at("c").get<std::vector<double>>();
      specs.push_back(std::move(f));
    } else {
      throw InputError("unknown constraint type '" + type + "'");
    }
  }
  return specs;
}

}  // namespace coneglm
