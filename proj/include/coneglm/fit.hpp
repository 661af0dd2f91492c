#pragma once

// End-to-end fit: scaling, reformulation, constraint attachment, mixed-integer
// solve, coefficient unscaling, and inference statistics.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coneglm/bnb.hpp"
#include "coneglm/constraints.hpp"
#include "coneglm/irls.hpp"
#include "coneglm/loglik.hpp"
#include "coneglm/reformulate.hpp"
#include "coneglm/scaling.hpp"

namespace coneglm {

struct FitOptions {
  double big_m = 100.0;
  ScalerMode scaler = ScalerMode::auto_mode;
  bool do_scale_response = false;  // gaussian only
  std::string backend = "auto";
  BnbConfig bnb;
  double eta_margin = 0.0;  // interior shift for boundary links (default off)
};

struct FitResult {
  std::vector<std::string> names;
  Vector coefficients;  // original scale, zeros snapped exactly
  std::vector<bool> active;
  double loglik = kNaN;
  double deviance = kNaN;
  double null_deviance = kNaN;
  double aic = kNaN;
  double bic = kNaN;
  Vector std_errors;                  // NaN when not available
  std::vector<std::string> se_flags;  // "", "inactive", "constrained", "singular"
  SolveStatus status = SolveStatus::numeric_error;
  int iterations = 0;  // backend iterations at the root relaxation
  int nodes = 0;       // branch-and-bound nodes
  bool big_m_binding = false;
  Index k_active = 0;  // aic/bic degrees of freedom (incl. gaussian dispersion)
  Index n = 0;
  Index df_null = 0;
  Index df_residual = 0;
  std::string family;
  std::string link;
  double objective_value = kNaN;

  bool ok() const { return status == SolveStatus::optimal; }
};

namespace fit_detail {

// Rewrite original-scale numeric specs into the scaled coefficient space.
// Selection/sign specs pass through untouched (invariant under positive
// column scaling). `unscale_factor` covers the probit-from-logit rescale.
inline std::vector<ConstraintSpec> to_scaled_space(
    const std::vector<ConstraintSpec>& specs, const ScalingRecord& rec,
    const std::vector<std::string>& names, const GlmModel& model,
    double unscale_factor) {
  const bool intercept = rec.has_intercept;
  auto col = [&](const std::string& name) -> Index {
    for (size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<Index>(j);
    throw InputError("unknown design column '" + name + "'");
  };
  const double yd = rec.y_div * unscale_factor;

  // beta_orig_j = yd * beta_s_j / div_j (j non-intercept)
  // beta_orig_0 = y_shift + yd * (beta_s_0 - sum_k beta_s_k shift_k / div_k)
  auto scaled_row = [&](const LinearConstraint::Row& r) {
    LinearConstraint::Row out;
    out.dir = r.dir;
    double l0 = 0.0;
    std::map<std::string, double> orig;
    for (auto& [name, coef] : r.coeffs) {
      const Index j = col(name);
      if (intercept && j == 0) l0 += coef;
      else orig[name] += coef;
    }
    if (l0 != 0.0) out.coeffs.push_back({names[0], l0 * yd});
    for (auto& [name, coef] : orig) {
      const Index j = col(name);
      out.coeffs.push_back(
          {name, yd * (coef - l0 * rec.shift[j]) / rec.div[j]});
    }
    out.rhs = r.rhs - l0 * rec.y_shift;
    return out;
  };

  std::vector<ConstraintSpec> out;
  for (const auto& spec : specs) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Lower> || std::is_same_v<T, Upper>) {
            T scaled;
            LinearConstraint rows;  // intercept bounds need the shift terms
            for (auto& [name, b] : s.bounds) {
              const Index j = col(name);
              if (intercept && j == 0) {
                LinearConstraint::Row r;
                r.coeffs = {{name, 1.0}};
                r.dir = std::is_same_v<T, Lower> ? ConstraintDir::ge
                                                 : ConstraintDir::le;
                r.rhs = b;
                rows.rows.push_back(scaled_row(r));
              } else {
                scaled.bounds[name] = b * rec.div[j] / yd;
              }
            }
            if (!scaled.bounds.empty()) out.push_back(std::move(scaled));
            if (!rows.rows.empty()) out.push_back(std::move(rows));
          } else if constexpr (std::is_same_v<T, LinearConstraint>) {
            if (s.on_big_m) {
              out.push_back(s);
            } else {
              LinearConstraint lc;
              for (const auto& r : s.rows) lc.rows.push_back(scaled_row(r));
              out.push_back(std::move(lc));
            }
          } else if constexpr (std::is_same_v<T, GroupEqual>) {
            LinearConstraint lc;
            for (size_t i = 1; i < s.vars.size(); ++i) {
              LinearConstraint::Row r;
              r.coeffs = {{s.vars[0], 1.0}, {s.vars[i], -1.0}};
              r.dir = ConstraintDir::eq;
              r.rhs = 0.0;
              lc.rows.push_back(scaled_row(r));
            }
            out.push_back(std::move(lc));
          } else if constexpr (std::is_same_v<T, FairnessCovariance>) {
            if (s.W.rows() != model.n())
              throw InputError(
                  "fairness: sensitive matrix W must be attached to the spec "
                  "(one row per observation)");
            Vector c = Eigen::Map<const Vector>(s.c.data(),
                                                static_cast<Index>(s.c.size()));
            LinearConstraint lc = build_fairness_rows(
                s.W, s.sensitive, model.X(), names, c);
            LinearConstraint scaled;
            for (const auto& r : lc.rows) scaled.rows.push_back(scaled_row(r));
            out.push_back(std::move(scaled));
          } else {
            out.push_back(s);
          }
        },
        spec);
  }
  return out;
}

// columns "constrained" by bounds or equality-type rows, for SE flagging
inline std::vector<bool> constrained_columns(
    const std::vector<ConstraintSpec>& specs,
    const std::vector<std::string>& names) {
  std::vector<bool> flag(names.size(), false);
  auto mark = [&](const std::string& name) {
    for (size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) flag[j] = true;
  };
  for (const auto& spec : specs) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Lower> || std::is_same_v<T, Upper>) {
            for (auto& [name, b] : s.bounds) mark(name);
          } else if constexpr (std::is_same_v<T, LinearConstraint>) {
            if (!s.on_big_m)
              for (const auto& r : s.rows)
                for (auto& [name, c] : r.coeffs) mark(name);
          } else if constexpr (std::is_same_v<T, GroupEqual>) {
            for (auto& v : s.vars) mark(v);
          } else if constexpr (std::is_same_v<T, FairnessCovariance>) {
            for (auto& n : names) mark(n);
          }
        },
        spec);
  }
  return flag;
}

struct Prepared {
  GlmModel scaled_model;
  ScalingRecord record;
  BuiltProgram built;
  AugmentedProgram augmented;
  Vector start;  // strictly feasible start, empty when unavailable
  double probit_factor = 1.0;
  std::vector<ConstraintSpec> scaled_specs;
};

inline Prepared prepare(const GlmModel& model,
                        const std::vector<ConstraintSpec>& specs,
                        const FitOptions& opt) {
  const FamilyLink actual = model.family_link();
  const FamilyLink fit_fl = actual.fitted_via_logit_scaling()
                                ? FamilyLink(Family::binomial, Link::logit)
                                : actual;
  const double probit_factor =
      actual.fitted_via_logit_scaling() ? kProbitLogitScale : 1.0;

  auto [Xs, rec] = scale_design(model.X(), opt.scaler, model.has_intercept());
  Vector ys = model.y();
  if (opt.do_scale_response) {
    if (actual.family() != Family::gaussian)
      throw InputError("scale_response is only possible for family gaussian");
    ys = scale_response(ys, opt.scaler, model.has_intercept(), rec);
  }
  GlmModel scaled(std::move(Xs), model.col_names(), std::move(ys),
                  model.weights(), fit_fl, model.has_intercept());

  BuiltProgram built = build_program(scaled, opt.eta_margin);
  auto scaled_specs = fit_detail::to_scaled_space(specs, rec, model.col_names(),
                                                  model, probit_factor);
  AugmentedProgram aug =
      attach(built.program, built.layout, scaled.X(), scaled_specs, opt.big_m,
             model.col_names(), model.has_intercept());

  Vector start;
  if (built.start.size() > 0) {
    start = Vector::Constant(aug.program.num_vars, 0.5);
    start.head(built.start.size()) = built.start;
  }
  return Prepared{std::move(scaled), std::move(rec), std::move(built),
                  std::move(aug),    std::move(start), probit_factor,
                  std::move(scaled_specs)};
}

}  // namespace fit_detail

// Assemble the underlying optimization problem without solving it.
inline ConicProgram hglm_dry_run(const GlmModel& model,
                                 const std::vector<ConstraintSpec>& specs = {},
                                 const FitOptions& opt = {}) {
  return fit_detail::prepare(model, specs, opt).augmented.program;
}

// Per-coefficient standard errors from the inverse information on the active
// submatrix. Coefficients at bounds or tied by equality rows are flagged
// "constrained" and reported without correction.
inline void standard_errors(const GlmModel& model, FitResult& fit,
                            const std::vector<bool>& constrained) {
  const Index p = model.p();
  fit.std_errors = Vector::Constant(p, kNaN);
  fit.se_flags.assign(p, "");
  std::vector<Index> act;
  for (Index j = 0; j < p; ++j) {
    if (fit.active[j]) act.push_back(j);
    else fit.se_flags[j] = "inactive";
  }
  if (act.empty()) return;
  Matrix Xa(model.n(), static_cast<Index>(act.size()));
  std::vector<std::string> names_a;
  for (size_t k = 0; k < act.size(); ++k) {
    Xa.col(static_cast<Index>(k)) = model.X().col(act[k]);
    names_a.push_back(model.col_names()[act[k]]);
  }
  GlmModel sub(std::move(Xa), std::move(names_a), model.y(), model.weights(),
               model.family_link(),
               model.has_intercept() && fit.active[0]);
  Vector beta_a(static_cast<Index>(act.size()));
  for (size_t k = 0; k < act.size(); ++k)
    beta_a[static_cast<Index>(k)] = fit.coefficients[act[k]];
  const auto info = information_matrix(sub, {beta_a});
  double dispersion = 1.0;
  if (model.family_link().family() == Family::gaussian) {
    const Index df = model.n() - static_cast<Index>(act.size());
    if (df > 0)
      dispersion = weighted_rss(sub, {beta_a}) / static_cast<double>(df);
  }
  if (info.singular) {
    for (Index j : act) fit.se_flags[j] = "singular";
    return;
  }
  const Matrix cov = dispersion * info.info.inverse();
  for (size_t k = 0; k < act.size(); ++k) {
    const double v = cov(static_cast<Index>(k), static_cast<Index>(k));
    fit.std_errors[act[k]] = v > 0.0 ? std::sqrt(v) : kNaN;
    if (constrained[act[k]]) fit.se_flags[act[k]] = "constrained";
  }
}

inline FitResult hglm_fit(const GlmModel& model,
                          const std::vector<ConstraintSpec>& specs = {},
                          const FitOptions& opt = {}) {
  auto prep = fit_detail::prepare(model, specs, opt);

  BnbConfig bnb = opt.bnb;
  bnb.backend = opt.backend;
  MiSolution mi = solve_mi(prep.augmented.program, bnb,
                           prep.start.size() ? &prep.start : nullptr);

  FitResult fit;
  fit.names = model.col_names();
  fit.family = family_name(model.family_link().family());
  fit.link = link_name(model.family_link().link());
  fit.n = model.n();
  fit.status = mi.solution.status;
  fit.iterations = mi.root_iterations;
  fit.nodes = mi.nodes;
  if (!mi.solution.has_primal()) return fit;

  fit.objective_value = mi.solution.objective_value;
  const Index p = model.p();
  Vector beta_s = mi.solution.primal.segment(prep.built.layout.beta.begin, p);

  // exact-zero snapping of deselected coefficients
  if (prep.augmented.z_range) {
    for (size_t j = 0; j < model.col_names().size(); ++j) {
      auto it = prep.augmented.z_of_column.find(model.col_names()[j]);
      if (it == prep.augmented.z_of_column.end()) continue;
      if (mi.solution.primal[it->second] < 0.5) beta_s[j] = 0.0;
    }
  }

  const bool check_big_m =
      prep.augmented.z_range.has_value() || !prep.augmented.u_vars.empty();
  if (check_big_m) {
    for (Index j = model.has_intercept() ? 1 : 0; j < p; ++j)
      if (std::abs(beta_s[j]) >= opt.big_m - 1e-6) fit.big_m_binding = true;
  }

  Vector beta = prep.record.unscale(beta_s);
  if (prep.probit_factor != 1.0) beta *= prep.probit_factor;
  fit.coefficients = beta;
  fit.active.resize(p);
  Index n_nonzero = 0;
  for (Index j = 0; j < p; ++j) {
    fit.active[j] = std::abs(beta[j]) > 1e-6;
    n_nonzero += fit.active[j];
  }

  fit.loglik = log_likelihood(model, {beta});
  fit.deviance = deviance(model, {beta});
  fit.null_deviance = null_deviance(model);
  fit.k_active = std::max<Index>(n_nonzero, 1) +
                 (model.family_link().family() == Family::gaussian ? 1 : 0);
  const auto [aic, bic] = aic_bic(fit.loglik, fit.k_active, fit.n);
  fit.aic = aic;
  fit.bic = bic;
  fit.df_null = fit.n - (model.has_intercept() ? 1 : 0);
  fit.df_residual = fit.n - n_nonzero;
  standard_errors(model, fit,
                  fit_detail::constrained_columns(specs, model.col_names()));
  return fit;
}

// Fitted means mu_i = g^{-1}(x_i' beta) under the model's own link.
inline Vector fitted_means(const GlmModel& model, const Vector& beta) {
  Vector eta = model.X() * beta;
  Vector mu(eta.size());
  for (Index i = 0; i < eta.size(); ++i)
    mu[i] = model.family_link().linkinv(eta[i]);
  return mu;
}

// --- Model sequences ---------------------------------------------------------

struct SequenceFit {
  Index k_max;
  FitResult fit;
  std::string error;  // nonempty when this row failed
};

// One KMax(k) fit per requested k, rows ordered k descending.
inline std::vector<SequenceFit> hglm_seq(const GlmModel& model,
                                         const std::vector<ConstraintSpec>& specs,
                                         std::vector<Index> k_values,
                                         const FitOptions& opt = {}) {
  if (k_values.empty()) {
    const Index pmax = model.p() - (model.has_intercept() ? 1 : 0);
    for (Index k = 1; k <= pmax; ++k) k_values.push_back(k);
  }
  std::sort(k_values.begin(), k_values.end(), std::greater<Index>());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  std::vector<SequenceFit> rows;
  for (Index k : k_values) {
    SequenceFit row;
    row.k_max = k;
    try {
      auto with_k = specs;
      with_k.push_back(KMax{k});
      row.fit = hglm_fit(model, with_k, opt);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- Reporting ---------------------------------------------------------------

namespace fit_detail {

inline std::string sig4(double x) {
  if (std::isnan(x)) return "NA";
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

}  // namespace fit_detail

// Fixed-width text report: coefficient table, deviances, AIC.
inline std::string fit_report(const FitResult& fit) {
  std::ostringstream os;
  os << "Family: " << fit.family << "  Link: " << fit.link
     << "  Status: " << solve_status_name(fit.status) << "\n\n";
  if (fit.coefficients.size() == 0) return os.str();
  os << "Coefficients:\n";
  size_t name_w = 12;
  for (const auto& n : fit.names) name_w = std::max(name_w, n.size());
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "";
  os << std::right << std::setw(12) << "Estimate" << std::setw(12)
     << "Std. Error" << "  Active\n";
  for (Index j = 0; j < fit.coefficients.size(); ++j) {
    os << std::left << std::setw(static_cast<int>(name_w) + 2) << fit.names[j];
    os << std::right << std::setw(12) << std::setprecision(6) << std::fixed
       << fit.coefficients[j];
    os.unsetf(std::ios_base::floatfield);
    if (std::isnan(fit.std_errors[j]))
      os << std::setw(12) << (fit.se_flags[j].empty() ? "NA" : fit.se_flags[j]);
    else
      os << std::setw(12) << std::setprecision(4) << fit.std_errors[j];
    os << "  " << (fit.active[j] ? "TRUE" : "FALSE");
    if (fit.se_flags[j] == "constrained") os << " (constrained)";
    os << "\n";
  }
  os << "\nDegrees of Freedom: " << fit.df_null << " Total (i.e. Null);  "
     << fit.df_residual << " Residual\n";
  os << "Null Deviance:      " << fit_detail::sig4(fit.null_deviance) << "\n";
  os << "Residual Deviance: " << fit_detail::sig4(fit.deviance)
     << " \tAIC: " << fit_detail::sig4(fit.aic) << "\n";
  return os.str();
}

inline std::string sequence_report(const std::vector<SequenceFit>& rows) {
  std::ostringstream os;
  os << "HGLM Fit Sequence:\n";
  os << std::right << std::setw(6) << "k_max" << std::setw(10) << "aic"
     << std::setw(10) << "bic";
  if (!rows.empty() && rows.front().fit.coefficients.size() > 0)
    for (const auto& n : rows.front().fit.names)
      os << std::setw(std::max<int>(12, static_cast<int>(n.size()) + 2)) << n;
  os << "\n";
  for (const auto& row : rows) {
    os << std::right << std::setw(6) << row.k_max;
    if (!row.error.empty()) {
      os << "  error: " << row.error << "\n";
      continue;
    }
    os << std::setw(10) << fit_detail::sig4(row.fit.aic) << std::setw(10)
       << fit_detail::sig4(row.fit.bic);
    for (Index j = 0; j < row.fit.coefficients.size(); ++j)
      os << std::setw(std::max<int>(
             12, static_cast<int>(row.fit.names[j].size()) + 2))
         << std::setprecision(7) << std::fixed << row.fit.coefficients[j];
    os.unsetf(std::ios_base::floatfield);
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["family"] = fit.family;
  j["link"] = fit.link;
  j["status"] = solve_status_name(fit.status);
  j["names"] = fit.names;
  j["coefficients"] = std::vector<double>(
      fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  j["active"] = fit.active;
  auto nan_safe = [](double x) {
    return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x);
  };
  j["loglik"] = nan_safe(fit.loglik);
  j["deviance"] = nan_safe(fit.deviance);
  j["null_deviance"] = nan_safe(fit.null_deviance);
  j["aic"] = nan_safe(fit.aic);
  j["bic"] = nan_safe(fit.bic);
  j["k_active"] = fit.k_active;
  j["n"] = fit.n;
  j["df_null"] = fit.df_null;
  j["df_residual"] = fit.df_residual;
  nlohmann::json se = nlohmann::json::array();
  for (Index i = 0; i < fit.std_errors.size(); ++i)
    se.push_back(std::isnan(fit.std_errors[i]) ? nlohmann::json(nullptr)
                                               : nlohmann::json(fit.std_errors[i]));
  j["std_errors"] = std::move(se);
  j["se_flags"] = fit.se_flags;
  j["iterations"] = fit.iterations;
  j["nodes"] = fit.nodes;
  j["big_m_binding"] = fit.big_m_binding;
  j["objective_value"] = nan_safe(fit.objective_value);
  return j;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  FitResult fit;
  fit.family = j.at("family").get<std::string>();
  fit.link = j.at("link").get<std::string>();
  const std::string st = j.at("status").get<std::string>();
  for (SolveStatus s : {SolveStatus::optimal, SolveStatus::infeasible,
                        SolveStatus::unbounded, SolveStatus::iteration_limit,
                        SolveStatus::numeric_error})
    if (st == solve_status_name(s)) fit.status = s;
  fit.names = j.at("names").get<std::vector<std::string>>();
  auto coefs = j.at("coefficients").get<std::vector<double>>();
  fit.coefficients =
      Eigen::Map<const Vector>(coefs.data(), static_cast<Index>(coefs.size()));
  fit.active = j.at("active").get<std::vector<bool>>();
  auto nan_get = [&](const char* key) {
    return j.at(key).is_null() ? kNaN : j.at(key).get<double>();
  };
  fit.loglik = nan_get("loglik");
  fit.deviance = nan_get("deviance");
  fit.null_deviance = nan_get("null_deviance");
  fit.aic = nan_get("aic");
  fit.bic = nan_get("bic");
  fit.k_active = j.at("k_active").get<Index>();
  fit.n = j.at("n").get<Index>();
  fit.df_null = j.at("df_null").get<Index>();
  fit.df_residual = j.at("df_residual").get<Index>();
  const auto& se = j.at("std_errors");
  fit.std_errors = Vector::Constant(static_cast<Index>(se.size()), kNaN);
  for (size_t i = 0; i < se.size(); ++i)
    if (!se[i].is_null()) fit.std_errors[static_cast<Index>(i)] = se[i].get<double>();
  fit.se_flags = j.at("se_flags").get<std::vector<std::string>>();
  fit.iterations = j.at("iterations").get<int>();
  fit.nodes = j.at("nodes").get<int>();
  fit.big_m_binding = j.at("big_m_binding").get<bool>();
  fit.objective_value = nan_get("objective_value");
  return fit;
}

}  // namespace coneglm
