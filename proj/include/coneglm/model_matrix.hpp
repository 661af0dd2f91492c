#pragma once

// Design-matrix construction: categorical dummy coding, log/sqrt/square
// transforms, orthogonal polynomial bases, and simple ":" interactions.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "coneglm/csv.hpp"
#include "coneglm/formula.hpp"
#include "coneglm/model.hpp"

namespace coneglm {

struct ModelData {
  Matrix X;
  std::vector<std::string> col_names;
  Vector response;   // proportions for two-column binomial input
  Vector weights;    // totals for two-column binomial input, else ones
  bool intercept = true;
};

namespace mm_detail {

inline std::vector<std::string> sorted_levels(const std::vector<std::string>& v) {
  std::set<std::string> s(v.begin(), v.end());
  return {s.begin(), s.end()};
}

inline Vector numeric_column(const DataTable& t, const std::string& name) {
  const DataColumn& c = t.column(name);
  if (!c.is_numeric)
    throw InputError("column '" + name + "' is categorical, expected numeric");
  return Eigen::Map<const Vector>(c.num.data(), static_cast<Index>(c.num.size()));
}

// R-compatible orthogonal polynomial basis: Gram-Schmidt on the centered
// Vandermonde including the constant, dropped afterwards, columns normalized
// to unit norm. The sign convention keeps the leading power positive.
inline Matrix orthogonal_poly(const Vector& x, Index degree) {
  const Index n = x.size();
  std::set<double> distinct(x.data(), x.data() + n);
  if (static_cast<Index>(distinct.size()) <= degree)
    throw InputError("poly: degree must be less than the number of distinct values");
  const double xbar = x.mean();
  Matrix V(n, degree + 1);
  for (Index k = 0; k <= degree; ++k)
    V.col(k) = (x.array() - xbar).pow(static_cast<double>(k));
  Matrix Q(n, degree + 1);
  for (Index k = 0; k <= degree; ++k) {
    Vector v = V.col(k);
    for (Index i = 0; i < k; ++i) v -= Q.col(i).dot(V.col(k)) * Q.col(i);
    const double nrm = v.norm();
    if (nrm <= 0.0) throw InputError("poly: basis degenerated");
    Q.col(k) = v / nrm;
  }
  return Q.rightCols(degree);
}

struct Piece {
  std::string name;
  Vector values;
};

inline void append_dummies(const DataTable& t, const std::string& col,
                           bool drop_first, std::vector<Piece>& out) {
  const DataColumn& c = t.column(col);
  auto levels = sorted_levels(c.text);
  if (levels.size() < 2)
    throw InputError("categorical column '" + col + "' needs >= 2 levels");
  for (size_t l = drop_first ? 1 : 0; l < levels.size(); ++l) {
    Piece p;
    p.name = col + levels[l];
    p.values = Vector::Zero(static_cast<Index>(c.text.size()));
    for (size_t i = 0; i < c.text.size(); ++i)
      if (c.text[i] == levels[l]) p.values[static_cast<Index>(i)] = 1.0;
    out.push_back(std::move(p));
  }
}

}  // namespace mm_detail

// Expand the formula against the table. Categorical main effects drop the
// first level alphabetically as reference when an intercept is present and
// keep all levels otherwise.
inline ModelData build_model_matrix(const Formula& formula,
                                    const DataTable& table) {
  const Index n = static_cast<Index>(table.n_rows);
  if (n < 1) throw InputError("table has no rows");

  // expand "." into raw terms over the non-response columns
  std::vector<Term> terms;
  for (const auto& t : formula.terms) {
    if (std::holds_alternative<DotTerm>(t)) {
      for (const auto& c : table.columns) {
        if (c.name == formula.response || c.name == formula.response_failures)
          continue;
        terms.push_back(RawTerm{c.name});
      }
    } else {
      terms.push_back(t);
    }
  }

  // the response may not appear among the terms
  for (const auto& t : terms) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          auto check = [&](const std::string& c) {
            if (c == formula.response || c == formula.response_failures)
              throw InputError("response column '" + c +
                               "' also appears as a term");
          };
          if constexpr (std::is_same_v<T, RawTerm>) check(x.column);
          else if constexpr (std::is_same_v<T, TransformTerm>) check(x.column);
          else if constexpr (std::is_same_v<T, PolyTerm>) check(x.column);
          else if constexpr (std::is_same_v<T, InteractionTerm>) {
            check(x.a);
            check(x.b);
          }
        },
        t);
  }

  std::vector<mm_detail::Piece> pieces;
  if (formula.intercept)
    pieces.push_back({"(Intercept)", Vector::Ones(n)});

  for (const auto& t : terms) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, RawTerm>) {
            const DataColumn& c = table.column(x.column);
            if (c.is_numeric) {
              pieces.push_back({x.column, mm_detail::numeric_column(table, x.column)});
            } else {
              mm_detail::append_dummies(table, x.column, formula.intercept, pieces);
            }
          } else if constexpr (std::is_same_v<T, TransformTerm>) {
            Vector v = mm_detail::numeric_column(table, x.column);
            switch (x.kind) {
              case TransformKind::log:
                if (v.minCoeff() <= 0.0)
                  throw InputError("log(" + x.column +
                                   "): column has nonpositive values");
                v = v.array().log();
                break;
              case TransformKind::sqrt:
                if (v.minCoeff() < 0.0)
                  throw InputError("sqrt(" + x.column +
                                   "): column has negative values");
                v = v.array().sqrt();
                break;
              case TransformKind::square:
                v = v.array().square();
                break;
            }
            pieces.push_back({formula_detail::term_key(Term{x}), v});
          } else if constexpr (std::is_same_v<T, PolyTerm>) {
            Vector v = mm_detail::numeric_column(table, x.column);
            Matrix Z = mm_detail::orthogonal_poly(v, x.degree);
            for (Index d = 0; d < x.degree; ++d)
              pieces.push_back({"poly(" + x.column + ", " +
                                    std::to_string(x.degree) + ")" +
                                    std::to_string(d + 1),
                                Z.col(d)});
          } else if constexpr (std::is_same_v<T, InteractionTerm>) {
            const DataColumn& ca = table.column(x.a);
            const DataColumn& cb = table.column(x.b);
            if (!ca.is_numeric && !cb.is_numeric)
              throw InputError("interaction '" + x.a + ":" + x.b +
                               "': categorical-by-categorical not supported");
            if (ca.is_numeric && cb.is_numeric) {
              Vector v = mm_detail::numeric_column(table, x.a).cwiseProduct(
                  mm_detail::numeric_column(table, x.b));
              pieces.push_back({x.a + ":" + x.b, v});
            } else {
              // one categorical: one slope column per level
              const bool a_cat = !ca.is_numeric;
              const std::string& cat = a_cat ? x.a : x.b;
              const std::string& num = a_cat ? x.b : x.a;
              Vector v = mm_detail::numeric_column(table, num);
              std::vector<mm_detail::Piece> dummies;
              mm_detail::append_dummies(table, cat, false, dummies);
              for (auto& d : dummies) {
                Vector col = d.values.cwiseProduct(v);
                const std::string name =
                    a_cat ? d.name + ":" + num : num + ":" + d.name;
                pieces.push_back({name, std::move(col)});
              }
            }
          }
        },
        t);
  }
  if (pieces.empty()) throw InputError("formula produced no design columns");

  ModelData md;
  md.intercept = formula.intercept;
  md.X.resize(n, static_cast<Index>(pieces.size()));
  for (size_t j = 0; j < pieces.size(); ++j) {
    md.X.col(static_cast<Index>(j)) = pieces[j].values;
    md.col_names.push_back(pieces[j].name);
  }

  if (formula.is_count_response()) {
    Vector n1 = mm_detail::numeric_column(table, formula.response);
    Vector n0 = mm_detail::numeric_column(table, formula.response_failures);
    Vector total = n1 + n0;
    if (total.minCoeff() <= 0.0)
      throw InputError("binomial counts need n1 + n0 > 0 in every row");
    md.response = n1.cwiseQuotient(total);
    md.weights = total;
  } else {
    const DataColumn& rc = table.column(formula.response);
    if (rc.is_numeric) {
      md.response = mm_detail::numeric_column(table, formula.response);
    } else {
      // two-level categorical: first level alphabetically is failure
      auto lv = mm_detail::sorted_levels(rc.text);
      if (lv.size() != 2)
        throw InputError("categorical response '" + formula.response +
                         "' must have exactly 2 levels");
      md.response = Vector::Zero(n);
      for (size_t i = 0; i < rc.text.size(); ++i)
        if (rc.text[i] == lv[1]) md.response[static_cast<Index>(i)] = 1.0;
    }
    md.weights = Vector::Ones(n);
  }
  return md;
}

inline GlmModel make_glm_model(const ModelData& md, FamilyLink fl) {
  return GlmModel(md.X, md.col_names, md.response, md.weights, fl, md.intercept);
}

}  // namespace coneglm
