#pragma once

// Binomial aggregation: group identical covariate rows and emit success /
// failure counts. Drastically shrinks the optimization problem for purely
// categorical/discrete designs.

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coneglm/csv.hpp"
#include "coneglm/formula.hpp"

namespace coneglm {

// Groups rows with identical covariate values; the response must be binary
// (0/1 numeric or two-level categorical) and every term a raw discrete
// column. Output columns: the covariates, then "success" and "failure".
inline DataTable agg_binomial(const Formula& formula, const DataTable& table) {
  if (formula.is_count_response())
    throw InputError("agg_binomial expects a row-level binary response");

  std::vector<std::string> term_cols;
  for (const auto& t : formula.terms) {
    if (std::holds_alternative<DotTerm>(t)) {
      for (const auto& c : table.columns)
        if (c.name != formula.response) term_cols.push_back(c.name);
    } else if (const auto* r = std::get_if<RawTerm>(&t)) {
      term_cols.push_back(r->column);
    } else {
      throw InputError(
          "agg_binomial supports only raw covariate terms (no transforms)");
    }
  }
  if (term_cols.empty()) throw InputError("agg_binomial: no covariates");

  for (const auto& name : term_cols) {
    const DataColumn& c = table.column(name);
    if (!c.is_numeric) continue;
    for (double v : c.num)
      if (v != std::floor(v))
        throw InputError("column '" + name +
                         "' looks continuous; aggregation over continuous "
                         "covariates is not meaningful");
  }

  // binary response values
  const DataColumn& rc = table.column(formula.response);
  std::vector<int> success(table.n_rows);
  if (rc.is_numeric) {
    for (size_t i = 0; i < rc.num.size(); ++i) {
      if (rc.num[i] != 0.0 && rc.num[i] != 1.0)
        throw InputError("response '" + formula.response +
                         "' must be binary 0/1 for aggregation");
      success[i] = rc.num[i] == 1.0;
    }
  } else {
    std::set<std::string> lv(rc.text.begin(), rc.text.end());
    if (lv.size() != 2)
      throw InputError("response '" + formula.response +
                       "' must have exactly two levels");
    const std::string& positive = *std::next(lv.begin());
    for (size_t i = 0; i < rc.text.size(); ++i)
      success[i] = rc.text[i] == positive;
  }

  // group by the covariate tuple, first-occurrence order
  std::map<std::vector<std::string>, size_t> group_of;
  std::vector<std::vector<std::string>> keys;
  std::vector<long> n_success, n_failure;
  for (size_t i = 0; i < table.n_rows; ++i) {
    std::vector<std::string> key;
    key.reserve(term_cols.size());
    for (const auto& name : term_cols) {
      const DataColumn& c = table.column(name);
      if (c.is_numeric) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), c.num[i]);
        key.emplace_back(buf, res.ptr);
      } else {
        key.push_back(c.text[i]);
      }
    }
    auto [it, inserted] = group_of.try_emplace(key, keys.size());
    if (inserted) {
      keys.push_back(key);
      n_success.push_back(0);
      n_failure.push_back(0);
    }
    if (success[i]) ++n_success[it->second];
    else ++n_failure[it->second];
  }

  DataTable out;
  out.n_rows = keys.size();
  for (size_t j = 0; j < term_cols.size(); ++j) {
    const DataColumn& src = table.column(term_cols[j]);
    DataColumn c;
    c.name = term_cols[j];
    c.is_numeric = src.is_numeric;
    for (const auto& key : keys) {
      if (src.is_numeric) c.num.push_back(std::stod(key[j]));
      else c.text.push_back(key[j]);
    }
    out.columns.push_back(std::move(c));
  }
  DataColumn sc, fc;
  sc.name = "success";
  fc.name = "failure";
  for (size_t g = 0; g < keys.size(); ++g) {
    sc.num.push_back(static_cast<double>(n_success[g]));
    fc.num.push_back(static_cast<double>(n_failure[g]));
  }
  out.columns.push_back(std::move(sc));
  out.columns.push_back(std::move(fc));
  return out;
}

}  // namespace coneglm
