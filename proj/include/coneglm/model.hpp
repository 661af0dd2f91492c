#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coneglm/family.hpp"
#include "coneglm/types.hpp"

namespace coneglm {

// Length-p coefficient vector aligned to the design matrix columns.
struct Coefficients {
  Vector beta;
};

// Response, named design matrix, observation weights and family-link tag.
// Immutable after construction; validation happens here so downstream code
// can assume a well-formed model.
class GlmModel {
 public:
  GlmModel(Matrix X, std::vector<std::string> col_names, Vector y,
           Vector weights, FamilyLink family_link, bool has_intercept)
      : X_(std::move(X)),
        col_names_(std::move(col_names)),
        y_(std::move(y)),
        weights_(std::move(weights)),
        family_link_(family_link),
        has_intercept_(has_intercept) {
    if (X_.rows() < 1 || X_.cols() < 1)
      throw InputError("model requires n >= 1 and p >= 1");
    if (y_.size() != X_.rows()) throw InputError("response length != n");
    if (weights_.size() == 0) weights_ = Vector::Ones(X_.rows());
    if (weights_.size() != X_.rows()) throw InputError("weights length != n");
    if (static_cast<Index>(col_names_.size()) != X_.cols())
      throw InputError("column name count != p");
    for (size_t i = 0; i < col_names_.size(); ++i)
      for (size_t j = i + 1; j < col_names_.size(); ++j)
        if (col_names_[i] == col_names_[j])
          throw InputError("duplicate design column name '" + col_names_[i] + "'");
    if (!X_.allFinite()) throw InputError("design matrix has non-finite entries");
    if (!y_.allFinite()) throw InputError("response has non-finite entries");
    if (!weights_.allFinite() || weights_.minCoeff() <= 0.0)
      throw InputError("observation weights must be strictly positive");
    if (has_intercept_ && (X_.col(0).array() != 1.0).any())
      throw InputError("intercept flag set but column 1 is not all ones");
    switch (family_link_.family()) {
      case Family::binomial:
        if (y_.minCoeff() < 0.0 || y_.maxCoeff() > 1.0)
          throw InputError("binomial response must lie in [0, 1]");
        break;
      case Family::poisson:
        if (y_.minCoeff() < 0.0)
          throw InputError("poisson response must be nonnegative");
        break;
      case Family::gaussian:
        break;
    }
  }

  // Two-column binomial input (successes, failures): y_i = n1/(n1+n0),
  // a_i = n1+n0.
  static GlmModel from_binomial_counts(Matrix X, std::vector<std::string> names,
                                       const Vector& successes,
                                       const Vector& failures, FamilyLink fl,
                                       bool has_intercept) {
    if (successes.size() != failures.size() || successes.size() != X.rows())
      throw InputError("binomial count vectors must match the design rows");
    Vector total = successes + failures;
    if (total.minCoeff() <= 0.0)
      throw InputError("binomial rows need n1 + n0 > 0");
    Vector y = successes.cwiseQuotient(total);
    return GlmModel(std::move(X), std::move(names), std::move(y),
                    std::move(total), fl, has_intercept);
  }

  Index n() const { return X_.rows(); }
  Index p() const { return X_.cols(); }
  const Matrix& X() const { return X_; }
  const std::vector<std::string>& col_names() const { return col_names_; }
  const Vector& y() const { return y_; }
  const Vector& weights() const { return weights_; }
  const FamilyLink& family_link() const { return family_link_; }
  bool has_intercept() const { return has_intercept_; }

  Index column_index(const std::string& name) const {
    for (size_t j = 0; j < col_names_.size(); ++j)
      if (col_names_[j] == name) return static_cast<Index>(j);
    return -1;
  }

  Vector linear_predictor(const Coefficients& c) const { return X_ * c.beta; }

  GlmModel with_family_link(FamilyLink fl) const {
    return GlmModel(X_, col_names_, y_, weights_, fl, has_intercept_);
  }

  // Intercept-only companion model (used for the null deviance).
  GlmModel intercept_only() const {
    Matrix X1 = Matrix::Ones(n(), 1);
    return GlmModel(std::move(X1), {"(Intercept)"}, y_, weights_, family_link_,
                    true);
  }

 private:
  Matrix X_;
  std::vector<std::string> col_names_;
  Vector y_;
  Vector weights_;
  FamilyLink family_link_;
  bool has_intercept_;
};

}  // namespace coneglm
