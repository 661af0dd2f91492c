#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "coneglm/types.hpp"

namespace coneglm {

enum class ScalerMode {
  auto_mode,
  center_standardization,
  center_minmax,
  standardization,
  minmax,
  off
};

inline ScalerMode parse_scaler(const std::string& s) {
  if (s == "auto") return ScalerMode::auto_mode;
  if (s == "center_standardization") return ScalerMode::center_standardization;
  if (s == "center_minmax") return ScalerMode::center_minmax;
  if (s == "standardization") return ScalerMode::standardization;
  if (s == "minmax") return ScalerMode::minmax;
  if (s == "off") return ScalerMode::off;
  throw InputError("unknown scaler '" + s + "'");
}

// Per-column affine transforms x' = (x - shift) / div applied to the design,
// invertible to restore coefficients on the original scale.
struct ScalingRecord {
  Vector shift;  // length p
  Vector div;    // length p, strictly positive
  std::vector<bool> left_unscaled;  // constant columns, flagged
  bool has_intercept = false;
  bool response_scaled = false;
  double y_shift = 0.0;
  double y_div = 1.0;

  // beta on the original scale from scaled-space beta
  Vector unscale(const Vector& beta_scaled) const {
    Vector beta = beta_scaled;
    const Index p = beta.size();
    double intercept_adjust = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (has_intercept && j == 0) continue;
      beta[j] = y_div * beta_scaled[j] / div[j];
      intercept_adjust += beta_scaled[j] * shift[j] / div[j];
    }
    if (has_intercept)
      beta[0] = y_shift + y_div * (beta_scaled[0] - intercept_adjust);
    return beta;
  }

  // inverse of unscale
  Vector scale(const Vector& beta_original) const {
    Vector bs = beta_original;
    const Index p = bs.size();
    for (Index j = 0; j < p; ++j) {
      if (has_intercept && j == 0) continue;
      bs[j] = beta_original[j] * div[j] / y_div;
    }
    if (has_intercept) {
      double adjust = 0.0;
      for (Index j = 1; j < p; ++j) adjust += bs[j] * shift[j] / div[j];
      bs[0] = (beta_original[0] - y_shift) / y_div + adjust;
    }
    return bs;
  }
};

namespace scaling_detail {

inline double sample_sd(const Vector& x) {
  const Index n = x.size();
  if (n < 2) return 0.0;
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(n - 1));
}

inline void column_params(const Vector& x, ScalerMode mode, double* shift,
                          double* div) {
  switch (mode) {
    case ScalerMode::center_standardization:
      *shift = x.mean();
      *div = sample_sd(x);
      break;
    case ScalerMode::standardization:
      *shift = 0.0;
      *div = sample_sd(x);
      break;
    case ScalerMode::minmax:
      *shift = 0.0;
      *div = x.maxCoeff() - x.minCoeff();
      break;
    case ScalerMode::center_minmax:
      *shift = x.mean();
      *div = x.maxCoeff() - x.minCoeff();
      break;
    default:
      *shift = 0.0;
      *div = 1.0;
  }
}

}  // namespace scaling_detail

// auto resolves to center_standardization when an intercept is present,
// standardization otherwise. Constant non-intercept columns are left
// unscaled and flagged.
inline std::pair<Matrix, ScalingRecord> scale_design(const Matrix& X,
                                                     ScalerMode mode,
                                                     bool intercept_flag) {
  if (mode == ScalerMode::auto_mode)
    mode = intercept_flag ? ScalerMode::center_standardization
                          : ScalerMode::standardization;
  const Index p = X.cols();
  ScalingRecord rec;
  rec.shift = Vector::Zero(p);
  rec.div = Vector::Ones(p);
  rec.left_unscaled.assign(p, false);
  rec.has_intercept = intercept_flag;
  Matrix Xs = X;
  if (mode == ScalerMode::off) return {std::move(Xs), std::move(rec)};
  for (Index j = 0; j < p; ++j) {
    if (intercept_flag && j == 0) continue;
    double shift, div;
    scaling_detail::column_params(X.col(j), mode, &shift, &div);
    if (!(div > 0.0)) {  // constant column
      rec.left_unscaled[j] = true;
      continue;
    }
    rec.shift[j] = shift;
    rec.div[j] = div;
    Xs.col(j) = (X.col(j).array() - shift) / div;
  }
  return {std::move(Xs), std::move(rec)};
}

// Response scaling (gaussian only); uses the same mode conventions.
inline Vector scale_response(const Vector& y, ScalerMode mode,
                             bool intercept_flag, ScalingRecord& rec) {
  if (mode == ScalerMode::auto_mode)
    mode = intercept_flag ? ScalerMode::center_standardization
                          : ScalerMode::standardization;
  if (mode == ScalerMode::off) return y;
  double shift, div;
  scaling_detail::column_params(y, mode, &shift, &div);
  if (!intercept_flag) shift = 0.0;  // a shift is not recoverable without one
  if (!(div > 0.0)) return y;
  rec.response_scaled = true;
  rec.y_shift = shift;
  rec.y_div = div;
  return (y.array() - shift) / div;
}

}  // namespace coneglm
