#pragma once

#include <cmath>
#include <utility>

#include "coneglm/model.hpp"

namespace coneglm {

namespace detail {

inline double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;  // 0*log(0) convention
  return x * std::log(y);
}

// log(1 + exp(eta)) without overflow
inline double softplus(double eta) {
  if (eta > 35.0) return eta;
  if (eta < -35.0) return std::exp(eta);
  return std::log1p(std::exp(eta));
}

}  // namespace detail

// Exponential-family kernel sum_i a_i (y_i lambda_i - b(lambda_i)) at unit
// dispersion, without beta-free constants. Domain violations yield -inf so
// search code can treat them uniformly as infeasible.
inline double loglik_kernel(const GlmModel& m, const Coefficients& c) {
  const Vector eta = m.linear_predictor(c);
  const Vector& y = m.y();
  const Vector& a = m.weights();
  const FamilyLink& fl = m.family_link();
  double kern = 0.0;
  for (Index i = 0; i < m.n(); ++i) {
    const double e = eta[i];
    if (!fl.eta_in_domain(e)) return -kInf;
    double t;
    switch (fl.family()) {
      case Family::gaussian:
        t = y[i] * e - 0.5 * e * e;
        break;
      case Family::binomial: {
        if (fl.link() == Link::logit) {
          t = y[i] * e - detail::softplus(e);
        } else if (fl.link() == Link::log) {
          // eta <= 0; log(1 - exp(eta)) via expm1 for stability
          double t1;
          if (y[i] == 1.0) {
            t1 = 0.0;
          } else if (e == 0.0) {
            return -kInf;  // mu = 1 with failures present
          } else {
            t1 = (1.0 - y[i]) * std::log(-std::expm1(e));
          }
          t = y[i] * e + t1;
        } else {  // probit
          const double mu = fl.linkinv(e);
          if ((mu <= 0.0 && y[i] > 0.0) || (mu >= 1.0 && y[i] < 1.0))
            return -kInf;
          t = detail::xlogy(y[i], mu) + detail::xlogy(1.0 - y[i], 1.0 - mu);
        }
        break;
      }
      case Family::poisson: {
        if (fl.link() == Link::log) {
          t = y[i] * e - std::exp(e);
        } else if (fl.link() == Link::identity) {
          if (e == 0.0 && y[i] > 0.0) return -kInf;
          t = detail::xlogy(y[i], e) - e;
        } else {  // sqrt: mu = eta^2
          if (e == 0.0 && y[i] > 0.0) return -kInf;
          t = 2.0 * detail::xlogy(y[i], e) - e * e;
        }
        break;
      }
    }
    kern += a[i] * t;
  }
  return kern;
}

// Kernel of the saturated model (mu_i = y_i, 0*log0 = 0).
inline double saturated_kernel(const GlmModel& m) {
  const Vector& y = m.y();
  const Vector& a = m.weights();
  double kern = 0.0;
  for (Index i = 0; i < m.n(); ++i) {
    switch (m.family_link().family()) {
      case Family::gaussian:
        kern += a[i] * 0.5 * y[i] * y[i];
        break;
      case Family::binomial:
        kern += a[i] * (detail::xlogy(y[i], y[i]) +
                        detail::xlogy(1.0 - y[i], 1.0 - y[i]));
        break;
      case Family::poisson:
        kern += a[i] * (detail::xlogy(y[i], y[i]) - y[i]);
        break;
    }
  }
  return kern;
}

// beta-free additive constant that turns the kernel into the standard GLM
// log-likelihood: the log binomial coefficient of the aggregated counts, or
// -log(y!) for poisson. The gaussian constant is handled inside
// log_likelihood (profiled dispersion).
inline double loglik_constant(const GlmModel& m) {
  const Vector& y = m.y();
  const Vector& a = m.weights();
  double c = 0.0;
  switch (m.family_link().family()) {
    case Family::binomial:
      for (Index i = 0; i < m.n(); ++i)
        c += std::lgamma(a[i] + 1.0) - std::lgamma(a[i] * y[i] + 1.0) -
             std::lgamma(a[i] * (1.0 - y[i]) + 1.0);
      break;
    case Family::poisson:
      for (Index i = 0; i < m.n(); ++i) c -= a[i] * std::lgamma(y[i] + 1.0);
      break;
    case Family::gaussian:
      break;
  }
  return c;
}

// Weighted residual sum of squares (gaussian only).
inline double weighted_rss(const GlmModel& m, const Coefficients& c) {
  const Vector r = m.y() - m.linear_predictor(c);
  return (m.weights().array() * r.array().square()).sum();
}

// Standard GLM log-likelihood as used by AIC. Gaussian uses the profiled
// ML dispersion phi = RSS/n; binomial and poisson are kernel + constant.
inline double log_likelihood(const GlmModel& m, const Coefficients& c) {
  if (m.family_link().family() == Family::gaussian) {
    const double rss = weighted_rss(m, c);
    const double n = static_cast<double>(m.n());
    if (rss <= 0.0) return kInf;  // saturated; dispersion degenerates
    return -0.5 * n * (std::log(2.0 * M_PI * rss / n) + 1.0) +
           0.5 * m.weights().array().log().sum();
  }
  const double kern = loglik_kernel(m, c);
  if (kern == -kInf) return -kInf;
  return kern + loglik_constant(m);
}

// deviance = 2 (kernel_saturated - kernel(beta)) at unit dispersion; for
// gaussian this equals the weighted RSS.
inline double deviance(const GlmModel& m, const Coefficients& c) {
  const double kern = loglik_kernel(m, c);
  if (kern == -kInf) return kInf;
  return 2.0 * (saturated_kernel(m) - kern);
}

// AIC/BIC; k_active counts nonzero coefficients including the intercept,
// plus one for the gaussian dispersion.
inline std::pair<double, double> aic_bic(double loglik, Index k_active,
                                         Index n) {
  if (k_active < 1) throw InputError("aic_bic: k_active must be >= 1");
  const double aic = -2.0 * loglik + 2.0 * static_cast<double>(k_active);
  const double bic =
      -2.0 * loglik + std::log(static_cast<double>(n)) * k_active;
  return {aic, bic};
}

// Score vector X' (a (y - mu) mu' / V) of the unit-dispersion kernel.
inline Vector score(const GlmModel& m, const Coefficients& c) {
  const Vector eta = m.linear_predictor(c);
  const FamilyLink& fl = m.family_link();
  Vector g(m.n());
  for (Index i = 0; i < m.n(); ++i) {
    const double mu = fl.linkinv(eta[i]);
    const double d = fl.mu_eta(eta[i]);
    const double v = fl.variance(mu);
    g[i] = m.weights()[i] * (m.y()[i] - mu) * d / v;
  }
  return m.X().transpose() * g;
}

struct InformationMatrix {
  Matrix info;    // X' W X with the family-link's IRLS weights
  bool singular;  // true when the matrix is not invertible
};

inline InformationMatrix information_matrix(const GlmModel& m,
                                            const Coefficients& c) {
  const Vector eta = m.linear_predictor(c);
  const FamilyLink& fl = m.family_link();
  Vector w(m.n());
  for (Index i = 0; i < m.n(); ++i) {
    const double mu = fl.linkinv(eta[i]);
    const double d = fl.mu_eta(eta[i]);
    w[i] = m.weights()[i] * d * d / fl.variance(mu);
  }
  Matrix info = m.X().transpose() * w.asDiagonal() * m.X();
  Eigen::FullPivLU<Matrix> lu(info);
  return {std::move(info), !lu.isInvertible()};
}

}  // namespace coneglm
