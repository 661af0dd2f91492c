#pragma once

#include <algorithm>

#include "coneglm/loglik.hpp"

namespace coneglm {

enum class MleStatus { converged, max_iter_reached };

struct MleResult {
  Coefficients coefficients;
  MleStatus status = MleStatus::max_iter_reached;
  int iterations = 0;
  double score_norm = kInf;
};

namespace detail {

// R-style starting mean, pulled off the boundary for constrained links.
inline double starting_mu(const FamilyLink& fl, double y, double a) {
  switch (fl.family()) {
    case Family::binomial: return (a * y + 0.5) / (a + 1.0);
    case Family::poisson: return y + 0.1;
    case Family::gaussian: return y;
  }
  return y;
}

inline bool eta_feasible(const GlmModel& m, const Vector& beta) {
  const Vector eta = m.X() * beta;
  for (Index i = 0; i < m.n(); ++i)
    if (!m.family_link().eta_in_domain(eta[i])) return false;
  // strict interior needed by log(mu) style kernels with y > 0
  for (Index i = 0; i < m.n(); ++i) {
    const double mu = m.family_link().linkinv(eta[i]);
    if (m.family_link().family() == Family::binomial &&
        ((mu <= 0.0 && m.y()[i] > 0.0) || (mu >= 1.0 && m.y()[i] < 1.0)))
      return false;
    if (m.family_link().family() == Family::poisson && mu <= 0.0 &&
        m.y()[i] > 0.0)
      return false;
  }
  return true;
}

}  // namespace detail

// Fisher-scoring (IRLS) maximum likelihood, used only on unconstrained
// problems as an independent oracle and for the null deviance. Step-halving
// keeps iterates inside the link domain for constrained-domain links.
// Probit is fitted exclusively by rescaling the logit fit.
inline MleResult newton_mle(const GlmModel& m, int max_iter = 100,
                            double tol = 1e-10) {
  const FamilyLink& fl = m.family_link();
  if (fl.fitted_via_logit_scaling()) {
    MleResult r = newton_mle(
        m.with_family_link(FamilyLink(Family::binomial, Link::logit)),
        max_iter, tol);
    r.coefficients.beta *= kProbitLogitScale;
    return r;
  }

  const Index n = m.n(), p = m.p();
  const Vector& y = m.y();
  const Vector& a = m.weights();

  // initial eta via one weighted least squares on g(mustart)
  Vector eta0(n), w0(n);
  for (Index i = 0; i < n; ++i) {
    const double mu = detail::starting_mu(fl, y[i], a[i]);
    eta0[i] = fl.link_of_mean(mu);
    const double d = fl.mu_eta(eta0[i]);
    w0[i] = a[i] * d * d / fl.variance(mu);
  }
  Matrix XtWX = m.X().transpose() * w0.asDiagonal() * m.X();
  Vector beta =
      XtWX.ldlt().solve(m.X().transpose() * (w0.asDiagonal() * eta0));
  if (!beta.allFinite() || !detail::eta_feasible(m, beta)) {
    // shrink toward the (feasible) intercept-only solution, or zero
    Vector anchor = Vector::Zero(p);
    if (m.has_intercept()) {
      const double ybar = (a.array() * y.array()).sum() / a.sum();
      anchor[0] = fl.link_of_mean(detail::starting_mu(fl, ybar, a.sum()));
    }
    double s = 1.0;
    Vector cand = beta;
    while (s > 1e-12 &&
           (!cand.allFinite() || !detail::eta_feasible(m, cand))) {
      s *= 0.5;
      cand = anchor + s * (beta - anchor);
    }
    beta = cand.allFinite() && detail::eta_feasible(m, cand) ? cand : anchor;
  }

  MleResult res;
  double kern = loglik_kernel(m, {beta});
  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    const Vector g = score(m, {beta});
    res.score_norm = g.cwiseAbs().maxCoeff();
    if (res.score_norm <= tol) {
      res.status = MleStatus::converged;
      break;
    }
    const Matrix info = information_matrix(m, {beta}).info;
    Vector step = (info + 1e-12 * Matrix::Identity(p, p)).ldlt().solve(g);
    double s = 1.0;
    Vector next = beta + step;
    double next_kern = detail::eta_feasible(m, next)
                           ? loglik_kernel(m, {next})
                           : -kInf;
    int halvings = 0;
    while ((next_kern == -kInf || next_kern < kern - 1e-12) && halvings < 60) {
      s *= 0.5;
      ++halvings;
      next = beta + s * step;
      next_kern = detail::eta_feasible(m, next) ? loglik_kernel(m, {next})
                                                : -kInf;
    }
    if (next_kern == -kInf) break;  // no feasible progress
    beta = next;
    kern = next_kern;
  }
  res.coefficients = {beta};
  return res;
}

// Deviance of the intercept-only fit (same family-link). Models without an
// intercept use the empty model eta = 0; an out-of-domain empty model yields
// +inf.
inline double null_deviance(const GlmModel& m) {
  if (m.has_intercept() || m.p() == 1) {
    const GlmModel null_model = m.intercept_only();
    const MleResult r = newton_mle(null_model, 50, 1e-12);
    return deviance(null_model, r.coefficients);
  }
  GlmModel null_model = m.intercept_only();
  return deviance(null_model, {Vector::Zero(1)});
}

}  // namespace coneglm
