#pragma once

// Independent oracles used to cross-check the library. These deliberately
// avoid the implementation paths they verify: plain loops, long double
// accumulation, textbook formulas.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace testsupport {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Standard GLM log-likelihood by direct summation. family: "gaussian",
// "binomial", "poisson"; link: "identity", "log", "logit", "probit", "sqrt".
// Gaussian uses the profiled ML dispersion.
inline double direct_loglik(const MatrixXd& X, const VectorXd& y,
                            const VectorXd& a, const VectorXd& beta,
                            const std::string& family,
                            const std::string& link) {
  const long n = X.rows();
  auto inv_link = [&](double eta) -> double {
    if (link == "identity") return eta;
    if (link == "log") return std::exp(eta);
    if (link == "logit") return 1.0 / (1.0 + std::exp(-eta));
    if (link == "probit") return 0.5 * std::erfc(-eta / std::sqrt(2.0));
    return eta * eta;  // sqrt link
  };
  long double ll = 0.0L;
  if (family == "gaussian") {
    long double rss = 0.0L, logw = 0.0L;
    for (long i = 0; i < n; ++i) {
      const double r = y[i] - X.row(i).dot(beta);
      rss += static_cast<long double>(a[i]) * r * r;
      logw += std::log(a[i]);
    }
    const long double phi = rss / n;
    return static_cast<double>(
        -0.5L * n * (std::log(2.0L * M_PIl * phi) + 1.0L) + 0.5L * logw);
  }
  for (long i = 0; i < n; ++i) {
    const double mu = inv_link(X.row(i).dot(beta));
    if (family == "binomial") {
      const double k = a[i] * y[i];
      long double term = std::lgamma(a[i] + 1.0) - std::lgamma(k + 1.0) -
                         std::lgamma(a[i] - k + 1.0);
      if (y[i] > 0.0) term += k * std::log(mu);
      if (y[i] < 1.0) term += (a[i] - k) * std::log(1.0 - mu);
      ll += term;
    } else {  // poisson
      long double term = -mu - std::lgamma(y[i] + 1.0);
      if (y[i] > 0.0) term += y[i] * std::log(mu);
      ll += a[i] * term;
    }
  }
  return static_cast<double>(ll);
}

// Textbook deviance formulas.
inline double deviance_formula(const MatrixXd& X, const VectorXd& y,
                               const VectorXd& a, const VectorXd& beta,
                               const std::string& family,
                               const std::string& link) {
  auto inv_link = [&](double eta) -> double {
    if (link == "identity") return eta;
    if (link == "log") return std::exp(eta);
    if (link == "logit") return 1.0 / (1.0 + std::exp(-eta));
    if (link == "probit") return 0.5 * std::erfc(-eta / std::sqrt(2.0));
    return eta * eta;
  };
  long double dev = 0.0L;
  for (long i = 0; i < X.rows(); ++i) {
    const double mu = inv_link(X.row(i).dot(beta));
    if (family == "gaussian") {
      dev += a[i] * (y[i] - mu) * (y[i] - mu);
    } else if (family == "poisson") {
      long double t = -(y[i] - mu);
      if (y[i] > 0.0) t += y[i] * std::log(y[i] / mu);
      dev += 2.0L * a[i] * t;
    } else {  // binomial
      long double t = 0.0L;
      if (y[i] > 0.0) t += y[i] * std::log(y[i] / mu);
      if (y[i] < 1.0) t += (1.0 - y[i]) * std::log((1.0 - y[i]) / (1.0 - mu));
      dev += 2.0L * a[i] * t;
    }
  }
  return static_cast<double>(dev);
}

// Central finite-difference gradient of a scalar function.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x, double h = 1e-6) {
  VectorXd g(x.size());
  for (long j = 0; j < x.size(); ++j) {
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Central finite-difference Hessian.
inline MatrixXd fd_hessian(const std::function<double(const VectorXd&)>& f,
                           const VectorXd& x, double h = 1e-5) {
  const long p = x.size();
  MatrixXd H(p, p);
  for (long i = 0; i < p; ++i) {
    for (long j = 0; j <= i; ++j) {
      VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      H(i, j) = H(j, i) =
          (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
    }
  }
  return H;
}

// Weighted least squares by the normal equations.
inline VectorXd normal_equations(const MatrixXd& X, const VectorXd& y,
                                 const VectorXd& a) {
  MatrixXd XtWX = X.transpose() * a.asDiagonal() * X;
  return XtWX.ldlt().solve(X.transpose() * (a.asDiagonal() * y));
}

// All k-subsets of {0, ..., p-1} in lexicographic order.
inline std::vector<std::vector<long>> k_subsets(long p, long k) {
  std::vector<std::vector<long>> out;
  std::vector<long> cur(k);
  std::function<void(long, long)> rec = [&](long start, long pos) {
    if (pos == k) {
      out.push_back(cur);
      return;
    }
    for (long j = start; j < p; ++j) {
      cur[pos] = j;
      rec(j + 1, pos + 1);
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace testsupport
