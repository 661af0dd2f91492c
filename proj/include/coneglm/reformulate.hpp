#pragma once

// Conic epigraph/hypograph builders for each family-link. Variable layout is
// [beta (p) | per-observation auxiliaries | optional scalar zeta]. Programs
// minimize the negated likelihood kernel, so the continuous optimum equals
// -(kernel(beta*) - kernel_offset(model)).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "coneglm/model.hpp"
#include "coneglm/program.hpp"

namespace coneglm {

struct VariableLayout {
  IndexRange beta;
  IndexRange delta;  // empty when the family-link has no delta_i
  IndexRange gamma;  // empty when the family-link has no gamma_i
  Index zeta = -1;   // -1 when absent
};

struct BuiltProgram {
  ConicProgram program;
  VariableLayout layout;
  Vector start;  // strictly feasible point for the unconstrained program
};

// beta-free constant c with continuous objective = -(kernel(beta*) - c).
inline double kernel_offset(const GlmModel& m) {
  if (m.family_link().family() == Family::gaussian)
    return 0.5 * (m.weights().array() * m.y().array().square()).sum();
  return 0.0;
}

namespace detail {

inline std::vector<std::string> beta_names(const GlmModel& m) {
  return m.col_names();
}

inline void name_range(std::vector<std::string>& names, const char* stem,
                       Index count) {
  for (Index i = 0; i < count; ++i)
    names.push_back(std::string(stem) + "[" + std::to_string(i + 1) + "]");
}

// triplets for the linear-predictor row x_i' beta with scale s
inline void eta_row(std::vector<Triplet>& tr, const GlmModel& m, Index obs,
                    int row, double scale) {
  for (Index j = 0; j < m.p(); ++j) {
    const double v = m.X()(obs, j) * scale;
    if (v != 0.0) tr.emplace_back(row, static_cast<int>(j), v);
  }
}

}  // namespace detail

// minimize zeta/2 with (zeta+1, zeta-1, 2 sqrt(a_1)(y_1 - x_1'b), ...) in
// K_soc^{n+2}; at the optimum zeta equals the weighted RSS.
inline BuiltProgram build_gaussian_identity(const GlmModel& m) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + 1);
  const Index zeta = p;
  pb.set_objective(zeta, 0.5);

  std::vector<Triplet> tr;
  Vector b(n + 2);
  tr.emplace_back(0, static_cast<int>(zeta), 1.0);
  b[0] = 1.0;
  tr.emplace_back(1, static_cast<int>(zeta), 1.0);
  b[1] = -1.0;
  for (Index i = 0; i < n; ++i) {
    const double sa = std::sqrt(m.weights()[i]);
    detail::eta_row(tr, m, i, static_cast<int>(2 + i), -2.0 * sa);
    b[2 + i] = 2.0 * sa * m.y()[i];
  }
  pb.add_block(tr, std::move(b), Cone::SecondOrder(n + 2));

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  prog.var_names.push_back("zeta");
  VariableLayout layout;
  layout.beta = {0, p};
  layout.zeta = zeta;
  Vector start = Vector::Zero(p + 1);
  start[zeta] = (m.weights().array() * m.y().array().square()).sum() + 1.0;
  return {std::move(prog), layout, std::move(start)};
}

// maximize sum a_i (y_i eta_i - delta_i) with the softplus epigraph
// delta_i >= log(1 + exp(eta_i)) written as two exponential cones:
//   (-delta_i, 1, gamma_i) in K_exp and (eta_i - delta_i, 1, 1 - gamma_i)
// in K_exp, so exp(-delta) + exp(eta - delta) <= 1.
inline BuiltProgram build_binomial_logit(const GlmModel& m) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + 2 * n);
  const Index delta0 = p, gamma0 = p + n;
  const Vector& a = m.weights();
  const Vector& y = m.y();
  for (Index j = 0; j < p; ++j)
    pb.set_objective(j, -(a.array() * y.array() * m.X().col(j).array()).sum());
  for (Index i = 0; i < n; ++i) pb.set_objective(delta0 + i, a[i]);

  for (Index i = 0; i < n; ++i) {
    {
      std::vector<Triplet> tr;
      tr.emplace_back(0, static_cast<int>(delta0 + i), -1.0);
      tr.emplace_back(2, static_cast<int>(gamma0 + i), 1.0);
      Vector b(3);
      b << 0.0, 1.0, 0.0;
      pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
    }
    {
      std::vector<Triplet> tr;
      detail::eta_row(tr, m, i, 0, 1.0);
      tr.emplace_back(0, static_cast<int>(delta0 + i), -1.0);
      tr.emplace_back(2, static_cast<int>(gamma0 + i), -1.0);
      Vector b(3);
      b << 0.0, 1.0, 1.0;
      pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
    }
  }

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  detail::name_range(prog.var_names, "delta", n);
  detail::name_range(prog.var_names, "gamma", n);
  VariableLayout layout;
  layout.beta = {0, p};
  layout.delta = {delta0, delta0 + n};
  layout.gamma = {gamma0, gamma0 + n};
  Vector start = Vector::Zero(p + 2 * n);
  start.segment(delta0, n).setConstant(std::log(2.0) + 0.5);
  start.segment(gamma0, n).setConstant(0.5);
  return {std::move(prog), layout, std::move(start)};
}

// maximize sum a_i (y_i eta_i + (1-y_i) delta_i) with the hypograph
// delta_i <= log(1 - exp(eta_i)): (delta_i, 1, 1-gamma_i) in K_exp,
// (eta_i, 1, gamma_i) in K_exp, plus the domain block -eta >= 0.
// eta_margin shifts the domain rows to -eta >= eta_margin for ill-posed data.
inline BuiltProgram build_binomial_log(const GlmModel& m,
                                       double eta_margin = 0.0) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + 2 * n);
  const Index delta0 = p, gamma0 = p + n;
  const Vector& a = m.weights();
  const Vector& y = m.y();
  for (Index j = 0; j < p; ++j)
    pb.set_objective(j, -(a.array() * y.array() * m.X().col(j).array()).sum());
  for (Index i = 0; i < n; ++i)
    pb.set_objective(delta0 + i, -a[i] * (1.0 - y[i]));

  for (Index i = 0; i < n; ++i) {
    {
      std::vector<Triplet> tr;
      tr.emplace_back(0, static_cast<int>(delta0 + i), 1.0);
      tr.emplace_back(2, static_cast<int>(gamma0 + i), -1.0);
      Vector b(3);
      b << 0.0, 1.0, 1.0;
      pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
    }
    {
      std::vector<Triplet> tr;
      detail::eta_row(tr, m, i, 0, 1.0);
      tr.emplace_back(2, static_cast<int>(gamma0 + i), 1.0);
      Vector b(3);
      b << 0.0, 1.0, 0.0;
      pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
    }
  }
  {
    std::vector<Triplet> tr;
    for (Index i = 0; i < n; ++i)
      detail::eta_row(tr, m, i, static_cast<int>(i), -1.0);
    pb.add_block(tr, Vector::Constant(n, -eta_margin), Cone::Nonnegative(n));
  }

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  detail::name_range(prog.var_names, "delta", n);
  detail::name_range(prog.var_names, "gamma", n);
  VariableLayout layout;
  layout.beta = {0, p};
  layout.delta = {delta0, delta0 + n};
  layout.gamma = {gamma0, gamma0 + n};
  Vector start;
  if (m.has_intercept()) {
    start = Vector::Zero(p + 2 * n);
    start[0] = -0.5;  // eta_i = -0.5 < 0 strictly
    start.segment(delta0, n).setConstant(-2.0);
    start.segment(gamma0, n).setConstant(0.75);
  }
  return {std::move(prog), layout, std::move(start)};
}

// maximize sum a_i (y_i eta_i - delta_i), (eta_i, 1, delta_i) in K_exp.
inline BuiltProgram build_poisson_log(const GlmModel& m) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + n);
  const Index delta0 = p;
  const Vector& a = m.weights();
  const Vector& y = m.y();
  for (Index j = 0; j < p; ++j)
    pb.set_objective(j, -(a.array() * y.array() * m.X().col(j).array()).sum());
  for (Index i = 0; i < n; ++i) pb.set_objective(delta0 + i, a[i]);

  for (Index i = 0; i < n; ++i) {
    std::vector<Triplet> tr;
    detail::eta_row(tr, m, i, 0, 1.0);
    tr.emplace_back(2, static_cast<int>(delta0 + i), 1.0);
    Vector b(3);
    b << 0.0, 1.0, 0.0;
    pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
  }

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  detail::name_range(prog.var_names, "delta", n);
  VariableLayout layout;
  layout.beta = {0, p};
  layout.delta = {delta0, delta0 + n};
  Vector start = Vector::Zero(p + n);
  start.segment(delta0, n).setConstant(2.0);
  return {std::move(prog), layout, std::move(start)};
}

// maximize sum a_i (y_i delta_i - eta_i), (delta_i, 1, eta_i) in K_exp,
// plus eta >= 0 (shifted by eta_margin when requested).
inline BuiltProgram build_poisson_identity(const GlmModel& m,
                                           double eta_margin = 0.0) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + n);
  const Index delta0 = p;
  const Vector& a = m.weights();
  const Vector& y = m.y();
  for (Index j = 0; j < p; ++j)
    pb.set_objective(j, (a.array() * m.X().col(j).array()).sum());
  for (Index i = 0; i < n; ++i) pb.set_objective(delta0 + i, -a[i] * y[i]);

  for (Index i = 0; i < n; ++i) {
    std::vector<Triplet> tr;
    tr.emplace_back(0, static_cast<int>(delta0 + i), 1.0);
    detail::eta_row(tr, m, i, 2, 1.0);
    Vector b(3);
    b << 0.0, 1.0, 0.0;
    pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
  }
  {
    std::vector<Triplet> tr;
    for (Index i = 0; i < n; ++i)
      detail::eta_row(tr, m, i, static_cast<int>(i), 1.0);
    pb.add_block(tr, Vector::Constant(n, -eta_margin), Cone::Nonnegative(n));
  }

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  detail::name_range(prog.var_names, "delta", n);
  VariableLayout layout;
  layout.beta = {0, p};
  layout.delta = {delta0, delta0 + n};
  Vector start;
  if (m.has_intercept()) {
    start = Vector::Zero(p + n);
    start[0] = 1.0;  // eta_i = 1 > 0 strictly
    start.segment(delta0, n).setConstant(-1.0);
  }
  return {std::move(prog), layout, std::move(start)};
}

// maximize sum 2 a_i y_i delta_i - zeta with (delta_i, 1, eta_i) in K_exp
// and the SOC block (zeta+1, zeta-1, 2 sqrt(a_1) eta_1, ...), so zeta bounds
// sum a_i eta_i^2. Weights fold into the objective and as sqrt(a_i) row
// scaling.
inline BuiltProgram build_poisson_sqrt(const GlmModel& m) {
  const Index n = m.n(), p = m.p();
  ProgramBuilder pb(p + n + 1);
  const Index delta0 = p, zeta = p + n;
  const Vector& a = m.weights();
  const Vector& y = m.y();
  for (Index i = 0; i < n; ++i) pb.set_objective(delta0 + i, -2.0 * a[i] * y[i]);
  pb.set_objective(zeta, 1.0);

  for (Index i = 0; i < n; ++i) {
    std::vector<Triplet> tr;
    tr.emplace_back(0, static_cast<int>(delta0 + i), 1.0);
    detail::eta_row(tr, m, i, 2, 1.0);
    Vector b(3);
    b << 0.0, 1.0, 0.0;
    pb.add_block(tr, std::move(b), Cone::ExponentialPrimal());
  }
  {
    std::vector<Triplet> tr;
    Vector b(n + 2);
    tr.emplace_back(0, static_cast<int>(zeta), 1.0);
    b[0] = 1.0;
    tr.emplace_back(1, static_cast<int>(zeta), 1.0);
    b[1] = -1.0;
    for (Index i = 0; i < n; ++i) {
      detail::eta_row(tr, m, i, static_cast<int>(2 + i), 2.0 * std::sqrt(a[i]));
      b[2 + i] = 0.0;
    }
    pb.add_block(tr, std::move(b), Cone::SecondOrder(n + 2));
  }

  ConicProgram prog = pb.take();
  prog.var_names = detail::beta_names(m);
  detail::name_range(prog.var_names, "delta", n);
  prog.var_names.push_back("zeta");
  VariableLayout layout;
  layout.beta = {0, p};
  layout.delta = {delta0, delta0 + n};
  layout.zeta = zeta;
  Vector start;
  if (m.has_intercept()) {
    start = Vector::Zero(p + n + 1);
    start[0] = 1.0;
    start.segment(delta0, n).setConstant(-1.0);
    start[zeta] = m.weights().sum() + 1.0;  // bounds sum a_i * 1^2
  }
  return {std::move(prog), layout, std::move(start)};
}

// Scale a logit fit into probit coefficients (sqrt(pi/8) each).
inline Coefficients apply_probit_scaling(const Coefficients& logit_fit) {
  return {logit_fit.beta * kProbitLogitScale};
}

// Dispatch on the model's family-link. Probit builds the logit program; the
// fit pipeline rescales the solution afterwards.
inline BuiltProgram build_program(const GlmModel& m, double eta_margin = 0.0) {
  const FamilyLink& fl = m.family_link();
  switch (fl.family()) {
    case Family::gaussian:
      return build_gaussian_identity(m);
    case Family::binomial:
      if (fl.link() == Link::log) return build_binomial_log(m, eta_margin);
      if (fl.link() == Link::probit)
        return build_binomial_logit(
            m.with_family_link(FamilyLink(Family::binomial, Link::logit)));
      return build_binomial_logit(m);
    case Family::poisson:
      if (fl.link() == Link::identity)
        return build_poisson_identity(m, eta_margin);
      if (fl.link() == Link::sqrt) return build_poisson_sqrt(m);
      return build_poisson_log(m);
  }
  throw InputError("unreachable family");
}

}  // namespace coneglm
