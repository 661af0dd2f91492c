#pragma once

// Fixture loading for tests: CSVs live in <source>/fixtures, overridable via
// the CONEGLM_FIXTURES environment variable.

#include <cstdlib>
#include <string>

#include "coneglm/coneglm.hpp"
#include "support/test_rng.hpp"

#ifndef CONEGLM_SOURCE_DIR
#define CONEGLM_SOURCE_DIR "."
#endif

namespace testsupport {

using namespace coneglm;

inline std::string fixtures_dir() {
  if (const char* env = std::getenv("CONEGLM_FIXTURES"); env && *env)
    return env;
  return std::string(CONEGLM_SOURCE_DIR) + "/fixtures";
}

inline std::string fixture_path(const std::string& name) {
  return fixtures_dir() + "/" + name;
}

inline DataTable load_fixture(const std::string& name) {
  return read_csv(fixture_path(name));
}

inline GlmModel caesarian_model(Link link = Link::log) {
  const DataTable t = load_fixture("caesarian.csv");
  const Formula f = parse_formula("cbind(n1, n0) ~ RISK + NPLAN + ANTIB");
  return make_glm_model(build_model_matrix(f, t),
                        FamilyLink(Family::binomial, link));
}

inline GlmModel boston_model() {
  const DataTable t = load_fixture("boston.csv");
  const Formula f = parse_formula("medv ~ rm + rad + dis + lstat + tax + ptratio");
  return make_glm_model(build_model_matrix(f, t),
                        FamilyLink(Family::gaussian, Link::identity));
}

// Synthetic GLM instance with a feasible-by-construction design: positive
// covariates for the constrained-domain links so random coefficients stay
// inside the domain after the IRLS start.
struct SyntheticInstance {
  Matrix X;
  std::vector<std::string> names;
  Vector y;
  Vector a;
  Vector beta_true;
};

inline SyntheticInstance make_instance(FamilyLink fl, Index n, Index p,
                                       uint64_t seed) {
  TestRng rng(seed);
  SyntheticInstance inst;
  inst.X.resize(n, p);
  inst.names.clear();
  for (Index j = 0; j < p; ++j)
    inst.names.push_back(j == 0 ? "(Intercept)" : "x" + std::to_string(j));
  const bool positive_domain =
      (fl.family() == Family::poisson && fl.link() != Link::log);
  const bool log_binomial =
      (fl.family() == Family::binomial && fl.link() == Link::log);
  inst.beta_true.resize(p);
  for (Index j = 0; j < p; ++j) {
    if (positive_domain) inst.beta_true[j] = rng.uniform(0.05, 0.5);
    else if (log_binomial) inst.beta_true[j] = rng.uniform(-0.15, 0.15);
    else inst.beta_true[j] = rng.uniform(-0.8, 0.8);
  }
  if (positive_domain) inst.beta_true[0] = rng.uniform(1.0, 2.0);
  if (log_binomial) inst.beta_true[0] = rng.uniform(-2.5, -1.8);  // eta < 0
  for (Index i = 0; i < n; ++i) {
    inst.X(i, 0) = 1.0;
    for (Index j = 1; j < p; ++j)
      inst.X(i, j) = positive_domain || log_binomial ? rng.uniform(0.0, 1.0)
                                                     : rng.normal();
  }
  inst.y.resize(n);
  inst.a = Vector::Ones(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = inst.X.row(i).dot(inst.beta_true);
    const double mu = fl.linkinv(eta);
    switch (fl.family()) {
      case Family::gaussian:
        inst.y[i] = mu + 0.5 * rng.normal();
        break;
      case Family::binomial: {
        // grouped trials keep proportions interior
        const long trials = 5 + static_cast<long>(rng.uniform() * 6.0);
        long succ = 0;
        for (long t = 0; t < trials; ++t) succ += rng.bernoulli(mu);
        inst.y[i] = static_cast<double>(succ) / static_cast<double>(trials);
        inst.a[i] = static_cast<double>(trials);
        break;
      }
      case Family::poisson:
        inst.y[i] = static_cast<double>(rng.poisson(std::max(mu, 1e-6)));
        break;
    }
  }
  return inst;
}

inline GlmModel make_model(const SyntheticInstance& inst, FamilyLink fl) {
  return GlmModel(inst.X, inst.names, inst.y, inst.a, fl, true);
}

inline const std::vector<FamilyLink>& all_family_links() {
  static const std::vector<FamilyLink> fls = {
      FamilyLink(Family::gaussian, Link::identity),
      FamilyLink(Family::binomial, Link::logit),
      FamilyLink(Family::binomial, Link::probit),
      FamilyLink(Family::binomial, Link::log),
      FamilyLink(Family::poisson, Link::log),
      FamilyLink(Family::poisson, Link::identity),
      FamilyLink(Family::poisson, Link::sqrt)};
  return fls;
}

}  // namespace testsupport
