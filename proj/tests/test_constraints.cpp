#include <catch2/catch_amalgamated.hpp>

#include "coneglm/bnb.hpp"
#include "coneglm/constraints.hpp"
#include "coneglm/irls.hpp"
#include "coneglm/reformulate.hpp"
#include "support/fixtures.hpp"

using namespace coneglm;
using testsupport::caesarian_model;
using testsupport::load_fixture;
using testsupport::make_instance;
using testsupport::make_model;

namespace {

Vector caesarian_fit(const std::vector<ConstraintSpec>& specs) {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  const auto aug = attach(built.program, built.layout, m.X(), specs, 100.0,
                          m.col_names(), true);
  const MiSolution mi = solve_mi(aug.program);
  REQUIRE(mi.solution.status == SolveStatus::optimal);
  return mi.solution.primal.head(4);
}

}  // namespace

TEST_CASE("empty spec list leaves the program unchanged") {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  const auto aug = attach(built.program, built.layout, m.X(), {}, 100.0,
                          m.col_names(), true);
  CHECK(aug.program.num_vars == built.program.num_vars);
  CHECK(aug.program.binaries.empty());
  CHECK(aug.program.blocks.size() == built.program.blocks.size());
  CHECK_FALSE(aug.z_range.has_value());
}

TEST_CASE("unknown columns are rejected with the offending name") {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  std::vector<ConstraintSpec> specs;
  specs.push_back(Include{{"NOPE"}});
  CHECK_THROWS_WITH(attach(built.program, built.layout, m.X(), specs, 100.0,
                           m.col_names(), true),
                    Catch::Matchers::ContainsSubstring("NOPE"));
}

TEST_CASE("big_m must be positive, bounds must be consistent") {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  CHECK_THROWS_AS(attach(built.program, built.layout, m.X(), {}, 0.0,
                         m.col_names(), true),
                  InputError);
  std::vector<ConstraintSpec> specs;
  specs.push_back(Lower{{{"RISK", 2.0}}});
  specs.push_back(Upper{{{"RISK", 1.0}}});
  CHECK_THROWS_AS(attach(built.program, built.layout, m.X(), specs, 100.0,
                         m.col_names(), true),
                  InputError);
}

TEST_CASE("KMax with Include beyond k is left to the solver") {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  std::vector<ConstraintSpec> specs;
  specs.push_back(KMax{1});
  specs.push_back(Include{{"RISK", "NPLAN"}});
  const auto aug = attach(built.program, built.layout, m.X(), specs, 100.0,
                          m.col_names(), true);
  const MiSolution mi = solve_mi(aug.program);
  CHECK(mi.solution.status == SolveStatus::infeasible);
}

TEST_CASE("include forces NPLAN into the KMax(2) model") {
  const Vector beta = caesarian_fit({KMax{2}, Include{{"NPLAN"}}});
  CHECK(beta[0] == Catch::Approx(-1.0056143).margin(1e-3));
  CHECK(std::abs(beta[1]) < 1e-6);
  CHECK(beta[2] == Catch::Approx(0.5892485).margin(1e-3));
  CHECK(beta[3] == Catch::Approx(-1.7899819).margin(1e-3));
}

TEST_CASE("bounds: all three constraints are binding") {
  std::vector<ConstraintSpec> specs;
  specs.push_back(Lower{{{"RISK", 3.0}, {"ANTIB", 1e-3}}});
  specs.push_back(Upper{{{"NPLAN", -1.0}}});
  const Vector beta = caesarian_fit(specs);
  CHECK(beta[0] == Catch::Approx(-3.67126).margin(1e-3));
  CHECK(beta[1] == Catch::Approx(3.0).margin(1e-6));
  CHECK(beta[2] == Catch::Approx(-1.0).margin(1e-6));
  CHECK(beta[3] == Catch::Approx(1e-3).margin(1e-6));
}

TEST_CASE("linear inequality: RISK <= ANTIB binds") {
  LinearConstraint lc;
  lc.rows.push_back({{{"RISK", 1.0}, {"ANTIB", -1.0}}, ConstraintDir::le, 0.0});
  const Vector beta = caesarian_fit({lc});
  CHECK(beta[0] == Catch::Approx(-0.95854528).margin(1e-3));
  CHECK(beta[1] == Catch::Approx(-0.30446220).margin(1e-3));
  CHECK(beta[2] == Catch::Approx(0.09905912).margin(1e-3));
  CHECK(beta[3] == Catch::Approx(-0.30446220).margin(1e-3));
  CHECK(beta[1] == Catch::Approx(beta[3]).margin(1e-6));
}

TEST_CASE("linear equality: RISK + NPLAN = 1 holds exactly") {
  LinearConstraint lc;
  lc.rows.push_back({{{"RISK", 1.0}, {"NPLAN", 1.0}}, ConstraintDir::eq, 1.0});
  const Vector beta = caesarian_fit({lc});
  CHECK(beta[1] == Catch::Approx(0.6600015).margin(1e-3));
  CHECK(beta[2] == Catch::Approx(0.3399985).margin(1e-3));
  CHECK(beta[1] + beta[2] == Catch::Approx(1.0).margin(1e-8));
  CHECK(beta[0] == Catch::Approx(-1.3047691).margin(1e-3));
  CHECK(beta[3] == Catch::Approx(-1.9232422).margin(1e-3));
}

TEST_CASE("matrix form combines both linear rows") {
  LinearConstraint lc;
  lc.rows.push_back({{{"RISK", 1.0}, {"ANTIB", -1.0}}, ConstraintDir::le, 0.0});
  lc.rows.push_back({{{"RISK", 1.0}, {"NPLAN", 1.0}}, ConstraintDir::eq, 1.0});
  const Vector beta = caesarian_fit({lc});
  CHECK(beta[0] == Catch::Approx(-1.8274949).margin(1e-3));
  CHECK(beta[1] == Catch::Approx(-0.2560339).margin(1e-3));
  CHECK(beta[2] == Catch::Approx(1.2560339).margin(1e-3));
  CHECK(beta[3] == Catch::Approx(-0.2560339).margin(1e-3));
}

TEST_CASE("group_equal ties all three coefficients") {
  const Vector beta = caesarian_fit({GroupEqual{{"RISK", "NPLAN", "ANTIB"}}});
  CHECK(beta[0] == Catch::Approx(-0.9710750).margin(1e-3));
  for (int j = 1; j <= 3; ++j)
    CHECK(beta[j] == Catch::Approx(-0.1750262).margin(1e-3));
  CHECK(beta[1] == Catch::Approx(beta[2]).margin(1e-9));
  CHECK(beta[2] == Catch::Approx(beta[3]).margin(1e-9));
}

TEST_CASE("duplicate specs are concatenated, never deduplicated") {
  const GlmModel m = caesarian_model();
  const auto built = build_program(m);
  std::vector<ConstraintSpec> once{KMax{2}};
  std::vector<ConstraintSpec> twice{KMax{2}, KMax{2}};
  const auto a1 = attach(built.program, built.layout, m.X(), once, 100.0,
                         m.col_names(), true);
  const auto a2 = attach(built.program, built.layout, m.X(), twice, 100.0,
                         m.col_names(), true);
  CHECK(a2.program.blocks.size() == a1.program.blocks.size() + 1);
}

TEST_CASE("correlation_pairs on Boston finds exactly rad-tax at 0.9") {
  const GlmModel m = testsupport::boston_model();
  const auto pairs =
      correlation_pairs(m.X(), m.col_names(), 0.9);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == "rad");
  CHECK(pairs[0].second == "tax");
}

TEST_CASE("correlation edge cases") {
  testsupport::TestRng rng(12);
  Matrix X(30, 3);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
  // rho = 1.0 on a full-rank matrix: empty set
  CHECK(correlation_pairs(X, {"a", "b", "c"}, 1.0).empty());
  // duplicated column: present at any rho < 1
  Matrix X2(30, 3);
  X2.leftCols(2) = X.leftCols(2);
  X2.col(2) = X.col(0);
  const auto pairs = correlation_pairs(X2, {"a", "b", "a2"}, 0.999);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == "a");
  CHECK(pairs[0].second == "a2");
  // constant column: error naming it
  Matrix X3 = X;
  X3.col(1).setConstant(2.0);
  CHECK_THROWS_WITH(correlation_pairs(X3, {"a", "b", "c"}, 0.5),
                    Catch::Matchers::ContainsSubstring("'b'"));
  CHECK_THROWS_AS(correlation_pairs(X, {"a", "b", "c"}, 1.5), InputError);
  CHECK_THROWS_AS(correlation_pairs(X, {"a", "b", "c"}, 0.5, "spearman"),
                  InputError);
}

TEST_CASE("cardinality monotonicity on the Caesarian fixture") {
  const GlmModel m = caesarian_model();
  double prev = -kInf;
  for (Index k = 3; k >= 1; --k) {
    const auto built = build_program(m);
    const auto aug = attach(built.program, built.layout, m.X(), {KMax{k}},
                            100.0, m.col_names(), true);
    const MiSolution mi = solve_mi(aug.program);
    REQUIRE(mi.solution.status == SolveStatus::optimal);
    // minimization objective = negated kernel: smaller k can only be worse
    CHECK(mi.solution.objective_value >= prev - 1e-8);
    prev = mi.solution.objective_value;
  }
}

TEST_CASE("non-bindingness certificate: active-set refit reproduces KMax(2)") {
  const Vector beta = caesarian_fit({KMax{2}});
  // refit with only the active columns, no binaries
  const DataTable t = load_fixture("caesarian.csv");
  const Formula f = parse_formula("cbind(n1, n0) ~ RISK + ANTIB");
  const GlmModel sub = make_glm_model(build_model_matrix(f, t),
                                      FamilyLink(Family::binomial, Link::log));
  const MleResult mle = newton_mle(sub);
  CHECK(beta[0] == Catch::Approx(mle.coefficients.beta[0]).margin(1e-5));
  CHECK(beta[1] == Catch::Approx(mle.coefficients.beta[1]).margin(1e-5));
  CHECK(beta[3] == Catch::Approx(mle.coefficients.beta[2]).margin(1e-5));
}

TEST_CASE("sign coherence groups share one binary and one sign") {
  const FamilyLink fl(Family::gaussian, Link::identity);
  auto inst = make_instance(fl, 60, 5, 2718);
  // engineer opposing signs in the unconstrained fit
  Vector y = inst.y + inst.X.col(2) - 0.9 * inst.X.col(3);
  GlmModel m(inst.X, inst.names, y, inst.a, fl, true);
  const auto built = build_program(m);
  std::vector<ConstraintSpec> specs;
  specs.push_back(SignCoherence{{"x2", "x3"}, std::nullopt});
  const auto aug = attach(built.program, built.layout, m.X(), specs, 100.0,
                          m.col_names(), true);
  CHECK(aug.u_vars.size() == 1);
  const MiSolution mi = solve_mi(aug.program);
  REQUIRE(mi.solution.status == SolveStatus::optimal);
  const double b2 = mi.solution.primal[2], b3 = mi.solution.primal[3];
  const bool same_sign =
      std::min(b2, b3) >= -1e-6 || std::max(b2, b3) <= 1e-6;
  CHECK(same_sign);
}

TEST_CASE("fairness rows: alpha = 1 limits are non-binding by construction") {
  const FamilyLink fl(Family::binomial, Link::logit);
  auto inst = make_instance(fl, 200, 4, 11011);
  const GlmModel m = make_model(inst, fl);
  // binary sensitive attribute correlated with x1
  testsupport::TestRng rng(5);
  Matrix W(m.n(), 1);
  for (Index i = 0; i < m.n(); ++i)
    W(i, 0) = inst.X(i, 1) + 0.3 * rng.normal() > 0 ? 1.0 : 0.0;

  const MleResult mle = newton_mle(m);
  const Vector eta = m.X() * mle.coefficients.beta;
  const double wbar = W.col(0).mean();
  const double ebar = eta.mean();
  const double n = static_cast<double>(m.n());
  const double s = std::abs(
      ((W.col(0).array() - wbar) * (eta.array() - ebar)).sum() / (n - 1.0));

  Vector c(1);
  c << s;  // alpha = 1
  const LinearConstraint rows =
      build_fairness_rows(W, {"w"}, m.X(), m.col_names(), c);
  CHECK(rows.rows.size() == 2);
  const auto built = build_program(m);
  const auto aug = attach(built.program, built.layout, m.X(), {rows}, 100.0,
                          m.col_names(), true);
  const MiSolution mi = solve_mi(aug.program);
  REQUIRE(mi.solution.status == SolveStatus::optimal);
  CHECK((mi.solution.primal.head(4) - mle.coefficients.beta)
            .cwiseAbs()
            .maxCoeff() < 1e-5);

  // alpha = 0 pins the empirical covariance to zero
  Vector c0 = Vector::Zero(1);
  const LinearConstraint rows0 =
      build_fairness_rows(W, {"w"}, m.X(), m.col_names(), c0);
  const auto aug0 = attach(built.program, built.layout, m.X(), {rows0}, 100.0,
                           m.col_names(), true);
  const MiSolution mi0 = solve_mi(aug0.program);
  REQUIRE(mi0.solution.status == SolveStatus::optimal);
  const Vector eta0 = m.X() * mi0.solution.primal.head(4);
  const double cov0 =
      ((W.col(0).array() - wbar) * eta0.array()).sum() / n;
  CHECK(std::abs(cov0) <= 1e-6);

  // constant sensitive column errors
  Matrix Wc = Matrix::Ones(m.n(), 1);
  CHECK_THROWS_AS(build_fairness_rows(Wc, {"w"}, m.X(), m.col_names(), c),
                  InputError);
}

TEST_CASE("disparate impact") {
  CHECK(disparate_impact({1, 0, 1, 0}, {0, 0, 1, 1}) == Catch::Approx(1.0));
  // rates 0.2 vs 0.4
  std::vector<int> yhat, w;
  for (int i = 0; i < 10; ++i) {
    yhat.push_back(i < 2 ? 1 : 0);
    w.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    yhat.push_back(i < 4 ? 1 : 0);
    w.push_back(1);
  }
  CHECK(disparate_impact(yhat, w) == Catch::Approx(0.5));
  CHECK(std::isnan(disparate_impact({0, 0}, {0, 1})));  // zero denominator
}

TEST_CASE("constraint JSON schema round-trips through the parser") {
  const auto j = nlohmann::json::parse(R"([
    {"type": "k_max", "k": 2},
    {"type": "group_sparsity", "vars": ["a", "b"], "k": 1},
    {"type": "rho_max", "rho": 0.9},
    {"type": "group_inout", "vars": ["a", "b"]},
    {"type": "include", "vars": ["a"]},
    {"type": "lower", "bounds": {"a": 0.5}},
    {"type": "upper", "bounds": {"a": 2.0}},
    {"type": "linear", "L": [{"a": 1, "b": -1}], "dir": ["<="], "rhs": [0]},
    {"type": "linear", "L": [{"a": 1}], "dir": ["<="], "rhs": [1], "on_big_m": true},
    {"type": "group_equal", "vars": ["a", "b"]},
    {"type": "sign_coherence", "vars": ["a", "b"]},
    {"type": "pairwise_sign_coherence", "rho": 0.8},
    {"type": "fairness", "sensitive": ["w"], "c": [0.1]}
  ])");
  const auto specs = constraints_from_json(j);
  REQUIRE(specs.size() == 13);
  CHECK(std::get<KMax>(specs[0]).k == 2);
  CHECK(std::get<RhoMax>(specs[2]).exclude ==
        std::vector<std::string>{"(Intercept)"});
  CHECK(std::get<RhoMax>(specs[2]).method == "pearson");
  CHECK(std::get<LinearConstraint>(specs[8]).on_big_m);
  CHECK_THROWS_AS(constraints_from_json(nlohmann::json::parse(
                      R"([{"type": "nope"}])")),
                  InputError);
}
