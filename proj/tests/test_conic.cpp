#include <catch2/catch_amalgamated.hpp>

#include "coneglm/cones.hpp"
#include "coneglm/program.hpp"
#include "coneglm/program_json.hpp"
#include "coneglm/reformulate.hpp"
#include "support/fixtures.hpp"

using namespace coneglm;
using testsupport::caesarian_model;

TEST_CASE("cone membership") {
  Vector soc(4);
  soc << 1, 0, 0, 0;
  CHECK(cone_membership(soc, Cone::SecondOrder(4), 1e-9));

  Vector e1(3);
  e1 << 0, 1, 1;  // 1*e^0 = 1 <= 1, boundary
  CHECK(cone_membership(e1, Cone::ExponentialPrimal(), 1e-9));

  Vector e2(3);
  e2 << 1, 1, std::exp(1.0);
  CHECK(cone_membership(e2, Cone::ExponentialPrimal(), 1e-6));
  e2[2] -= 0.01;
  CHECK_FALSE(cone_membership(e2, Cone::ExponentialPrimal(), 1e-6));

  // boundary ray: y = 0, x <= 0, z >= 0
  Vector e3(3);
  e3 << -1, 0, 0.5;
  CHECK(cone_membership(e3, Cone::ExponentialPrimal(), 1e-9));
  e3[0] = 0.1;
  CHECK_FALSE(cone_membership(e3, Cone::ExponentialPrimal(), 1e-9));

  Vector wrong(2);
  CHECK_THROWS_AS(cone_membership(wrong, Cone::ExponentialPrimal(), 1e-9),
                  InputError);
}

TEST_CASE("cone constructors enforce dimensions") {
  CHECK_THROWS_AS(Cone::SecondOrder(1), InputError);
  CHECK_THROWS_AS(Cone::Nonnegative(0), InputError);
  CHECK(Cone::ExponentialPrimal().dim == 3);
}

TEST_CASE("Caesarian program validates with the documented shape") {
  const auto built = build_program(caesarian_model());
  const auto defects = validate(built.program);
  for (const auto& d : defects) INFO(d);
  CHECK(defects.empty());
  CHECK(built.program.num_vars == 18);
  CHECK(built.program.count_blocks(ConeKind::exponential_primal) == 14);
  CHECK(built.program.count_rows(ConeKind::exponential_primal) == 42);
  CHECK(built.program.count_blocks(ConeKind::nonnegative) == 1);
  CHECK(built.program.count_rows(ConeKind::nonnegative) == 7);
  CHECK(built.program.total_cone_rows() == 49);
}

TEST_CASE("validate reports defects") {
  ConicProgram empty;
  CHECK_FALSE(validate(empty).empty());

  ProgramBuilder pb(2);
  auto p = pb.take();
  // 2-row map into an exponential cone violates the dimension rule
  SparseMatrix A(2, 2);
  p.blocks.push_back(ConeBlock{A, Vector::Zero(2), {ConeKind::exponential_primal, 2}});
  CHECK_FALSE(validate(p).empty());

  ProgramBuilder pb2(2);
  pb2.mark_binary(0);
  auto p2 = pb2.take();
  p2.lower[0] = -0.5;  // binary with bounds outside [0, 1]
  CHECK_FALSE(validate(p2).empty());
}

TEST_CASE("feasibility_report") {
  ProgramBuilder pb(1);
  pb.add_row({{0, -1.0}}, 0.0, ConeKind::nonnegative);  // -x >= 0
  const auto p = pb.take();

  Vector zero(1);
  zero << 0.0;
  CHECK(feasibility_report(p, zero).max_violation == 0.0);

  Vector bad(1);
  bad << 0.5;  // violates x <= 0 by 0.5
  const auto rep = feasibility_report(p, bad);
  CHECK(rep.max_violation == Catch::Approx(0.5));
  CHECK(rep.violated_blocks(1e-6) == 1);

  Vector wrong(2);
  CHECK_THROWS_AS(feasibility_report(p, wrong), InputError);
}

TEST_CASE("violation count is monotone in the tolerance") {
  const auto built = build_program(caesarian_model());
  Vector pt = Vector::Constant(built.program.num_vars, 0.1);
  const auto rep = feasibility_report(built.program, pt);
  double tols[] = {1.0, 1e-2, 1e-4, 1e-6, 1e-8, 0.0};
  Index prev = -1;
  for (double tol : tols) {
    const Index c = rep.violated_blocks(tol);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("program JSON round-trip is exact") {
  const auto built = build_program(caesarian_model());
  ConicProgram p = built.program;
  p.binaries = {2, 3};
  p.lower[2] = 0.0;
  p.upper[2] = 1.0;
  p.lower[3] = 0.0;
  p.upper[3] = 1.0;
  p.lower[5] = -1.25;

  const auto j = to_json(p);
  const ConicProgram q = program_from_json(j);
  REQUIRE(q.num_vars == p.num_vars);
  CHECK(q.objective == p.objective);
  CHECK(q.lower == p.lower);
  CHECK(q.upper == p.upper);
  CHECK(q.binaries == p.binaries);
  CHECK(q.var_names == p.var_names);
  REQUIRE(q.blocks.size() == p.blocks.size());
  for (size_t k = 0; k < p.blocks.size(); ++k) {
    CHECK(q.blocks[k].cone.kind == p.blocks[k].cone.kind);
    CHECK(q.blocks[k].cone.dim == p.blocks[k].cone.dim);
    CHECK(q.blocks[k].b == p.blocks[k].b);
    CHECK(Matrix(q.blocks[k].A) == Matrix(p.blocks[k].A));
  }
  // and the round-trip of the round-trip serializes identically
  CHECK(to_json(q) == j);
}
