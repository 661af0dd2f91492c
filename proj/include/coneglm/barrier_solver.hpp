#pragma once

// Primal barrier path-following method for conic programs over the
// nonnegative, second-order and primal exponential cones, with affine
// equality rows handled through the KKT system. A cone-shifted phase I
// produces the strictly feasible start; a presolve pass substitutes fixed
// variables and turns singleton rows into bounds so that branch-and-bound
// bound-fixings never empty the interior.

#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <vector>

#ifdef CONEGLM_SOLVER_TRACE
#include <cstdio>
#define CONEGLM_TRACE(...) std::fprintf(stderr, __VA_ARGS__)
#else
#define CONEGLM_TRACE(...) ((void)0)
#endif

#include "coneglm/program.hpp"
#include "coneglm/solution.hpp"

namespace coneglm {

struct SolverConfig {
  double gap_abs = 1e-11;      // stop when nu/t <= gap_abs + gap_rel*|obj|
  double gap_rel = 1e-11;
  double t_mu = 10.0;          // initial barrier growth factor (adapted)
  int max_newton = 4000;       // total Newton iterations across stages
  double center_tol = 0.50;    // Newton decrement target between stages
  double final_center_tol = 1e-8;
  double infeas_tol = 1e-8;    // phase I tau above this => infeasible
  double unbounded_obj = 1e13;
  double unbounded_var = 1e10;
};

namespace presolve_detail {

struct Presolved {
  // reduced standard form over free variables w:
  //   minimize c.w  s.t.  E w + f = 0,  G w + h in K (blocks)
  Index n_free = 0;
  Vector c;
  SparseMatrix E;
  Vector f;
  SparseMatrix G;
  Vector h;
  std::vector<Cone> cones;  // cones for consecutive row ranges of G
  double obj_offset = 0.0;
  std::vector<Index> free_to_orig;
  Vector fixed_values;  // full-length; entries for free vars unused
  std::vector<bool> is_fixed;
  bool infeasible = false;
  std::string note;

  Vector expand(const Vector& w) const {
    Vector v = fixed_values;
    for (Index k = 0; k < n_free; ++k) v[free_to_orig[k]] = w[k];
    return v;
  }
};

// Substitute fixed variables, convert singleton inequality/equality rows to
// bounds/fixings, and re-express remaining finite bounds as nonnegative rows.
inline Presolved presolve(const ConicProgram& p) {
  Presolved out;
  const Index nv = p.num_vars;
  Vector lo = p.lower, hi = p.upper;
  std::vector<bool> fixed(nv, false);
  Vector fixval = Vector::Zero(nv);
  const double ftol = 1e-9;

  // rows we still carry: (block, row) for nonneg/zero rows not absorbed
  struct Row {
    std::vector<std::pair<Index, double>> entries;
    double offset;
    bool equality;
    bool alive = true;
  };
  std::vector<Row> lin_rows;
  for (const auto& blk : p.blocks) {
    if (blk.cone.kind != ConeKind::nonnegative && blk.cone.kind != ConeKind::zero)
      continue;
    Matrix dense(blk.A);
    for (Index r = 0; r < blk.cone.dim; ++r) {
      Row row;
      row.offset = blk.b[r];
      row.equality = blk.cone.kind == ConeKind::zero;
      for (Index j = 0; j < nv; ++j)
        if (dense(r, j) != 0.0) row.entries.push_back({j, dense(r, j)});
      lin_rows.push_back(std::move(row));
    }
  }

  auto fix_variable = [&](Index j, double val) {
    if (fixed[j]) {
      if (std::abs(fixval[j] - val) > ftol * (1.0 + std::abs(val)))
        out.infeasible = true;
      return;
    }
    if (val < lo[j] - ftol || val > hi[j] + ftol) out.infeasible = true;
    fixed[j] = true;
    fixval[j] = val;
  };

  for (Index j = 0; j < nv; ++j) {
    if (lo[j] > hi[j] + ftol) out.infeasible = true;
    else if (lo[j] >= hi[j] - 0.0 && std::isfinite(lo[j]) && lo[j] == hi[j])
      fix_variable(j, lo[j]);
  }

  bool changed = true;
  while (changed && !out.infeasible) {
    changed = false;
    for (auto& row : lin_rows) {
      if (!row.alive) continue;
      double cst = row.offset;
      Index live_var = -1;
      double live_coef = 0.0;
      int live_count = 0;
      for (auto& [j, c] : row.entries) {
        if (fixed[j]) {
          cst += c * fixval[j];
        } else {
          ++live_count;
          live_var = j;
          live_coef = c;
        }
      }
      if (live_count >= 2 && !row.equality) {
        // range of the row over the current bounds; a row that can only be
        // satisfied at its maximum forces every member to its extreme bound
        double hi_val = cst, lo_val = cst;
        for (auto& [j, c] : row.entries) {
          if (fixed[j]) continue;
          hi_val += c > 0 ? c * hi[j] : c * lo[j];
          lo_val += c > 0 ? c * lo[j] : c * hi[j];
        }
        if (std::isfinite(hi_val) && hi_val < -1e-9) {
          out.infeasible = true;
          break;
        }
        if (std::isfinite(hi_val) && hi_val <= 1e-9) {
          for (auto& [j, c] : row.entries)
            if (!fixed[j]) fix_variable(j, c > 0 ? hi[j] : lo[j]);
          row.alive = false;
          changed = true;
          continue;
        }
        if (lo_val >= 1e-9) {  // redundant at any feasible point
          row.alive = false;
          changed = true;
          continue;
        }
      }
      if (live_count == 0) {
        row.alive = false;
        changed = true;
        if (row.equality ? std::abs(cst) > 1e-7 : cst < -1e-7)
          out.infeasible = true;
      } else if (live_count == 1) {
        row.alive = false;
        changed = true;
        if (row.equality) {
          fix_variable(live_var, -cst / live_coef);
        } else {
          // live_coef * v + cst >= 0
          const double bnd = -cst / live_coef;
          if (live_coef > 0) lo[live_var] = std::max(lo[live_var], bnd);
          else hi[live_var] = std::min(hi[live_var], bnd);
        }
        if (lo[live_var] > hi[live_var] + ftol) out.infeasible = true;
        else if (std::isfinite(lo[live_var]) && lo[live_var] == hi[live_var])
          fix_variable(live_var, lo[live_var]);
        else if (hi[live_var] - lo[live_var] <= ftol &&
                 std::isfinite(lo[live_var]) && std::isfinite(hi[live_var]))
          fix_variable(live_var, 0.5 * (lo[live_var] + hi[live_var]));
      }
    }
  }
  if (out.infeasible) return out;

  out.is_fixed = fixed;
  out.fixed_values = fixval;
  std::vector<Index> old_to_new(nv, -1);
  for (Index j = 0; j < nv; ++j) {
    if (!fixed[j]) {
      old_to_new[j] = out.n_free;
      out.free_to_orig.push_back(j);
      ++out.n_free;
    }
  }
  out.c = Vector::Zero(out.n_free);
  for (Index j = 0; j < nv; ++j) {
    if (fixed[j]) out.obj_offset += p.objective[j] * fixval[j];
    else out.c[old_to_new[j]] = p.objective[j];
  }

  std::vector<Triplet> Et, Gt;
  std::vector<double> fvals, hvals;
  auto flush_rows = [&](bool equality) {
    for (const auto& row : lin_rows) {
      if (!row.alive || row.equality != equality) continue;
      double cst = row.offset;
      std::vector<std::pair<Index, double>> live;
      for (auto& [j, c] : row.entries) {
        if (fixed[j]) cst += c * fixval[j];
        else live.push_back({old_to_new[j], c});
      }
      if (equality) {
        double scale = 0.0;
        for (auto& [j, c] : live) scale = std::max(scale, std::abs(c));
        if (scale <= 0.0) scale = 1.0;
        const Index r = static_cast<Index>(fvals.size());
        for (auto& [j, c] : live)
          Et.emplace_back(static_cast<int>(r), static_cast<int>(j), c / scale);
        fvals.push_back(cst / scale);
      } else {
        const Index r = static_cast<Index>(hvals.size());
        for (auto& [j, c] : live) Gt.emplace_back(static_cast<int>(r), static_cast<int>(j), c);
        hvals.push_back(cst);
        out.cones.push_back(Cone::Nonnegative(1));
      }
    }
  };
  flush_rows(false);

  // soc / exp blocks with substitution
  for (const auto& blk : p.blocks) {
    if (blk.cone.kind == ConeKind::nonnegative || blk.cone.kind == ConeKind::zero)
      continue;
    const Index base = static_cast<Index>(hvals.size());
    for (Index r = 0; r < blk.cone.dim; ++r) hvals.push_back(blk.b[r]);
    for (int k = 0; k < blk.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(blk.A, k); it; ++it) {
        const Index j = it.col();
        if (fixed[j]) hvals[base + it.row()] += it.value() * fixval[j];
        else Gt.emplace_back(static_cast<int>(base + it.row()),
                             static_cast<int>(old_to_new[j]), it.value());
      }
    }
    out.cones.push_back(blk.cone);
  }

  // remaining finite bounds become nonnegative rows
  for (Index j = 0; j < nv; ++j) {
    if (fixed[j]) continue;
    const Index w = old_to_new[j];
    if (std::isfinite(lo[j])) {
      const Index r = static_cast<Index>(hvals.size());
      Gt.emplace_back(static_cast<int>(r), static_cast<int>(w), 1.0);
      hvals.push_back(-lo[j]);
      out.cones.push_back(Cone::Nonnegative(1));
    }
    if (std::isfinite(hi[j])) {
      const Index r = static_cast<Index>(hvals.size());
      Gt.emplace_back(static_cast<int>(r), static_cast<int>(w), -1.0);
      hvals.push_back(hi[j]);
      out.cones.push_back(Cone::Nonnegative(1));
    }
  }

  flush_rows(true);  // equality rows -> E (after all G rows counted)
  out.E = SparseMatrix(static_cast<Index>(fvals.size()), out.n_free);
  out.E.setFromTriplets(Et.begin(), Et.end());
  out.f = Eigen::Map<const Vector>(fvals.data(), static_cast<Index>(fvals.size()));
  out.G = SparseMatrix(static_cast<Index>(hvals.size()), out.n_free);
  out.G.setFromTriplets(Gt.begin(), Gt.end());
  out.h = Eigen::Map<const Vector>(hvals.data(), static_cast<Index>(hvals.size()));
  return out;
}

}  // namespace presolve_detail

template <typename Scalar>
class BarrierSolver {
 public:
  using SpMat = Eigen::SparseMatrix<Scalar>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BarrierSolver(SolverConfig cfg = {}) : cfg_(cfg) {}

  Solution solve(const ConicProgram& program,
                 const Vector* warm_start = nullptr) const {
    auto pre = presolve_detail::presolve(program);
    Solution sol;
    if (pre.infeasible) {
      sol.status = SolveStatus::infeasible;
      return sol;
    }
    if (pre.n_free == 0) {
      // everything fixed by presolve; feasibility already checked row-wise
      Vector v = pre.fixed_values;
      const auto rep = feasibility_report(program, v);
      sol.status = rep.max_violation <= 1e-7 ? SolveStatus::optimal
                                             : SolveStatus::infeasible;
      if (sol.status == SolveStatus::optimal) {
        sol.primal = v;
        sol.objective_value = program.objective.dot(v);
      }
      return sol;
    }

    Work w(pre, cfg_);
    Vec v;
    if (warm_start && warm_start->size() == program.num_vars) {
      v.resize(pre.n_free);
      for (Index k = 0; k < pre.n_free; ++k)
        v[k] = static_cast<Scalar>((*warm_start)[pre.free_to_orig[k]]);
      v = w.project_equalities(v);
    } else {
      v = w.initial_point();
    }
    int iters = 0;

    if (!w.interior(w.slack(v))) {
      const auto ph1 = w.phase1(v, iters);
      if (ph1 != SolveStatus::optimal) {
        sol.status = ph1;
        sol.iterations = iters;
        return sol;
      }
    }

    const SolveStatus st = w.path_follow(v, iters);
    sol.iterations = iters;
    sol.status = st;
    if (st == SolveStatus::optimal || st == SolveStatus::iteration_limit) {
      Vec vfull = v;
      Vector vd(pre.n_free);
      for (Index i = 0; i < pre.n_free; ++i) vd[i] = static_cast<double>(vfull[i]);
      sol.primal = pre.expand(vd);
      sol.objective_value = program.objective.dot(sol.primal);
    }
    return sol;
  }

 private:
  SolverConfig cfg_;

  struct Work {
    const SolverConfig& cfg;
    std::vector<Cone> cones;
    SpMat G, E;
    Vec c, h, f;
    Index n, m, me;
    double nu;  // total barrier parameter

    Work(const presolve_detail::Presolved& pr, const SolverConfig& cf)
        : cfg(cf), cones(pr.cones) {
      n = pr.n_free;
      G = pr.G.template cast<Scalar>();
      E = pr.E.template cast<Scalar>();
      c = pr.c.template cast<Scalar>();
      h = pr.h.template cast<Scalar>();
      f = pr.f.template cast<Scalar>();
      m = G.rows();
      me = E.rows();
      nu = 0.0;
      for (const auto& k : cones) {
        switch (k.kind) {
          case ConeKind::nonnegative: nu += static_cast<double>(k.dim); break;
          case ConeKind::second_order: nu += 2.0; break;
          case ConeKind::exponential_primal: nu += 3.0; break;
          case ConeKind::zero: break;
        }
      }
    }

    Vec slack(const Vec& v) const { return G * v + h; }

    // minimum-norm solution of E v + f = 0
    Vec initial_point() const {
      if (me == 0) return Vec::Zero(n);
      SpMat EEt = (E * SpMat(E.transpose())).pruned();
      for (Index i = 0; i < me; ++i) EEt.coeffRef(i, i) += Scalar(1e-12);
      Eigen::SimplicialLDLT<SpMat> ldlt(EEt);
      Vec w = ldlt.solve(-f);
      return SpMat(E.transpose()) * w;
    }

    // least-change correction of v onto E v + f = 0
    Vec project_equalities(const Vec& v) const {
      if (me == 0) return v;
      SpMat EEt = (E * SpMat(E.transpose())).pruned();
      for (Index i = 0; i < me; ++i) EEt.coeffRef(i, i) += Scalar(1e-12);
      Eigen::SimplicialLDLT<SpMat> ldlt(EEt);
      Vec w = ldlt.solve(-(E * v + f));
      return v + SpMat(E.transpose()) * w;
    }

    // damped line searches let the equality residual decay only
    // geometrically; snap back when the projected point stays interior
    void reproject(Vec& v) const {
      if (me == 0) return;
      const Vec vp = project_equalities(v);
      if (interior(slack(vp))) v = vp;
    }

    bool interior(const Vec& s, Scalar margin = Scalar(0)) const {
      Index r = 0;
      for (const auto& k : cones) {
        switch (k.kind) {
          case ConeKind::nonnegative:
            for (Index i = 0; i < k.dim; ++i)
              if (s[r + i] <= margin) return false;
            break;
          case ConeKind::second_order: {
            const Scalar t = s[r];
            Scalar nx = 0;
            for (Index i = 1; i < k.dim; ++i) nx += s[r + i] * s[r + i];
            using std::sqrt;
            if (t <= margin || sqrt(nx) >= t - margin) return false;
            break;
          }
          case ConeKind::exponential_primal: {
            const Scalar x = s[r], y = s[r + 1], z = s[r + 2];
            using std::log;
            if (y <= margin || z <= margin) return false;
            if (y * log(z / y) - x <= margin) return false;
            break;
          }
          case ConeKind::zero:
            break;
        }
        r += k.dim;
      }
      return true;
    }

    // barrier value, gradient in slack space, and block Hessians as triplets
    Scalar barrier(const Vec& s, Vec* grad, std::vector<Eigen::Triplet<Scalar>>* W) const {
      using std::log;
      Scalar val = 0;
      if (grad) grad->setZero(m);
      Index r = 0;
      for (const auto& k : cones) {
        switch (k.kind) {
          case ConeKind::nonnegative: {
            for (Index i = 0; i < k.dim; ++i) {
              const Scalar si = s[r + i];
              val -= log(si);
              if (grad) (*grad)[r + i] = -Scalar(1) / si;
              if (W) W->emplace_back(static_cast<int>(r + i), static_cast<int>(r + i),
                                     Scalar(1) / (si * si));
            }
            break;
          }
          case ConeKind::second_order: {
            const Index d = k.dim;
            Scalar nx2 = 0;
            for (Index i = 1; i < d; ++i) nx2 += s[r + i] * s[r + i];
            const Scalar t = s[r];
            const Scalar u = t * t - nx2;
            val -= log(u);
            // grad = -grad(u)/u, hess = grad(u) grad(u)'/u^2 - hess(u)/u
            if (grad) {
              (*grad)[r] = -Scalar(2) * t / u;
              for (Index i = 1; i < d; ++i) (*grad)[r + i] = Scalar(2) * s[r + i] / u;
            }
            if (W) {
              Vec gu(d);
              gu[0] = Scalar(2) * t;
              for (Index i = 1; i < d; ++i) gu[i] = -Scalar(2) * s[r + i];
              const Scalar iu2 = Scalar(1) / (u * u);
              for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < d; ++j) {
                  Scalar v = gu[i] * gu[j] * iu2;
                  if (i == j) v += (i == 0 ? -Scalar(2) : Scalar(2)) / u;
                  if (v != Scalar(0))
                    W->emplace_back(static_cast<int>(r + i), static_cast<int>(r + j), v);
                }
            }
            break;
          }
          case ConeKind::exponential_primal: {
            const Scalar x = s[r], y = s[r + 1], z = s[r + 2];
            const Scalar lzy = log(z / y);
            const Scalar psi = y * lzy - x;
            val -= log(psi) + log(y) + log(z);
            const Scalar gpsi[3] = {Scalar(-1), lzy - Scalar(1), y / z};
            if (grad) {
              (*grad)[r] = -gpsi[0] / psi;
              (*grad)[r + 1] = -gpsi[1] / psi - Scalar(1) / y;
              (*grad)[r + 2] = -gpsi[2] / psi - Scalar(1) / z;
            }
            if (W) {
              // hess = gpsi gpsi'/psi^2 - hess(psi)/psi + diag(0, 1/y^2, 1/z^2)
              Scalar Hm[3][3];
              const Scalar ip2 = Scalar(1) / (psi * psi);
              for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) Hm[i][j] = gpsi[i] * gpsi[j] * ip2;
              Hm[1][1] += (Scalar(1) / y) / psi + Scalar(1) / (y * y);
              Hm[1][2] -= (Scalar(1) / z) / psi;
              Hm[2][1] -= (Scalar(1) / z) / psi;
              Hm[2][2] += (y / (z * z)) / psi + Scalar(1) / (z * z);
              for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                  if (Hm[i][j] != Scalar(0))
                    W->emplace_back(static_cast<int>(r + i), static_cast<int>(r + j), Hm[i][j]);
            }
            break;
          }
          case ConeKind::zero:
            break;
        }
        r += k.dim;
      }
      return val;
    }

    // largest step <= cap keeping s + alpha*ds strictly interior
    Scalar max_step(const Vec& s, const Vec& ds, Scalar cap) const {
      using std::sqrt;
      Scalar alpha = cap;
      Index r = 0;
      for (const auto& k : cones) {
        switch (k.kind) {
          case ConeKind::nonnegative:
            for (Index i = 0; i < k.dim; ++i)
              if (ds[r + i] < 0) alpha = std::min(alpha, -s[r + i] / ds[r + i]);
            break;
          case ConeKind::second_order: {
            // (t+a dt)^2 - |x+a dx|^2 > 0
            const Index d = k.dim;
            Scalar qa = ds[r] * ds[r], qb = s[r] * ds[r], qc = s[r] * s[r];
            for (Index i = 1; i < d; ++i) {
              qa -= ds[r + i] * ds[r + i];
              qb -= s[r + i] * ds[r + i];
              qc -= s[r + i] * s[r + i];
            }
            // roots of qa a^2 + 2 qb a + qc = 0; qc > 0 at interior point
            const Scalar disc = qb * qb - qa * qc;
            if (disc >= 0) {
              const Scalar sq = sqrt(disc);
              for (const Scalar root : {(-qb + sq), (-qb - sq)}) {
                if (qa != Scalar(0)) {
                  const Scalar a = root / qa;
                  if (a > 0 && s[r] + a * ds[r] > 0) alpha = std::min(alpha, a);
                }
              }
              if (qa == Scalar(0) && qb < 0) alpha = std::min(alpha, -qc / (Scalar(2) * qb));
            }
            if (ds[r] < 0) alpha = std::min(alpha, -s[r] / ds[r]);
            break;
          }
          case ConeKind::exponential_primal:
            // no closed form; handled by backtracking below
            for (Index i = 1; i < 3; ++i)
              if (ds[r + i] < 0) alpha = std::min(alpha, -s[r + i] / ds[r + i]);
            break;
          case ConeKind::zero:
            break;
        }
        r += k.dim;
      }
      return alpha;
    }

    struct KKT {
      Eigen::SimplicialLDLT<SpMat> ldlt;
      SpMat K;
      bool analyzed = false;
    };

    // assemble and solve [H + dI, E'; E, -dI] [dv; w] = [-g; -(Ev+f)]
    bool newton_step(KKT& kkt, const Vec& v, const Vec& s, Scalar t, Vec& dv,
                     Scalar& lambda2, Scalar reg) const {
      Vec grad_s(m);
      std::vector<Eigen::Triplet<Scalar>> Wt;
      barrier(s, &grad_s, &Wt);
      SpMat W(m, m);
      W.setFromTriplets(Wt.begin(), Wt.end());
      SpMat H = SpMat(G.transpose()) * W * G;
      Vec g = t * c + SpMat(G.transpose()) * grad_s;

      // per-coordinate static regularization: scale-aware without letting a
      // single boundary-hugging slack flatten every other direction
      const Index dim = n + me;
      std::vector<Eigen::Triplet<Scalar>> Kt;
      Kt.reserve(H.nonZeros() + 2 * E.nonZeros() + dim);
      for (int k = 0; k < H.outerSize(); ++k)
        for (typename SpMat::InnerIterator it(H, k); it; ++it)
          Kt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      for (Index i = 0; i < n; ++i)
        Kt.emplace_back(static_cast<int>(i), static_cast<int>(i),
                        reg * (Scalar(1) + std::abs(H.coeff(i, i))));
      for (int k = 0; k < E.outerSize(); ++k)
        for (typename SpMat::InnerIterator it(E, k); it; ++it) {
          Kt.emplace_back(static_cast<int>(n + it.row()), static_cast<int>(it.col()), it.value());
          Kt.emplace_back(static_cast<int>(it.col()), static_cast<int>(n + it.row()), it.value());
        }
      for (Index i = 0; i < me; ++i)
        Kt.emplace_back(static_cast<int>(n + i), static_cast<int>(n + i),
                        Scalar(-1e-13));
      SpMat K(dim, dim);
      K.setFromTriplets(Kt.begin(), Kt.end());

      Vec rhs(dim);
      rhs.head(n) = -g;
      if (me > 0) rhs.tail(me) = -(E * v + f);

      if (!kkt.analyzed) {
        kkt.ldlt.analyzePattern(K);
        kkt.analyzed = true;
      }
      kkt.ldlt.factorize(K);
      if (kkt.ldlt.info() != Eigen::Success) {
        CONEGLM_TRACE("newton_step: factorization failed\n");
        return false;
      }
      Vec x = kkt.ldlt.solve(rhs);
      for (int refine = 0; refine < 2; ++refine) {
        Vec res = rhs - K * x;
        x += kkt.ldlt.solve(res);
      }
      dv = x.head(n);
      // an inaccurate or non-descent solve must trigger re-regularization,
      // never masquerade as convergence
      const Scalar res_norm = (rhs - K * x).cwiseAbs().maxCoeff();
      const Scalar rhs_norm = std::max(Scalar(1), rhs.cwiseAbs().maxCoeff());
      if (!(res_norm <= Scalar(1e-6) * rhs_norm)) return false;
      const Scalar descent = -g.dot(dv);
      if (!(descent >= Scalar(0))) return false;
      lambda2 = descent;
#ifdef CONEGLM_SOLVER_TRACE
      {
        Vec res = rhs - K * x;
        Scalar edv = me > 0 ? (E * dv).cwiseAbs().maxCoeff() : Scalar(0);
        CONEGLM_TRACE("    kkt res=%.2e Edv=%.2e |dv|=%.2e\n",
                      (double)(res.cwiseAbs().maxCoeff() /
                               std::max(Scalar(1), rhs.cwiseAbs().maxCoeff())),
                      (double)edv, (double)dv.cwiseAbs().maxCoeff());
      }
#endif
      return dv.allFinite();
    }

    // t0 minimizing the initial Newton decrement |t c + grad|^2 in the
    // KKT metric; one extra factorization, saves many damped steps
    double pick_t0(KKT& kkt, const Vec& v, double fallback) const {
      Vec s = slack(v);
      Vec dc(n), dphi(n);
      Scalar l2 = 0;
      // reuse newton_step with t = 0 to get dphi = -K^{-1} grad, then solve
      // for the objective direction against the same factorization
      if (!newton_step(kkt, v, s, Scalar(0), dphi, l2, Scalar(1e-13)))
        return fallback;
      {
        const Index dim = n + me;
        Vec rhs = Vec::Zero(dim);
        rhs.head(n) = -c;
        Vec x = kkt.ldlt.solve(rhs);
        dc = x.head(n);
      }
      const double a = -static_cast<double>(c.dot(dc));   // c' K^-1 c
      const double b = -static_cast<double>(c.dot(dphi)); // c' K^-1 grad
      if (!(a > 0.0)) return fallback;
      const double t0 = -b / a;
      if (!(t0 > 0.0) || !std::isfinite(t0)) return fallback;
      return t0;
    }

    // centering Newton iterations at fixed t; returns false on numeric failure
    bool center(KKT& kkt, Vec& v, Scalar t, Scalar ctol, int& iters,
                int iter_budget,
                const std::function<bool(const Vec&)>& stop_early) const {
      auto merit = [&](const Vec& vv, const Vec& ss) {
        return t * c.dot(vv) + barrier(ss, nullptr, nullptr);
      };
      Scalar reg = Scalar(1e-12);
      Scalar last_lambda = std::numeric_limits<Scalar>::infinity();
      int stagnant = 0;
      for (int it = 0; it < iter_budget; ++it) {
        if (iters >= cfg.max_newton) return true;
        Vec s = slack(v);
        Vec dv(n);
        Scalar lambda2 = 0;
        bool ok = newton_step(kkt, v, s, t, dv, lambda2, reg);
        if (!ok) {
          reg *= Scalar(100);
          CONEGLM_TRACE("center: newton_step failed, reg -> %g\n", (double)reg);
          if (reg > Scalar(1e3)) return false;
          continue;
        }
        ++iters;
        using std::sqrt;
        const Scalar lambda = sqrt(lambda2);
        CONEGLM_TRACE("  center it=%d t=%.3g lambda=%.3g\n", it, (double)t, (double)lambda);
        if (lambda <= ctol) return true;
        // numerical noise floor: a small decrement that stops contracting
        if (lambda < Scalar(1e-2) && lambda >= Scalar(0.95) * last_lambda) {
          if (++stagnant >= 4) return true;
        } else {
          stagnant = 0;
        }
        last_lambda = lambda;
        // long-step line search: start near the boundary and backtrack with
        // a curvature-discounted Armijo test; the damped step 1/(1+lambda)
        // is the safe floor
        const Vec ds = G * dv;
        Scalar alpha = std::min(Scalar(1), Scalar(0.99) * max_step(s, ds, Scalar(2)));
        while (alpha > Scalar(1e-14) && !interior(s + alpha * ds))
          alpha *= Scalar(0.8);
        if (alpha <= Scalar(1e-14)) {
          CONEGLM_TRACE("center: stuck at boundary (t=%g)\n", (double)t);
          return true;
        }
        const Scalar alpha_damped = Scalar(1) / (Scalar(1) + lambda);
        const Scalar F0 = merit(v, s);
        int bt = 0;
        bool accepted = false;
        while (bt < 80) {
          Vec sn = s + alpha * ds;
          if (interior(sn)) {
            const Scalar Fn = merit(v + alpha * dv, sn);
            const Scalar want_decrease =
                Scalar(0.1) * alpha * lambda2 / (Scalar(1) + alpha * lambda);
            if (Fn <= F0 - want_decrease ||
                Fn <= F0 + Scalar(3e-17) * (Scalar(1) + std::abs(F0))) {
              accepted = true;
              break;
            }
          }
          if (alpha > alpha_damped && alpha * Scalar(0.5) < alpha_damped)
            alpha = alpha_damped;  // make sure the safe step is tried
          else
            alpha *= Scalar(0.5);
          ++bt;
        }
        if (!accepted) {
          CONEGLM_TRACE("center: backtracking exhausted (t=%g, lambda2=%g)\n", (double)t, (double)lambda2);
          return true;
        }
        CONEGLM_TRACE("    alpha=%.3g bt=%d\n", (double)alpha, bt);
        v += alpha * dv;
        reg = std::max(reg / Scalar(10), Scalar(1e-12));
        if (stop_early && stop_early(v)) return true;
      }
      return true;
    }

    // phase I: minimize tau s.t. G v + h + tau r in K, E v + f = 0
    SolveStatus phase1(Vec& v, int& iters) const {
      if (me > 0) {
        const Vec res = E * v + f;
        if (res.cwiseAbs().maxCoeff() > Scalar(1e-6))
          return SolveStatus::infeasible;  // inconsistent equalities
      }
      Vec r(m);
      {
        Index row = 0;
        for (const auto& k : cones) {
          switch (k.kind) {
            case ConeKind::nonnegative:
              for (Index i = 0; i < k.dim; ++i) r[row + i] = Scalar(1);
              break;
            case ConeKind::second_order:
              r.segment(row, k.dim).setZero();
              r[row] = Scalar(1);
              break;
            case ConeKind::exponential_primal:
              r[row] = Scalar(0);
              r[row + 1] = Scalar(1);
              r[row + 2] = Scalar(2);
              break;
            case ConeKind::zero:
              break;
          }
          row += k.dim;
        }
      }
      // extended problem over (v, tau)
      presolve_detail::Presolved ext_pre;
      ext_pre.n_free = n + 1;
      ext_pre.cones = cones;
      Work ext(ext_pre, cfg);
      ext.n = n + 1;
      ext.m = m;
      ext.me = me;
      ext.nu = nu;
      ext.c = Vec::Zero(n + 1);
      ext.c[n] = Scalar(1);
      ext.h = h;
      ext.f = f;
      {
        std::vector<Eigen::Triplet<Scalar>> t;
        for (int k = 0; k < G.outerSize(); ++k)
          for (typename SpMat::InnerIterator it(G, k); it; ++it)
            t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (Index i = 0; i < m; ++i)
          if (r[i] != Scalar(0)) t.emplace_back(static_cast<int>(i), static_cast<int>(n), r[i]);
        ext.G = SpMat(m, n + 1);
        ext.G.setFromTriplets(t.begin(), t.end());
      }
      {
        std::vector<Eigen::Triplet<Scalar>> t;
        for (int k = 0; k < E.outerSize(); ++k)
          for (typename SpMat::InnerIterator it(E, k); it; ++it)
            t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        ext.E = SpMat(me, n + 1);
        ext.E.setFromTriplets(t.begin(), t.end());
      }

      // find tau making the start strictly interior
      Vec s0 = slack(v);
      Scalar tau = Scalar(1);
      Vec vx(n + 1);
      vx.head(n) = v;
      for (int doubling = 0; doubling < 200; ++doubling) {
        if (ext.interior(s0 + tau * r)) break;
        tau *= Scalar(2);
        if (doubling == 199) return SolveStatus::numeric_error;
      }
      tau *= Scalar(1.1);
      tau += Scalar(1);
      const Scalar tau0 = tau;
      vx[n] = tau;

      const Scalar want = -Scalar(1e-7) * std::max(Scalar(1), tau0);
      auto early = [&](const Vec& cur) {
        if (cur[n] >= Scalar(0)) return false;
        // deep negative tau guarantees healthy slack along the shift ray
        if (cur[n] <= -Scalar(0.05) * std::max(Scalar(1), tau0)) return true;
        // otherwise require real margin so phase II does not start glued to
        // a cone boundary
        const Vec s = slack(cur.head(n));
        const Scalar margin =
            Scalar(1e-6) * (Scalar(1) + s.cwiseAbs().maxCoeff());
        return interior(s, margin);
      };
      (void)want;

      // The tau-descent alone is unbounded below along slack-growing rays
      // (the barrier decreases forever as slacks grow), so phase I runs
      // inside a large box around the start. A positive tau inside the box
      // proves nothing about the unboxed problem; widen once before
      // concluding infeasibility.
      double radius = 1e2 * (1.0 + static_cast<double>(vx.cwiseAbs().maxCoeff()) +
                             static_cast<double>(tau0));
      const Vec vx0 = vx;
      for (int attempt = 0; attempt < 2; ++attempt, radius *= 1e4) {
        vx = vx0;
        Work boxed(ext_pre, cfg);
        boxed.n = n + 1;
        boxed.me = me;
        boxed.c = ext.c;
        boxed.f = ext.f;
        boxed.E = ext.E;
        // box rows v_i in [v0_i - R, v0_i + R] and tau <= tau0 + 1
        const Index extra = 2 * n + 1;
        boxed.m = m + extra;
        boxed.nu = nu + static_cast<double>(extra);
        {
          std::vector<Eigen::Triplet<Scalar>> tg;
          for (int k = 0; k < ext.G.outerSize(); ++k)
            for (typename SpMat::InnerIterator it(ext.G, k); it; ++it)
              tg.emplace_back(static_cast<int>(it.row()),
                              static_cast<int>(it.col()), it.value());
          Vec hh(m + extra);
          hh.head(m) = ext.h;
          for (Index i = 0; i < n; ++i) {
            tg.emplace_back(static_cast<int>(m + 2 * i), static_cast<int>(i), Scalar(1));
            hh[m + 2 * i] = Scalar(radius) - vx0[i];
            tg.emplace_back(static_cast<int>(m + 2 * i + 1), static_cast<int>(i), Scalar(-1));
            hh[m + 2 * i + 1] = Scalar(radius) + vx0[i];
          }
          tg.emplace_back(static_cast<int>(m + 2 * n), static_cast<int>(n), Scalar(-1));
          hh[m + 2 * n] = tau0 + Scalar(1);
          boxed.G = SpMat(m + extra, n + 1);
          boxed.G.setFromTriplets(tg.begin(), tg.end());
          boxed.h = hh;
          boxed.cones = ext.cones;
          for (Index i = 0; i < extra; ++i)
            boxed.cones.push_back(Cone::Nonnegative(1));
        }

        typename Work::KKT kkt;
        Scalar t = Scalar(std::clamp(
            boxed.pick_t0(kkt, vx, boxed.nu / static_cast<double>(tau0)), 1e-8,
            1e8));
        double mu = cfg.t_mu;
        for (int stage = 0; stage < 200; ++stage) {
          CONEGLM_TRACE("phase1 stage %d: t=%g tau=%g iters=%d\n", stage, (double)t, (double)vx[n], iters);
          const int iters_before = iters;
          if (!boxed.center(kkt, vx, t, Scalar(cfg.center_tol), iters, 200,
                            early))
            return SolveStatus::numeric_error;
          if (early(vx)) break;
          const double gap = boxed.nu / static_cast<double>(t);
          if (static_cast<double>(vx[n]) - 2.0 * gap > cfg.infeas_tol) break;
          if (iters >= cfg.max_newton) break;
          if (gap <= 1e-9 * (1.0 + std::abs(static_cast<double>(vx[n]))))
            break;
          const int spent = iters - iters_before;
          if (spent <= 4) mu = std::min(mu * 2.0, 100.0);
          else if (spent > 12) mu = std::max(mu * 0.6, 5.0);
          t *= Scalar(mu);
        }
        if (early(vx)) {
          v = vx.head(n);
          return SolveStatus::optimal;
        }
        if (iters >= cfg.max_newton) return SolveStatus::iteration_limit;
      }
      return SolveStatus::infeasible;
    }

    SolveStatus path_follow(Vec& v, int& iters) const {
      typename Work::KKT kkt;
      const Scalar obj0 = c.dot(v);
      const Scalar vnorm0 = v.cwiseAbs().maxCoeff();
      if (c.cwiseAbs().maxCoeff() == Scalar(0)) return SolveStatus::optimal;
      double t = std::clamp(
          pick_t0(kkt, v, nu / (1.0 + std::abs(static_cast<double>(obj0)))),
          1e-8, 1e8);
      double mu = cfg.t_mu;
      bool done = false;
      int polish_rounds = 0;
      for (int stage = 0; stage < 400; ++stage) {
        const double gap = nu / t;
        done = gap <= cfg.gap_abs +
                         cfg.gap_rel * std::abs(static_cast<double>(c.dot(v)));
        const Scalar ctol = done ? Scalar(cfg.final_center_tol)
                                 : Scalar(cfg.center_tol);
        const int iters_before = iters;
        const Vec v_before = v;
        const bool centered =
            center(kkt, v, Scalar(t), ctol, iters, done ? 60 : 300, nullptr);
        if (!v.allFinite()) return SolveStatus::numeric_error;
        reproject(v);
        if (!centered && !done) return SolveStatus::numeric_error;
        CONEGLM_TRACE("stage %d: t=%.3g spent=%d obj=%.8g\n", stage, t, iters - iters_before, (double)c.dot(v));
        if (done) {
          // ill-conditioned problems still move at the nominal gap; keep
          // pushing t until the primal settles
          const Scalar moved = (v - v_before).cwiseAbs().maxCoeff();
          const Scalar scale = Scalar(1) + v.cwiseAbs().maxCoeff();
          if (moved <= Scalar(1e-9) * scale || polish_rounds >= 4 ||
              iters >= cfg.max_newton)
            return SolveStatus::optimal;
          ++polish_rounds;
          t *= 100.0;
          continue;
        }
        if (iters >= cfg.max_newton) return SolveStatus::iteration_limit;
        const Scalar obj = c.dot(v);
        if (static_cast<double>(obj) <
            -cfg.unbounded_obj * (1.0 + std::abs(static_cast<double>(obj0))))
          return SolveStatus::unbounded;
        if (static_cast<double>(v.cwiseAbs().maxCoeff()) >
            cfg.unbounded_var * (1.0 + static_cast<double>(vnorm0)))
          return SolveStatus::iteration_limit;
        // adapt the stage length to the observed centering cost
        const int spent = iters - iters_before;
        if (spent <= 4) mu = std::min(mu * 2.0, 100.0);
        else if (spent > 12) mu = std::max(mu * 0.6, 5.0);
        t *= mu;
      }
      return SolveStatus::iteration_limit;
    }
  };
};

}  // namespace coneglm
