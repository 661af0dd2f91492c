#pragma once

#include <cmath>
#include <string>

#include "coneglm/types.hpp"

namespace coneglm {

enum class ConeKind {
  zero,               // {0}^dim, used for equality rows
  nonnegative,        // R+^dim
  second_order,       // {(t, x) : ||x||_2 <= t}
  exponential_primal  // closure of {(x, y, z) : y > 0, y*exp(x/y) <= z}
};

struct Cone {
  ConeKind kind;
  Index dim;

  static Cone Zero(Index d) { return {ConeKind::zero, check(d, 1, "zero")}; }
  static Cone Nonnegative(Index d) {
    return {ConeKind::nonnegative, check(d, 1, "nonnegative")};
  }
  static Cone SecondOrder(Index d) {
    return {ConeKind::second_order, check(d, 2, "second_order")};
  }
  static Cone ExponentialPrimal() { return {ConeKind::exponential_primal, 3}; }

 private:
  static Index check(Index d, Index min_d, const char* name) {
    if (d < min_d)
      throw InputError(std::string(name) + " cone dimension must be >= " +
                       std::to_string(min_d));
    return d;
  }
};

inline const char* cone_kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::zero: return "zero";
    case ConeKind::nonnegative: return "nonnegative";
    case ConeKind::second_order: return "second_order";
    case ConeKind::exponential_primal: return "exponential_primal";
  }
  return "?";
}

// Membership test within tolerance `tol`. The exponential cone uses the
// closure: (x, y, z) with y > 0 and y*exp(x/y) <= z + tol, or the boundary
// ray |y| <= tol, x <= tol, z >= -tol.
inline bool cone_membership(const Vector& point, const Cone& cone, double tol) {
  if (point.size() != cone.dim)
    throw InputError("cone_membership: point dimension " +
                     std::to_string(point.size()) + " != cone dimension " +
                     std::to_string(cone.dim));
  switch (cone.kind) {
    case ConeKind::zero:
      return point.cwiseAbs().maxCoeff() <= tol;
    case ConeKind::nonnegative:
      return point.minCoeff() >= -tol;
    case ConeKind::second_order:
      return point.tail(point.size() - 1).norm() <= point[0] + tol;
    case ConeKind::exponential_primal: {
      const double x = point[0], y = point[1], z = point[2];
      if (y > 0) {
        const double e = x / y;
        if (e > 700.0) return false;  // y*exp(x/y) overflows any finite z
        if (y * std::exp(e) <= z + tol) return true;
      }
      return std::abs(y) <= tol && x <= tol && z >= -tol;
    }
  }
  return false;
}

// Nonnegative scalar measuring how far `point` is from the cone; zero iff
// the point is a member at tolerance zero (up to rounding).
inline double cone_violation(const Vector& point, const Cone& cone) {
  switch (cone.kind) {
    case ConeKind::zero:
      return point.size() ? point.cwiseAbs().maxCoeff() : 0.0;
    case ConeKind::nonnegative:
      return std::max(0.0, -point.minCoeff());
    case ConeKind::second_order:
      return std::max(0.0, point.tail(point.size() - 1).norm() - point[0]);
    case ConeKind::exponential_primal: {
      const double x = point[0], y = point[1], z = point[2];
      if (y > 0) {
        const double e = std::min(x / y, 700.0);
        return std::max(0.0, y * std::exp(e) - z);
      }
      double v = -y;
      v = std::max(v, x);
      v = std::max(v, -z);
      return std::max(0.0, v);
    }
  }
  return 0.0;
}

}  // namespace coneglm
