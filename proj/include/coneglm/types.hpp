#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <stdexcept>
#include <string>

namespace coneglm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Input/usage errors surfaced to callers (bad names, malformed formulas,
// invalid data). Numeric conditions (infeasible, non-convergence) are
// reported through status enums instead.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

struct IndexRange {
  Index begin = 0;
  Index end = 0;  // half-open
  Index size() const { return end - begin; }
  bool contains(Index i) const { return i >= begin && i < end; }
};

}  // namespace coneglm
