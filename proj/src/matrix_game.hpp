#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace storopt::detail {

// Zero-sum game with `rows` scenario rows (maximiser) and a growing set of
// candidate columns (minimiser). Solved as
//
//   max sum z  s.t.  A z <= 1, z >= 0,   A = payoff + shift > 0
//
// by a revised primal simplex that keeps its basis when columns are added,
// so every new column costs only a few pivots.
class MatrixGame {
 public:
  // `shift` must make every present and future payoff entry positive.
  MatrixGame(std::size_t rows, double shift);

  void add_column(std::span<const double> payoff);
  void solve();

  std::size_t columns() const { return cols_.size(); }
  double value() const { return value_; }                     // unshifted game value
  const std::vector<double>& column_weights() const { return mu_; }  // sums to 1
  const std::vector<double>& row_weights() const { return lambda_; } // sums to 1

 private:
  // false when the periodic refactorization finds the basis singular
  bool pivot(std::size_t row, const std::vector<double>& alpha, std::ptrdiff_t entering,
             double reduced_cost);
  bool refactor();
  void reset_to_slacks();
  void update_duals();
  std::vector<double> entering_column(std::ptrdiff_t id) const;

  std::size_t m_;
  double shift_;
  std::vector<std::vector<double>> cols_;  // shifted payoff columns
  std::vector<double> binv_;               // m x m, row-major
  std::vector<double> xb_;
  std::vector<std::ptrdiff_t> basis_;      // >= 0 column index, < 0 slack -(i+1)
  std::vector<double> pi_;
  std::size_t pivots_since_refactor_ = 0;
  double value_ = 0.0;
  std::vector<double> mu_;
  std::vector<double> lambda_;
};

}  // namespace storopt::detail
