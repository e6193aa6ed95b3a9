#include "matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "storopt/chain_lp.hpp"

namespace storopt::detail {

namespace {

constexpr double kPriceTol = 1e-11;
constexpr double kPivotTol = 1e-12;
constexpr double kRelPivotTol = 1e-9;  // against the largest entry of the entering column
constexpr double kFeasTol = 1e-11;     // Harris ratio test slack
constexpr std::size_t kRefactorEvery = 256;
constexpr std::size_t kDegenerateStreak = 40;

}  // namespace

MatrixGame::MatrixGame(std::size_t rows, double shift)
    : m_(rows), shift_(shift), binv_(rows * rows, 0.0), xb_(rows, 1.0), basis_(rows), pi_(rows, 0.0) {
  if (rows == 0) throw std::invalid_argument("matrix game needs at least one row");
  for (std::size_t i = 0; i < m_; ++i) {
    binv_[i * m_ + i] = 1.0;
    basis_[i] = -static_cast<std::ptrdiff_t>(i) - 1;
  }
}

void MatrixGame::add_column(std::span<const double> payoff) {
  if (payoff.size() != m_) throw std::invalid_argument("payoff column has the wrong length");
  std::vector<double> col(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    col[i] = payoff[i] + shift_;
    if (!(col[i] > 0.0)) throw InternalConsistency("matrix game shift too small for a payoff entry");
  }
  cols_.push_back(std::move(col));
}

std::vector<double> MatrixGame::entering_column(std::ptrdiff_t id) const {
  std::vector<double> alpha(m_, 0.0);
  if (id < 0) {
    const auto s = static_cast<std::size_t>(-id - 1);
    for (std::size_t i = 0; i < m_; ++i) alpha[i] = binv_[i * m_ + s];
    return alpha;
  }
  const std::vector<double>& a = cols_[static_cast<std::size_t>(id)];
  for (std::size_t i = 0; i < m_; ++i) {
    double s = 0.0;
    const double* row = &binv_[i * m_];
    for (std::size_t j = 0; j < m_; ++j) s += row[j] * a[j];
    alpha[i] = s;
  }
  return alpha;
}

void MatrixGame::update_duals() {
  std::fill(pi_.begin(), pi_.end(), 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    if (basis_[i] < 0) continue;
    const double* row = &binv_[i * m_];
    for (std::size_t j = 0; j < m_; ++j) pi_[j] += row[j];
  }
}

bool MatrixGame::pivot(std::size_t r, const std::vector<double>& alpha, std::ptrdiff_t entering,
                       double reduced_cost) {
  double* prow = &binv_[r * m_];
  const double inv = 1.0 / alpha[r];
  for (std::size_t j = 0; j < m_; ++j) prow[j] *= inv;
  xb_[r] *= inv;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r || alpha[i] == 0.0) continue;
    const double f = alpha[i];
    double* row = &binv_[i * m_];
    for (std::size_t j = 0; j < m_; ++j) row[j] -= f * prow[j];
    xb_[i] = std::max(0.0, xb_[i] - f * xb_[r]);
  }
  basis_[r] = entering;
  if (++pivots_since_refactor_ >= kRefactorEvery) {
    if (!refactor()) return false;
    update_duals();
  } else {
    // pi' = pi + d_e * (row r of the new inverse)
    for (std::size_t j = 0; j < m_; ++j) pi_[j] += reduced_cost * prow[j];
  }
  return true;
}

void MatrixGame::reset_to_slacks() {
  std::fill(binv_.begin(), binv_.end(), 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    binv_[i * m_ + i] = 1.0;
    basis_[i] = -static_cast<std::ptrdiff_t>(i) - 1;
  }
  std::fill(xb_.begin(), xb_.end(), 1.0);
  std::fill(pi_.begin(), pi_.end(), 0.0);
  pivots_since_refactor_ = 0;
}

bool MatrixGame::refactor() {
  pivots_since_refactor_ = 0;
  // Gauss-Jordan on [B | I] with partial pivoting.
  std::vector<double> b(m_ * m_, 0.0);
  for (std::size_t c = 0; c < m_; ++c) {
    const std::ptrdiff_t id = basis_[c];
    for (std::size_t i = 0; i < m_; ++i) {
      b[i * m_ + c] = id < 0 ? (static_cast<std::size_t>(-id - 1) == i ? 1.0 : 0.0)
                             : cols_[static_cast<std::size_t>(id)][i];
    }
  }
  std::vector<double> inv(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
  for (std::size_t c = 0; c < m_; ++c) {
    std::size_t best = c;
    for (std::size_t i = c + 1; i < m_; ++i) {
      if (std::abs(b[i * m_ + c]) > std::abs(b[best * m_ + c])) best = i;
    }
    if (std::abs(b[best * m_ + c]) < 1e-13) return false;
    if (best != c) {
      for (std::size_t j = 0; j < m_; ++j) {
        std::swap(b[c * m_ + j], b[best * m_ + j]);
        std::swap(inv[c * m_ + j], inv[best * m_ + j]);
      }
    }
    const double d = 1.0 / b[c * m_ + c];
    for (std::size_t j = 0; j < m_; ++j) {
      b[c * m_ + j] *= d;
      inv[c * m_ + j] *= d;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == c) continue;
      const double f = b[i * m_ + c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < m_; ++j) {
        b[i * m_ + j] -= f * b[c * m_ + j];
        inv[i * m_ + j] -= f * inv[c * m_ + j];
      }
    }
  }
  binv_ = std::move(inv);
  for (std::size_t i = 0; i < m_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m_; ++j) s += binv_[i * m_ + j];
    xb_[i] = std::max(0.0, s);
  }
  return true;
}

void MatrixGame::solve() {
  if (cols_.empty()) throw std::logic_error("matrix game has no columns");
  std::vector<char> col_basic, slack_basic;
  auto mark_basis = [&] {
    col_basic.assign(cols_.size(), 0);
    slack_basic.assign(m_, 0);
    for (std::ptrdiff_t id : basis_) {
      if (id >= 0) col_basic[static_cast<std::size_t>(id)] = 1;
      else slack_basic[static_cast<std::size_t>(-id - 1)] = 1;
    }
  };
  mark_basis();

  std::size_t degenerate = 0;
  bool restarted = false;
  const std::size_t cap = 50 * (m_ + cols_.size()) + 1000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > cap) throw InternalConsistency("matrix game simplex did not terminate");
    const bool bland = degenerate > kDegenerateStreak;
    std::ptrdiff_t entering = 0;
    double best = kPriceTol;
    double entering_cost = 0.0;
    bool found = false;
    for (std::size_t t = 0; t < cols_.size() && !(found && bland); ++t) {
      if (col_basic[t]) continue;
      double d = 1.0;
      for (std::size_t j = 0; j < m_; ++j) d -= pi_[j] * cols_[t][j];
      if (d > best) {
        best = bland ? kPriceTol : d;
        entering_cost = d;
        entering = static_cast<std::ptrdiff_t>(t);
        found = true;
      }
    }
    for (std::size_t s = 0; s < m_ && !(found && bland); ++s) {
      if (slack_basic[s]) continue;
      const double d = -pi_[s];
      if (d > best) {
        best = bland ? kPriceTol : d;
        entering_cost = d;
        entering = -static_cast<std::ptrdiff_t>(s) - 1;
        found = true;
      }
    }
    if (!found) break;

    const std::vector<double> alpha = entering_column(entering);
    double amax = 0.0;
    for (double a : alpha) amax = std::max(amax, a);
    const double ptol = std::max(kPivotTol, kRelPivotTol * amax);
    // Harris: widen the step bound by kFeasTol, then take the largest pivot
    // that stays within it. Ill-conditioned bases come from tiny pivots.
    // Under Bland's rule the exact minimum ratio with the smallest index.
    const double slack = bland ? 0.0 : kFeasTol;
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i) {
      if (alpha[i] > ptol) bound = std::min(bound, (std::max(0.0, xb_[i]) + slack) / alpha[i]);
    }
    std::size_t row = m_;
    double ratio = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (alpha[i] <= ptol) continue;
      const double r = std::max(0.0, xb_[i]) / alpha[i];
      if (r > bound) continue;
      const bool better = row == m_ || (bland ? basis_[i] < basis_[row]
                                              : alpha[i] > alpha[row] ||
                                                    (alpha[i] == alpha[row] && basis_[i] < basis_[row]));
      if (better) {
        row = i;
        ratio = r;
      }
    }
    if (row == m_) throw InternalConsistency("matrix game LP unbounded; payoff shift too small");
    degenerate = ratio == 0.0 ? degenerate + 1 : 0;

    if (!pivot(row, alpha, entering, entering_cost)) {
      // The product-form inverse drifted into a singular basis. The slack
      // basis is feasible for this LP, so start over from it once.
      if (restarted) throw InternalConsistency("singular basis in matrix game");
      restarted = true;
      reset_to_slacks();
      degenerate = 0;
    }
    mark_basis();
  }

  double zsum = 0.0;
  mu_.assign(cols_.size(), 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    if (basis_[i] >= 0) {
      const double z = std::max(0.0, xb_[i]);
      mu_[static_cast<std::size_t>(basis_[i])] = z;
      zsum += z;
    }
  }
  if (!(zsum > 0.0)) throw InternalConsistency("matrix game has a degenerate optimum");
  for (double& w : mu_) w /= zsum;
  value_ = 1.0 / zsum - shift_;

  lambda_.assign(m_, 0.0);
  double psum = 0.0;
  for (std::size_t j = 0; j < m_; ++j) {
    lambda_[j] = std::max(0.0, pi_[j]);
    psum += lambda_[j];
  }
  if (psum > 0.0) {
    for (double& w : lambda_) w /= psum;
  } else {
    std::fill(lambda_.begin(), lambda_.end(), 1.0 / static_cast<double>(m_));
  }
}

}  // namespace storopt::detail
