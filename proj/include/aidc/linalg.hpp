#pragma once

// Dense LU with partial pivoting, sized for simplex bases and reduced
// network matrices (a few hundred rows). Row-major storage.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace aidc::linalg {

class LuFactor {
 public:
  LuFactor() = default;

  /// Factorizes a row-major n x n matrix in place. Returns false when a
  /// pivot falls below `singular_tol` (matrix treated as singular).
  bool factor(std::vector<double> a, std::size_t n, double singular_tol = 1e-11) {
    lu_ = std::move(a);
    n_ = n;
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_[k * n + k]);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::abs(lu_[i * n + k]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best < singular_tol) return false;
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_[k * n + j], lu_[piv * n + j]);
        std::swap(perm_[k], perm_[piv]);
      }
      const double inv = 1.0 / lu_[k * n + k];
      for (std::size_t i = k + 1; i < n; ++i) {
        const double m = lu_[i * n + k] * inv;
        lu_[i * n + k] = m;
        if (m != 0.0)
          for (std::size_t j = k + 1; j < n; ++j) lu_[i * n + j] -= m * lu_[k * n + j];
      }
    }
    return true;
  }

  std::size_t size() const { return n_; }

  /// x := A^{-1} b.
  void solve(std::vector<double>& x, const std::vector<double>& b) const {
    x.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 1; i < n_; ++i) {
      double s = x[i];
      const double* row = &lu_[i * n_];
      for (std::size_t j = 0; j < i; ++j) s -= row[j] * x[j];
      x[i] = s;
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = x[ii];
      const double* row = &lu_[ii * n_];
      for (std::size_t j = ii + 1; j < n_; ++j) s -= row[j] * x[j];
      x[ii] = s / row[ii];
    }
  }

  /// x := A^{-T} b.
  void solve_transposed(std::vector<double>& x, const std::vector<double>& b) const {
    // Solve U^T y = b, then L^T z = y, then undo the row permutation.
    std::vector<double> y(b);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = y[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_[j * n_ + i] * y[j];
      y[i] = s / lu_[i * n_ + i];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_[j * n_ + ii] * y[j];
      y[ii] = s;
    }
    x.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
  }

 private:
  std::vector<double> lu_;
  std::vector<std::size_t> perm_;
  std::size_t n_ = 0;
};

}  // namespace aidc::linalg
