#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace prov {

// Dense row-major matrix of doubles. Small on purpose: the training engine
// needs exactly ordered reductions for reproducible runs, so every kernel
// here iterates in a fixed order and nothing is parallelized.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return d_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

  double* data() noexcept { return d_.data(); }
  const double* data() const noexcept { return d_.data(); }

  std::span<double> row(std::size_t i) { return {d_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {d_.data() + i * cols_, cols_};
  }

  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> d_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c = aᵀ * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace prov
