#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "layerscope/error.hpp"

namespace layerscope {

/// Dense row-major matrix. Rows are exposed as spans so callers can treat
/// each observation as a contiguous vector.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw Error(ErrorCode::CountMismatch, "matrix data size does not match shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  template <typename U>
  Matrix<U> cast() const {
    return Matrix<U>(rows_, cols_, std::vector<U>(data_.begin(), data_.end()));
  }

  /// Copy of the listed rows, in the listed order.
  Matrix select_rows(std::span<const std::size_t> which) const {
    Matrix out(which.size(), cols_);
    for (std::size_t i = 0; i < which.size(); ++i) {
      auto src = row(which[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using DistanceMatrix = Matrix<double>;

template <typename T>
void require_finite(const Matrix<T>& m, const char* what) {
  for (const T& v : m.data()) {
    if (!std::isfinite(static_cast<double>(v))) throw Error(ErrorCode::NonfiniteValue, std::string(what) + " contains a non-finite value");
  }
}

/// Checks the distance-matrix contract: square, finite, symmetric, zero diagonal.
inline void require_distance_matrix(const DistanceMatrix& d) {
  if (d.rows() != d.cols()) throw Error(ErrorCode::FormatError, "distance matrix is not square");
  require_finite(d, "distance matrix");
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) throw Error(ErrorCode::FormatError, "distance matrix has a nonzero diagonal");
    for (std::size_t j = i + 1; j < d.rows(); ++j) {
      if (d(i, j) != d(j, i) || d(i, j) < 0.0) throw Error(ErrorCode::FormatError, "distance matrix is not symmetric and non-negative");
    }
  }
}

}  // namespace layerscope
