#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ptl::numkit {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

/// Row-major array of 64-bit reals with an explicit shape.
///
/// Rank-2 arrays are the workhorse (batches are [rows, features]); rank-1
/// arrays show up for biases and flat vectors. Storage is always contiguous.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape, double fill = 0.0);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static DenseArray vector(std::vector<double> values);
  static DenseArray from_rows(std::initializer_list<std::initializer_list<double>> rows);

  [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  /// Leading dimension; for rank-1 arrays this is 1 (a single row).
  [[nodiscard]] std::size_t rows() const noexcept;
  /// Trailing dimension; for rank-1 arrays this is the length.
  [[nodiscard]] std::size_t cols() const noexcept;

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] std::span<double> row(std::size_t r);
  [[nodiscard]] std::span<const double> row(std::size_t r) const;

  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  [[nodiscard]] MatrixMap as_matrix();
  [[nodiscard]] ConstMatrixMap as_matrix() const;

  void fill(double value);
  [[nodiscard]] bool same_shape(const DenseArray& other) const noexcept { return shape_ == other.shape_; }
  [[nodiscard]] bool all_finite() const noexcept;
  /// Throws NumericError naming `where` if any element is NaN/Inf.
  void require_finite(const std::string& where) const;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  // Fixed alignment keeps vectorized kernels on one code path, so results do
  // not depend on where the heap placed the buffer.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

[[nodiscard]] std::string shape_string(const std::vector<std::size_t>& shape);

/// Throws DimensionError unless `a` and `b` have identical shapes.
void require_same_shape(const DenseArray& a, const DenseArray& b, const std::string& where);

/// Column-wise concatenation of arrays with equal row counts.
[[nodiscard]] DenseArray concat_columns(std::initializer_list<const DenseArray*> parts);

/// Column slice [begin, begin + count).
[[nodiscard]] DenseArray slice_columns(const DenseArray& a, std::size_t begin, std::size_t count);

/// Row-wise concatenation of arrays with equal column counts.
[[nodiscard]] DenseArray concat_rows(const DenseArray& top, const DenseArray& bottom);

/// Row slice [begin, begin + count).
[[nodiscard]] DenseArray slice_rows(const DenseArray& a, std::size_t begin, std::size_t count);

}  // namespace ptl::numkit
