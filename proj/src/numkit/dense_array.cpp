#include "ptl/numkit/dense_array.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ptl/errors.hpp"

namespace ptl::numkit {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw DimensionError("DenseArray: shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("DenseArray: zero-length dimension in " + shape_string(shape));
  }
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

DenseArray::DenseArray(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  validate_shape(shape_);
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("DenseArray: shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(data_.size()) + " elements");
  }
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, double fill) {
  return DenseArray({rows, cols}, fill);
}

DenseArray DenseArray::vector(std::vector<double> values) {
  const auto n = values.size();
  return DenseArray({n}, std::move(values));
}

DenseArray DenseArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseArray::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseArray({r, c}, std::move(data));
}

std::size_t DenseArray::rows() const noexcept {
  return shape_.size() >= 2 ? shape_.front() : 1;
}

std::size_t DenseArray::cols() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() >= 2 ? data_.size() / shape_.front() : shape_.front();
}

std::span<double> DenseArray::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols(), cols());
}

std::span<const double> DenseArray::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols(), cols());
}

MatrixMap DenseArray::as_matrix() {
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

ConstMatrixMap DenseArray::as_matrix() const {
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool DenseArray::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DenseArray::require_finite(const std::string& where) const {
  if (!all_finite()) throw NumericError(where + ": non-finite value");
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const std::string& where) {
  if (!a.same_shape(b)) {
    throw DimensionError(where + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

DenseArray concat_columns(std::initializer_list<const DenseArray*> parts) {
  if (parts.size() == 0) throw DimensionError("concat_columns: nothing to concatenate");
  const std::size_t rows = (*parts.begin())->rows();
  std::size_t cols = 0;
  for (const auto* p : parts) {
    if (p->rows() != rows) throw DimensionError("concat_columns: row count mismatch");
    cols += p->cols();
  }
  DenseArray out = DenseArray::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * cols;
    for (const auto* p : parts) {
      auto src = p->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

DenseArray slice_columns(const DenseArray& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols() || count == 0) throw DimensionError("slice_columns: out of range");
  DenseArray out = DenseArray::matrix(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = a.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

DenseArray concat_rows(const DenseArray& top, const DenseArray& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionError("concat_rows: column count mismatch");
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return DenseArray({top.rows() + bottom.rows(), top.cols()}, std::move(data));
}

DenseArray slice_rows(const DenseArray& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows() || count == 0) throw DimensionError("slice_rows: out of range");
  const auto c = a.cols();
  std::vector<double> data(a.data() + begin * c, a.data() + (begin + count) * c);
  return DenseArray({count, c}, std::move(data));
}

}  // namespace ptl::numkit
