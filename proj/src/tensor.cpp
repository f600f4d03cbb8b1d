#include "tsad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tsad {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out << " x ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_string(shape_));
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                                shape_string(shape_));
    }
    return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " +
                                    shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

MatrixMap Tensor::as_matrix() {
    if (rank() != 2) throw std::invalid_argument("as_matrix needs a rank-2 tensor, got " + shape_string(shape_));
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                     static_cast<Eigen::Index>(shape_[1]));
}

ConstMatrixMap Tensor::as_matrix() const {
    if (rank() != 2) throw std::invalid_argument("as_matrix needs a rank-2 tensor, got " + shape_string(shape_));
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                          static_cast<Eigen::Index>(shape_[1]));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                    " vs " + shape_string(b.shape()));
    }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

} // namespace

namespace {

// Register tile: kRows x kCols outputs accumulated over the whole inner
// dimension, then written back once.
constexpr std::size_t kRows = 4;
constexpr std::size_t kCols = 4;

void tile(const double* a, std::size_t inner, const double* m, std::size_t cols, double* out, std::size_t r0,
          std::size_t j0) {
    double acc[kRows][kCols];
    for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t j = 0; j < kCols; ++j) acc[r][j] = out[(r0 + r) * cols + j0 + j];
    }
    for (std::size_t k = 0; k < inner; ++k) {
        const double* row = m + k * cols + j0;
        for (std::size_t r = 0; r < kRows; ++r) {
            const double c = a[(r0 + r) * inner + k];
            for (std::size_t j = 0; j < kCols; ++j) acc[r][j] += c * row[j];
        }
    }
    for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t j = 0; j < kCols; ++j) out[(r0 + r) * cols + j0 + j] = acc[r][j];
    }
}

void edge(const double* a, std::size_t inner, const double* m, std::size_t cols, double* out, std::size_t r_begin,
          std::size_t r_end, std::size_t j_begin, std::size_t j_end) {
    for (std::size_t r = r_begin; r < r_end; ++r) {
        double* dst = out + r * cols;
        const double* src = a + r * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const double c = src[k];
            const double* row = m + k * cols;
            for (std::size_t j = j_begin; j < j_end; ++j) dst[j] += c * row[j];
        }
    }
}

} // namespace

void matmul_rows(const double* a, std::size_t rows, std::size_t inner, const double* m, std::size_t cols,
                 double* out, bool accumulate) {
    if (!accumulate) std::fill(out, out + rows * cols, 0.0);
    const std::size_t full_rows = rows - rows % kRows;
    const std::size_t full_cols = cols - cols % kCols;
    for (std::size_t r = 0; r < full_rows; r += kRows) {
        for (std::size_t j = 0; j < full_cols; j += kCols) tile(a, inner, m, cols, out, r, j);
    }
    edge(a, inner, m, cols, out, 0, full_rows, full_cols, cols);
    edge(a, inner, m, cols, out, full_rows, rows, 0, cols);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                                    shape_string(b.shape()));
    }
    Tensor out({a.dim(0), b.dim(1)});
    matmul_rows(a.data(), a.dim(0), a.dim(1), b.data(), b.dim(1), out.data());
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    return map(a, [factor](double v) { return v * factor; });
}

Tensor tanh(const Tensor& a) {
    return map(a, [](double v) { return std::tanh(v); });
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& a) {
    return map(a, [](double v) { return sigmoid(v); });
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double squared_norm(const Tensor& a) { return dot(a, a); }

} // namespace tsad
