#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ransae/error.hpp"

namespace ransae {

/// Dense row-major matrix of doubles. Value type; copies are deep.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows_ * cols_) {
            throw Error(ErrorKind::ShapeMismatch, "matrix data size " + std::to_string(data_.size()) +
                                                      " does not match " + std::to_string(rows_) + "x" +
                                                      std::to_string(cols_));
        }
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows)
        : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size())
    {
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw Error(ErrorKind::ShapeMismatch, "ragged initializer list");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

    void append_row(std::span<const double> values)
    {
        if (rows_ == 0 && cols_ == 0) {
            cols_ = values.size();
        }
        if (values.size() != cols_) {
            throw Error(ErrorKind::ShapeMismatch, "append_row width " + std::to_string(values.size()) +
                                                      " != " + std::to_string(cols_));
        }
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    /// Rows selected by index, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const
    {
        Matrix out(indices.size(), cols_);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                        out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what)
{
    if (m.rows() != rows || m.cols() != cols) {
        throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                                  std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                                  "x" + std::to_string(m.cols()));
    }
}

/// a * bᵀ  (a: m×k, b: n×k) -> m×n
inline Matrix matmul_nt(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "matmul_nt inner dims " + std::to_string(a.cols()) + " vs " +
                                                  std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.rows());
    const std::size_t k = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        double* orow = out.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.row(j).data();
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += ar[p] * br[p];
            }
            orow[j] = acc;
        }
    }
    return out;
}

/// aᵀ * b  (a: m×n, b: m×k) -> n×k
inline Matrix matmul_tn(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "matmul_tn outer dims " + std::to_string(a.rows()) + " vs " +
                                                  std::to_string(b.rows()));
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* ar = a.row(r).data();
        const double* br = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = ar[i];
            if (s == 0.0) {
                continue;
            }
            double* orow = out.row(i).data();
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += s * br[j];
            }
        }
    }
    return out;
}

/// a * b  (a: m×k, b: k×n) -> m×n
inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "matmul inner dims " + std::to_string(a.cols()) + " vs " +
                                                  std::to_string(b.rows()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        double* orow = out.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double s = ar[p];
            if (s == 0.0) {
                continue;
            }
            const double* br = b.row(p).data();
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += s * br[j];
            }
        }
    }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b)
{
    require_shape(b, a.rows(), a.cols(), "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.flat()[i] - b.flat()[i]));
    }
    return worst;
}

} // namespace ransae
