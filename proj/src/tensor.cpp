// SPDX-License-Identifier: Apache-2.0

#include "gaq/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gaq {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError(fmt::format("tensor data length {} does not match shape ({}x{})",
                                         data_.size(), rows_, cols_));
    }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw DimensionError("ragged row list");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor2(r, c, std::move(data));
}

Tensor2 Tensor2::column(std::span<const double> values) {
    return Tensor2(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
    return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor2::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor2::shape_string() const { return fmt::format("({}x{})", rows_, cols_); }

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError(
            fmt::format("matmul: {} x {} shape mismatch", a.shape_string(), b.shape_string()));
    }
    Tensor2 out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                dst[j] += aik * src[j];
            }
        }
    }
    return out;
}

Tensor2 matmul_transposed(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError(fmt::format("matmul_transposed: {} x {}^T shape mismatch",
                                         a.shape_string(), b.shape_string()));
    }
    Tensor2 out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto x = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto w = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += x[k] * w[k];
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Tensor2 leaky_relu(const Tensor2& x, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        throw DomainError(fmt::format("leaky_relu slope {} outside (0,1)", slope));
    }
    Tensor2 out = x;
    for (double& v : out.values()) {
        if (v < 0.0) {
            v *= slope;
        }
    }
    return out;
}

std::vector<double> neighborhood_softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw DomainError("neighborhood_softmax: empty neighborhood");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

}  // namespace gaq
