// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices of doubles and the handful of free functions the
// attention and Q-network code builds on.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaq {

/// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the domain of an operation (empty neighborhood, bad distance, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller broke a documented precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor2 column(std::span<const double> values);
    static Tensor2 row_vector(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void fill(double v);
    bool all_finite() const;
    std::string shape_string() const;

    bool operator==(const Tensor2& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product. Throws DimensionError when a.cols() != b.rows().
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

/// a · bᵀ, the shape used for linear maps with weights stored (out × in).
Tensor2 matmul_transposed(const Tensor2& a, const Tensor2& b);

/// Elementwise x for x >= 0, slope·x otherwise.
Tensor2 leaky_relu(const Tensor2& x, double slope);

/// Attention-logit slope shared by every GAT layer.
inline constexpr double kLeakySlope = 0.2;

/// Softmax over one neighborhood's logits, max-subtracted.
/// Throws DomainError on an empty input.
std::vector<double> neighborhood_softmax(std::span<const double> logits);

}  // namespace gaq
