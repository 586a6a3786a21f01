#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace timebridge {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

// Dense row-major float64 tensor. The gradient buffer, when a tensor acts as
// an autodiff leaf, lives in the tape node, not here; `grad` is only populated
// on tensors returned by gradient queries.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<std::size_t>(numel()), 0.0);
    }

    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (static_cast<std::int64_t>(data_.size()) != numel()) {
            throw dimension_error("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_str(shape_));
        }
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, double value) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = value;
        return t;
    }

    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    static Tensor identity(std::int64_t n) {
        Tensor t({n, n});
        for (std::int64_t i = 0; i < n; ++i) t.data_[static_cast<std::size_t>(i * n + i)] = 1.0;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::int64_t numel() const { return shape_numel(shape_); }
    std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t ndim() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // 2-D accessors; most model math is matrices.
    double& at(std::int64_t r, std::int64_t c) {
        return data_[static_cast<std::size_t>(r * shape_[1] + c)];
    }
    double at(std::int64_t r, std::int64_t c) const {
        return data_[static_cast<std::size_t>(r * shape_[1] + c)];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor reshaped(Shape new_shape) const {
        if (shape_numel(new_shape) != numel()) {
            throw dimension_error("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                                  " changes element count");
        }
        return Tensor(std::move(new_shape), data_);
    }

private:
    void validate_shape() const {
        if (shape_.empty()) throw dimension_error("tensor shape must have at least one dimension");
        for (auto d : shape_) {
            if (d < 1) throw dimension_error("tensor dimensions must be >= 1, got " + shape_str(shape_));
        }
    }

    Shape shape_;
    std::vector<double> data_;
};

// Paired real/imaginary tensors of identical shape (frequency-domain values).
struct ComplexPair {
    Tensor real;
    Tensor imag;
};

}  // namespace timebridge
