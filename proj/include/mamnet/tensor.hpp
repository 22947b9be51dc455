#pragma once

#include <cstddef>
#include <vector>

#include "mamnet/error.hpp"

namespace mamnet {

/// Dense row-major array of 64-bit floats. Rank 1 and 2 cover everything
/// this project needs; the shape is a list of positive extents and the
/// flat data length always equals their product.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor scalar(double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Rank-2 accessors; throw ConfigError when the rank does not match.
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    // Scalar convenience for shape-{1} tensors.
    double value() const;

    void fill(double v);
    bool finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// a += c * b, elementwise; shapes must match.
void axpy(Tensor& a, double c, const Tensor& b);

}  // namespace mamnet
