#include "mamnet/tensor.hpp"

#include <cmath>

namespace mamnet {

namespace {

std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ConfigError("tensor shape has a zero extent");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_numel(shape_) != data_.size()) {
        throw ConfigError("tensor data length does not match shape");
    }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw ConfigError("tensor axis out of range");
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ConfigError("rows() requires a rank-2 tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ConfigError("cols() requires a rank-2 tensor");
    return shape_[1];
}

double Tensor::value() const {
    if (size() != 1) throw ConfigError("value() requires a single-element tensor");
    return data_[0];
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

bool Tensor::finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void axpy(Tensor& a, double c, const Tensor& b) {
    if (!a.same_shape(b)) throw ConfigError("axpy shape mismatch");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += c * pb[i];
}

}  // namespace mamnet
