#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace esfp::ad {

// Dense row-major array of doubles with an arbitrary-rank shape.
// A rank-0 tensor holds a single scalar.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::initializer_list<std::size_t> idx);
    double at(std::initializer_list<std::size_t> idx) const;

    double item() const;  // requires size() == 1

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// NumPy-style broadcast of two shapes; throws on incompatibility.
std::vector<std::size_t> broadcast_shapes(const std::vector<std::size_t>& a,
                                          const std::vector<std::size_t>& b);

// Elementwise binary op with broadcasting.
Tensor broadcast_binary(const Tensor& a, const Tensor& b, double (*op)(double, double));

// Sum `t` down to `target` shape (inverse of broadcasting); used by backward rules.
Tensor reduce_to_shape(const Tensor& t, const std::vector<std::size_t>& target);

// Plain 2-D / batched matrix product helpers (no autodiff).
// a: [..., m, k], b: [..., k, n] with equal leading dims, or either operand rank 2.
Tensor matmul_eager(const Tensor& a, const Tensor& b);
Tensor transpose_last_two(const Tensor& t);

}  // namespace esfp::ad
