#ifndef GAFATT_NN_TENSOR_HPP
#define GAFATT_NN_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gafatt/error.hpp"

namespace gafatt::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

// Dense n-d value array. grad is allocated for parameters (and anywhere
// gradients accumulate) and always mirrors the data shape.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(shape_volume(shape), T{0}) {}

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

    std::size_t size() const { return data.size(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T{0});
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T{0}); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }
};

template <typename T>
void check_shape(const Tensor<T>& t, const Shape& expected, const std::string& what) {
    if (t.shape != expected)
        fail(ErrorCategory::shape,
             what + ": expected shape " + shape_string(expected) + ", got " + shape_string(t.shape));
}

}  // namespace gafatt::nn

#endif  // GAFATT_NN_TENSOR_HPP
