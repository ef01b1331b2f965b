#ifndef GAFATT_NN_LOSS_HPP
#define GAFATT_NN_LOSS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "gafatt/error.hpp"

namespace gafatt::nn {

// (1/n) * sum((pred - target)^2)
template <typename T>
T mse_loss(std::span<const T> pred, std::span<const T> target) {
    if (pred.size() != target.size() || pred.empty())
        fail(ErrorCategory::shape, "mse_loss: need equal non-empty prediction/target lengths");
    T sum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<T>(pred.size());
}

// d loss / d pred_j = 2 * (pred_j - target_j) / n
template <typename T>
std::vector<T> mse_loss_grad(std::span<const T> pred, std::span<const T> target) {
    if (pred.size() != target.size() || pred.empty())
        fail(ErrorCategory::shape, "mse_loss_grad: need equal non-empty prediction/target lengths");
    std::vector<T> grad(pred.size());
    const T scale = T{2} / static_cast<T>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = scale * (pred[i] - target[i]);
    return grad;
}

}  // namespace gafatt::nn

#endif  // GAFATT_NN_LOSS_HPP
