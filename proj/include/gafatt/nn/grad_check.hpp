#ifndef GAFATT_NN_GRAD_CHECK_HPP
#define GAFATT_NN_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gafatt/error.hpp"
#include "gafatt/nn/tensor.hpp"

namespace gafatt::nn {

// Compares the analytic gradients already accumulated in params[i]->grad
// against central finite differences of loss_fn, perturbing one parameter at
// a time. Returns the max relative error with denominator max(|a|, |n|, 1e-8).
//
// max_checks_per_tensor = 0 checks every parameter; a positive value checks
// an evenly strided subset (first and last always included), which keeps the
// check tractable for large fragments.
inline double grad_check(std::span<Tensor<double>* const> params,
                         const std::function<double()>& loss_fn, double h = 1e-3,
                         std::size_t max_checks_per_tensor = 0) {
    if (!(h > 0)) fail(ErrorCategory::check, "grad_check: step size must be positive");
    const double probe1 = loss_fn();
    const double probe2 = loss_fn();
    if (probe1 != probe2)
        fail(ErrorCategory::check,
             "grad_check: fragment is not deterministic (two evaluations disagree)");

    double max_rel_error = 0.0;
    for (Tensor<double>* param : params) {
        if (param->grad.size() != param->data.size())
            fail(ErrorCategory::check, "grad_check: analytic gradients missing for a parameter");
        const std::size_t n = param->size();
        std::size_t stride = 1;
        if (max_checks_per_tensor > 0 && n > max_checks_per_tensor)
            stride = (n + max_checks_per_tensor - 1) / max_checks_per_tensor;
        for (std::size_t i = 0; i < n; i += stride) {
            const std::size_t idx = std::min(i, n - 1);
            const double saved = param->data[idx];
            param->data[idx] = saved + h;
            const double loss_plus = loss_fn();
            param->data[idx] = saved - h;
            const double loss_minus = loss_fn();
            param->data[idx] = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * h);
            const double analytic = param->grad[idx];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            max_rel_error = std::max(max_rel_error, std::abs(numeric - analytic) / denom);
        }
        if (stride > 1 && (n - 1) % stride != 0) {
            const std::size_t idx = n - 1;
            const double saved = param->data[idx];
            param->data[idx] = saved + h;
            const double loss_plus = loss_fn();
            param->data[idx] = saved - h;
            const double loss_minus = loss_fn();
            param->data[idx] = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * h);
            const double analytic = param->grad[idx];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            max_rel_error = std::max(max_rel_error, std::abs(numeric - analytic) / denom);
        }
    }
    return max_rel_error;
}

}  // namespace gafatt::nn

#endif  // GAFATT_NN_GRAD_CHECK_HPP
