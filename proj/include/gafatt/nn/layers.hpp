#ifndef GAFATT_NN_LAYERS_HPP
#define GAFATT_NN_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gafatt/error.hpp"
#include "gafatt/nn/tensor.hpp"
#include "gafatt/rng.hpp"

namespace gafatt::nn {

enum class Mode { train, eval };

// 2D cross-correlation, stride 1, square kernel, zero padding. Forward caches
// the input for the weight-gradient pass; backward accumulates into
// weight.grad / bias.grad and returns the input gradient.
template <typename T>
struct Conv2d {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t padding = 1;
    Tensor<T> weight;  // {out, in, kernel, kernel}
    Tensor<T> bias;    // {out}
    Tensor<T> cached_input;

    Conv2d() = default;
    Conv2d(std::size_t in_c, std::size_t out_c, std::size_t kernel_size = 3, std::size_t pad = 1)
        : in_channels(in_c),
          out_channels(out_c),
          kernel(kernel_size),
          padding(pad),
          weight({out_c, in_c, kernel_size, kernel_size}),
          bias({out_c}) {
        weight.ensure_grad();
        bias.ensure_grad();
    }

    // He-scaled normal for ReLU fan-in, zero bias.
    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_channels * kernel * kernel));
        for (auto& w : weight.data) w = static_cast<T>(rng.normal(0.0, stddev));
        std::fill(bias.data.begin(), bias.data.end(), T{0});
    }

    Tensor<T> forward(const Tensor<T>& input) {
        if (input.shape.size() != 3 || input.shape[0] != in_channels)
            fail(ErrorCategory::shape, "conv2d: expected input (" + std::to_string(in_channels) +
                                           ", H, W), got " + shape_string(input.shape));
        const std::size_t h = input.shape[1], w = input.shape[2];
        if (h + 2 * padding < kernel || w + 2 * padding < kernel)
            fail(ErrorCategory::shape, "conv2d: input " + shape_string(input.shape) +
                                           " too small for kernel " + std::to_string(kernel));
        const std::size_t oh = h + 2 * padding - kernel + 1;
        const std::size_t ow = w + 2 * padding - kernel + 1;
        cached_input = input;

        Tensor<T> output({out_channels, oh, ow});
        for (std::size_t co = 0; co < out_channels; ++co)
            std::fill_n(output.data.begin() + static_cast<std::ptrdiff_t>(co * oh * ow), oh * ow,
                        bias.data[co]);
        if (kernel == 3 && padding == 1)
            forward_3x3_same(input, output, h, w);
        else
            forward_generic(input, output, h, w, oh, ow);
        return output;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        const std::size_t h = cached_input.shape[1], w = cached_input.shape[2];
        const std::size_t oh = grad_out.shape[1], ow = grad_out.shape[2];
        check_shape(grad_out, {out_channels, oh, ow}, "conv2d backward");

        Tensor<T> grad_in({in_channels, h, w});
        for (std::size_t co = 0; co < out_channels; ++co) {
            const T* gout_plane = grad_out.data.data() + co * oh * ow;
            T bias_sum = 0;
            for (std::size_t i = 0; i < oh * ow; ++i) bias_sum += gout_plane[i];
            bias.grad[co] += bias_sum;
        }
        if (kernel == 3 && padding == 1)
            backward_3x3_same(grad_out, grad_in, h, w);
        else
            backward_generic(grad_out, grad_in, h, w, oh, ow);
        return grad_in;
    }

    std::size_t param_count() const { return weight.size() + bias.size(); }

private:
    // Copies a plane into a zero-bordered (h+2) x (w+2) buffer so the 3x3
    // stencil loops run border-free at full SIMD width.
    static void pad_plane(const T* plane, std::size_t h, std::size_t w, std::vector<T>& padded) {
        const std::size_t wp = w + 2;
        padded.assign((h + 2) * wp, T{0});
        for (std::size_t y = 0; y < h; ++y)
            std::copy(plane + y * w, plane + (y + 1) * w, padded.data() + (y + 1) * wp + 1);
    }

    void forward_3x3_same(const Tensor<T>& input, Tensor<T>& output, std::size_t h, std::size_t w) {
        const std::size_t wp = w + 2;
        std::vector<std::vector<T>> padded(in_channels);
        for (std::size_t ci = 0; ci < in_channels; ++ci)
            pad_plane(input.data.data() + ci * h * w, h, w, padded[ci]);

        for (std::size_t co = 0; co < out_channels; ++co) {
            T* const out_plane = output.data.data() + co * h * w;
            for (std::size_t ci = 0; ci < in_channels; ++ci) {
                const T* const k = weight.data.data() + (co * in_channels + ci) * 9;
                const T k00 = k[0], k01 = k[1], k02 = k[2];
                const T k10 = k[3], k11 = k[4], k12 = k[5];
                const T k20 = k[6], k21 = k[7], k22 = k[8];
                const T* const p = padded[ci].data();
                for (std::size_t y = 0; y < h; ++y) {
                    const T* __restrict r0 = p + y * wp;
                    const T* __restrict r1 = r0 + wp;
                    const T* __restrict r2 = r1 + wp;
                    T* __restrict out_row = out_plane + y * w;
#pragma omp simd
                    for (std::size_t x = 0; x < w; ++x) {
                        out_row[x] += k00 * r0[x] + k01 * r0[x + 1] + k02 * r0[x + 2] +
                                      k10 * r1[x] + k11 * r1[x + 1] + k12 * r1[x + 2] +
                                      k20 * r2[x] + k21 * r2[x + 1] + k22 * r2[x + 2];
                    }
                }
            }
        }
    }

    // Backward runs as two GEMM-shaped passes over an im2row matrix
    // rows[(y, x)][ci*9 + tap], so the inner loops are contiguous saxpys of
    // width 9 * in_channels regardless of how small the spatial extent is.
    // Output gradients arriving through a ReLU are mostly zeros; those rows
    // are skipped, which changes no bits of the result.
    void backward_3x3_same(const Tensor<T>& grad_out, Tensor<T>& grad_in, std::size_t h,
                           std::size_t w) {
        const std::size_t wp = w + 2;
        const std::size_t taps = in_channels * 9;
        const std::size_t hw = h * w;

        std::vector<T> padded;
        std::vector<T> in_rows(hw * taps);
        for (std::size_t ci = 0; ci < in_channels; ++ci) {
            pad_plane(cached_input.data.data() + ci * h * w, h, w, padded);
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    T* __restrict row = in_rows.data() + (y * w + x) * taps + ci * 9;
                    const T* __restrict src = padded.data() + y * wp + x;
                    row[0] = src[0];
                    row[1] = src[1];
                    row[2] = src[2];
                    row[3] = src[wp];
                    row[4] = src[wp + 1];
                    row[5] = src[wp + 2];
                    row[6] = src[2 * wp];
                    row[7] = src[2 * wp + 1];
                    row[8] = src[2 * wp + 2];
                }
            }
        }

        std::vector<T> grad_rows(hw * taps, T{0});
        for (std::size_t co = 0; co < out_channels; ++co) {
            const T* const gout_plane = grad_out.data.data() + co * hw;
            const T* const w_row = weight.data.data() + co * taps;
            T* const wg_row = weight.grad.data() + co * taps;
            for (std::size_t k = 0; k < hw; ++k) {
                const T g = gout_plane[k];
                if (g == T{0}) continue;
                const T* __restrict in_row = in_rows.data() + k * taps;
                T* __restrict g_row = grad_rows.data() + k * taps;
                const T* __restrict wr = w_row;
#pragma omp simd
                for (std::size_t n = 0; n < taps; ++n) {
                    wg_row[n] += g * in_row[n];  // weight gradient
                    g_row[n] += g * wr[n];       // input gradient, still in row form
                }
            }
        }

        // Fold the row-form input gradient back onto the (ci, y, x) planes.
        for (std::size_t ci = 0; ci < in_channels; ++ci) {
            T* const gin_plane = grad_in.data.data() + ci * hw;
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const T* __restrict row = grad_rows.data() + (y * w + x) * taps + ci * 9;
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        const std::ptrdiff_t in_y =
                            static_cast<std::ptrdiff_t>(y + ky) - 1;
                        if (in_y < 0 || in_y >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < 3; ++kx) {
                            const std::ptrdiff_t in_x =
                                static_cast<std::ptrdiff_t>(x + kx) - 1;
                            if (in_x < 0 || in_x >= static_cast<std::ptrdiff_t>(w)) continue;
                            gin_plane[in_y * static_cast<std::ptrdiff_t>(w) + in_x] +=
                                row[ky * 3 + kx];
                        }
                    }
                }
            }
        }
    }

    void forward_generic(const Tensor<T>& input, Tensor<T>& output, std::size_t h, std::size_t w,
                         std::size_t oh, std::size_t ow) {
        for (std::size_t co = 0; co < out_channels; ++co) {
            T* out_plane = output.data.data() + co * oh * ow;
            for (std::size_t ci = 0; ci < in_channels; ++ci) {
                const T* in_plane = input.data.data() + ci * h * w;
                const T* kern = weight.data.data() + (co * in_channels + ci) * kernel * kernel;
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        const T wv = kern[ky * kernel + kx];
                        const auto [y0, y1] = valid_range(oh, h, ky);
                        const auto [x0, x1] = valid_range(ow, w, kx);
                        for (std::size_t y = y0; y < y1; ++y) {
                            const T* in_row = in_plane + (y + ky - padding) * w;
                            T* out_row = out_plane + y * ow;
                            for (std::size_t x = x0; x < x1; ++x)
                                out_row[x] += wv * in_row[x + kx - padding];
                        }
                    }
                }
            }
        }
    }

    void backward_generic(const Tensor<T>& grad_out, Tensor<T>& grad_in, std::size_t h,
                          std::size_t w, std::size_t oh, std::size_t ow) {
        for (std::size_t co = 0; co < out_channels; ++co) {
            const T* gout_plane = grad_out.data.data() + co * oh * ow;
            for (std::size_t ci = 0; ci < in_channels; ++ci) {
                const T* in_plane = cached_input.data.data() + ci * h * w;
                T* gin_plane = grad_in.data.data() + ci * h * w;
                const T* kern = weight.data.data() + (co * in_channels + ci) * kernel * kernel;
                T* kern_grad = weight.grad.data() + (co * in_channels + ci) * kernel * kernel;
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        const T wv = kern[ky * kernel + kx];
                        const auto [y0, y1] = valid_range(oh, h, ky);
                        const auto [x0, x1] = valid_range(ow, w, kx);
                        T wsum = 0;
                        for (std::size_t y = y0; y < y1; ++y) {
                            const T* in_row = in_plane + (y + ky - padding) * w;
                            T* gin_row = gin_plane + (y + ky - padding) * w;
                            const T* gout_row = gout_plane + y * ow;
                            for (std::size_t x = x0; x < x1; ++x)
                                gin_row[x + kx - padding] += wv * gout_row[x];
                            T acc = 0;
#pragma omp simd reduction(+ : acc)
                            for (std::size_t x = x0; x < x1; ++x)
                                acc += gout_row[x] * in_row[x + kx - padding];
                            wsum += acc;
                        }
                        kern_grad[ky * kernel + kx] += wsum;
                    }
                }
            }
        }
    }

    // Output rows y where input row y + ky - padding stays in [0, extent).
    std::pair<std::size_t, std::size_t> valid_range(std::size_t out_extent, std::size_t in_extent,
                                                    std::size_t k) const {
        const auto lo = static_cast<std::ptrdiff_t>(padding) - static_cast<std::ptrdiff_t>(k);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out_extent),
                                                 static_cast<std::ptrdiff_t>(in_extent) + lo);
        const std::size_t first = lo > 0 ? static_cast<std::size_t>(lo) : 0;
        const std::size_t last = hi > static_cast<std::ptrdiff_t>(first) ? static_cast<std::size_t>(hi) : first;
        return {first, last};
    }
};

template <typename T>
struct Relu {
    Tensor<T> cached_input;

    Tensor<T> forward(const Tensor<T>& input) {
        cached_input = input;
        Tensor<T> output(input.shape);
        for (std::size_t i = 0; i < input.size(); ++i) output.data[i] = std::max(T{0}, input.data[i]);
        return output;
    }

    // Subgradient at 0 is defined as 0.
    Tensor<T> backward(const Tensor<T>& grad_out) {
        check_shape(grad_out, cached_input.shape, "relu backward");
        Tensor<T> grad_in(cached_input.shape);
        for (std::size_t i = 0; i < grad_in.size(); ++i)
            grad_in.data[i] = cached_input.data[i] > T{0} ? grad_out.data[i] : T{0};
        return grad_in;
    }
};

// 2x2 window, stride 2; a trailing odd row/column is dropped. Ties go to the
// first element in row-major window order so backward is deterministic.
template <typename T>
struct MaxPool2d {
    Shape cached_in_shape;
    std::vector<std::size_t> argmax;

    Tensor<T> forward(const Tensor<T>& input) {
        if (input.shape.size() != 3)
            fail(ErrorCategory::shape, "maxpool2d: expected (C, H, W), got " + shape_string(input.shape));
        const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
        if (h < 2 || w < 2)
            fail(ErrorCategory::shape, "maxpool2d: spatial size " + shape_string(input.shape) +
                                           " below the 2x2 window");
        const std::size_t oh = h / 2, ow = w / 2;
        cached_in_shape = input.shape;
        argmax.resize(c * oh * ow);
        Tensor<T> output({c, oh, ow});
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* in_plane = input.data.data() + ch * h * w;
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    std::size_t best = 2 * y * w + 2 * x;
                    T best_v = in_plane[best];
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = (2 * y + dy) * w + 2 * x + dx;
                            if (in_plane[idx] > best_v) {
                                best_v = in_plane[idx];
                                best = idx;
                            }
                        }
                    output.data[(ch * oh + y) * ow + x] = best_v;
                    argmax[(ch * oh + y) * ow + x] = ch * h * w + best;
                }
            }
        }
        return output;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        const std::size_t c = cached_in_shape[0];
        const std::size_t oh = cached_in_shape[1] / 2, ow = cached_in_shape[2] / 2;
        check_shape(grad_out, {c, oh, ow}, "maxpool2d backward");
        Tensor<T> grad_in(cached_in_shape);
        for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in.data[argmax[i]] += grad_out.data[i];
        return grad_in;
    }
};

// Pools any (C, H, W) onto a fixed (C, S, S) grid. Bin (i, j) covers rows
// [floor(i*H/S), ceil((i+1)*H/S)) and the analogous columns; bins may overlap
// when H < S.
template <typename T>
struct AdaptiveMaxPool2d {
    std::size_t grid = 4;
    Shape cached_in_shape;
    std::vector<std::size_t> argmax;

    AdaptiveMaxPool2d() = default;
    explicit AdaptiveMaxPool2d(std::size_t output_grid) : grid(output_grid) {}

    static std::size_t bin_lo(std::size_t i, std::size_t extent, std::size_t grid) {
        return i * extent / grid;
    }
    static std::size_t bin_hi(std::size_t i, std::size_t extent, std::size_t grid) {
        return ((i + 1) * extent + grid - 1) / grid;  // ceil
    }

    Tensor<T> forward(const Tensor<T>& input) {
        if (input.shape.size() != 3)
            fail(ErrorCategory::shape,
                 "adaptive_maxpool2d: expected (C, H, W), got " + shape_string(input.shape));
        const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
        if (h < 1 || w < 1)
            fail(ErrorCategory::shape, "adaptive_maxpool2d: empty spatial extent");
        cached_in_shape = input.shape;
        argmax.resize(c * grid * grid);
        Tensor<T> output({c, grid, grid});
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* in_plane = input.data.data() + ch * h * w;
            for (std::size_t i = 0; i < grid; ++i) {
                const std::size_t y0 = bin_lo(i, h, grid), y1 = bin_hi(i, h, grid);
                for (std::size_t j = 0; j < grid; ++j) {
                    const std::size_t x0 = bin_lo(j, w, grid), x1 = bin_hi(j, w, grid);
                    std::size_t best = y0 * w + x0;
                    T best_v = in_plane[best];
                    for (std::size_t y = y0; y < y1; ++y)
                        for (std::size_t x = x0; x < x1; ++x) {
                            const std::size_t idx = y * w + x;
                            if (in_plane[idx] > best_v) {
                                best_v = in_plane[idx];
                                best = idx;
                            }
                        }
                    output.data[(ch * grid + i) * grid + j] = best_v;
                    argmax[(ch * grid + i) * grid + j] = ch * h * w + best;
                }
            }
        }
        return output;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        check_shape(grad_out, {cached_in_shape[0], grid, grid}, "adaptive_maxpool2d backward");
        Tensor<T> grad_in(cached_in_shape);
        for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in.data[argmax[i]] += grad_out.data[i];
        return grad_in;
    }
};

template <typename T>
struct Dense {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    Tensor<T> weight;  // {out, in}
    Tensor<T> bias;    // {out}
    Tensor<T> cached_input;

    Dense() = default;
    Dense(std::size_t in_f, std::size_t out_f)
        : in_features(in_f), out_features(out_f), weight({out_f, in_f}), bias({out_f}) {
        weight.ensure_grad();
        bias.ensure_grad();
    }

    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_features));
        for (auto& w : weight.data) w = static_cast<T>(rng.normal(0.0, stddev));
        std::fill(bias.data.begin(), bias.data.end(), T{0});
    }

    Tensor<T> forward(const Tensor<T>& input) {
        check_shape(input, {in_features}, "dense");
        cached_input = input;
        Tensor<T> output({out_features});
        for (std::size_t o = 0; o < out_features; ++o) {
            const T* row = weight.data.data() + o * in_features;
            T acc = 0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t i = 0; i < in_features; ++i) acc += row[i] * input.data[i];
            output.data[o] = acc + bias.data[o];
        }
        return output;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        check_shape(grad_out, {out_features}, "dense backward");
        Tensor<T> grad_in({in_features});
        for (std::size_t o = 0; o < out_features; ++o) {
            const T g = grad_out.data[o];
            bias.grad[o] += g;
            const T* row = weight.data.data() + o * in_features;
            T* wgrad_row = weight.grad.data() + o * in_features;
            for (std::size_t i = 0; i < in_features; ++i) {
                wgrad_row[i] += g * cached_input.data[i];
                grad_in.data[i] += g * row[i];
            }
        }
        return grad_in;
    }

    std::size_t param_count() const { return weight.size() + bias.size(); }
};

// Inverted dropout: train mode zeroes units with probability rate and scales
// survivors by 1/(1-rate); eval mode is the identity.
template <typename T>
struct Dropout {
    double rate = 0.5;
    std::vector<T> mask;

    Dropout() = default;
    explicit Dropout(double p) : rate(p) {
        if (!(p >= 0.0 && p < 1.0))
            fail(ErrorCategory::config, "dropout rate must be in [0, 1), got " + std::to_string(p));
    }

    Tensor<T> forward(const Tensor<T>& input, Mode mode, Rng* rng) {
        if (mode == Mode::eval || rate == 0.0) {
            mask.assign(input.size(), T{1});
            return input;
        }
        if (rng == nullptr) fail(ErrorCategory::config, "dropout: train mode needs an rng");
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
        mask.resize(input.size());
        Tensor<T> output(input.shape);
        for (std::size_t i = 0; i < input.size(); ++i) {
            mask[i] = rng->uniform01() < rate ? T{0} : keep_scale;
            output.data[i] = input.data[i] * mask[i];
        }
        return output;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (grad_out.size() != mask.size())
            fail(ErrorCategory::shape, "dropout backward: size mismatch");
        Tensor<T> grad_in(grad_out.shape);
        for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in.data[i] = grad_out.data[i] * mask[i];
        return grad_in;
    }
};

}  // namespace gafatt::nn

#endif  // GAFATT_NN_LAYERS_HPP
