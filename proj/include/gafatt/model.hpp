#ifndef GAFATT_MODEL_HPP
#define GAFATT_MODEL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gafatt/error.hpp"
#include "gafatt/gaf.hpp"
#include "gafatt/nn/layers.hpp"
#include "gafatt/nn/tensor.hpp"
#include "gafatt/rng.hpp"

namespace gafatt {

struct AttnCnnConfig {
    std::vector<int> conv_filters = {32, 64, 128, 128};
    int kernel = 3;        // (3,3) convolutions
    int pool = 2;          // (2,2) max pooling
    int adaptive_grid = 4;  // final block pools onto adaptive_grid^2
    std::array<int, 3> fc_sizes = {128, 16, 1};
    double dropout_rate = 0.5;
    int in_channels = kEegChannels;
    std::uint64_t seed = 1;

    void validate() const {
        if (conv_filters.size() != 4)
            fail(ErrorCategory::config, "model config: conv_filters must list exactly 4 block sizes");
        for (std::size_t b = 0; b < conv_filters.size(); ++b) {
            if (conv_filters[b] < 1)
                fail(ErrorCategory::config, "model config: conv_filters must be positive");
            if (b > 0 && conv_filters[b] < conv_filters[b - 1])
                fail(ErrorCategory::config,
                     "model config: conv_filters must be non-decreasing with depth");
        }
        if (kernel != 3 || pool != 2)
            fail(ErrorCategory::config, "model config: kernel is fixed at 3 and pool at 2");
        if (fc_sizes != std::array<int, 3>{128, 16, 1})
            fail(ErrorCategory::config, "model config: fc_sizes are fixed at 128, 16, 1");
        if (adaptive_grid < 1) fail(ErrorCategory::config, "model config: adaptive_grid must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            fail(ErrorCategory::config, "model config: dropout_rate must be in [0, 1)");
        if (in_channels < 1) fail(ErrorCategory::config, "model config: in_channels must be >= 1");
    }

    std::size_t flatten_size() const {
        return static_cast<std::size_t>(conv_filters[3]) *
               static_cast<std::size_t>(adaptive_grid) * static_cast<std::size_t>(adaptive_grid);
    }
};

inline void to_json(nlohmann::json& j, const AttnCnnConfig& c) {
    j = nlohmann::json{{"conv_filters", c.conv_filters}, {"kernel", c.kernel},
                       {"pool", c.pool},                 {"adaptive_grid", c.adaptive_grid},
                       {"fc_sizes", c.fc_sizes},         {"dropout_rate", c.dropout_rate},
                       {"in_channels", c.in_channels},   {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, AttnCnnConfig& c) {
    j.at("conv_filters").get_to(c.conv_filters);
    j.at("kernel").get_to(c.kernel);
    j.at("pool").get_to(c.pool);
    j.at("adaptive_grid").get_to(c.adaptive_grid);
    j.at("fc_sizes").get_to(c.fc_sizes);
    j.at("dropout_rate").get_to(c.dropout_rate);
    j.at("in_channels").get_to(c.in_channels);
    j.at("seed").get_to(c.seed);
}

// 4 blocks of [conv 3x3 same, relu, 2x2 maxpool], the last block pooling
// adaptively onto a fixed grid, then dense 128 -> 16 -> 1 with dropout after
// the first dense ReLU. Accepts any spatial size the three 2x2 pools survive.
template <typename T>
struct AttnCnnModel {
    AttnCnnConfig config;
    std::array<nn::Conv2d<T>, 4> conv;
    std::array<nn::Relu<T>, 4> conv_relu;
    std::array<nn::MaxPool2d<T>, 3> pool;
    nn::AdaptiveMaxPool2d<T> adaptive_pool;
    nn::Dense<T> fc1, fc2, fc3;
    nn::Relu<T> fc1_relu, fc2_relu;
    nn::Dropout<T> dropout;

    std::vector<nn::Tensor<T>*> params() {
        std::vector<nn::Tensor<T>*> list;
        for (auto& layer : conv) {
            list.push_back(&layer.weight);
            list.push_back(&layer.bias);
        }
        for (nn::Dense<T>* layer : {&fc1, &fc2, &fc3}) {
            list.push_back(&layer->weight);
            list.push_back(&layer->bias);
        }
        return list;
    }

    void zero_grads() {
        for (nn::Tensor<T>* p : params()) p->zero_grad();
    }

    T forward(const nn::Tensor<T>& image, nn::Mode mode, Rng* rng = nullptr) {
        if (image.shape.size() != 3 || image.shape[0] != static_cast<std::size_t>(config.in_channels))
            fail(ErrorCategory::shape,
                 "model forward: expected (" + std::to_string(config.in_channels) +
                     ", k, k) input, got " + nn::shape_string(image.shape));
        nn::Tensor<T> x = conv_relu[0].forward(conv[0].forward(image));
        x = pool[0].forward(x);
        x = conv_relu[1].forward(conv[1].forward(x));
        x = pool[1].forward(x);
        x = conv_relu[2].forward(conv[2].forward(x));
        x = pool[2].forward(x);
        x = conv_relu[3].forward(conv[3].forward(x));
        x = adaptive_pool.forward(x);

        x.shape = {config.flatten_size()};
        x = fc1_relu.forward(fc1.forward(x));
        x = dropout.forward(x, mode, rng);
        x = fc2_relu.forward(fc2.forward(x));
        x = fc3.forward(x);
        return x.data[0];
    }

    // Accumulates parameter gradients for d(output)/d(params) scaled by
    // upstream; returns the input-image gradient.
    nn::Tensor<T> backward(T upstream) {
        nn::Tensor<T> g({1});
        g.data[0] = upstream;
        g = fc3.backward(g);
        g = fc2_relu.backward(g);
        g = fc2.backward(g);
        g = dropout.backward(g);
        g = fc1_relu.backward(g);
        g = fc1.backward(g);
        g.shape = {static_cast<std::size_t>(config.conv_filters[3]),
                   static_cast<std::size_t>(config.adaptive_grid),
                   static_cast<std::size_t>(config.adaptive_grid)};
        g = adaptive_pool.backward(g);
        g = conv_relu[3].backward(g);
        g = conv[3].backward(g);
        g = pool[2].backward(g);
        g = conv_relu[2].backward(g);
        g = conv[2].backward(g);
        g = pool[1].backward(g);
        g = conv_relu[1].backward(g);
        g = conv[1].backward(g);
        g = pool[0].backward(g);
        g = conv_relu[0].backward(g);
        return conv[0].backward(g);
    }
};

template <typename T>
AttnCnnModel<T> build_model(const AttnCnnConfig& config) {
    config.validate();
    AttnCnnModel<T> model;
    model.config = config;
    std::size_t in_c = static_cast<std::size_t>(config.in_channels);
    for (std::size_t b = 0; b < 4; ++b) {
        const auto out_c = static_cast<std::size_t>(config.conv_filters[b]);
        model.conv[b] = nn::Conv2d<T>(in_c, out_c, 3, 1);
        in_c = out_c;
    }
    model.adaptive_pool = nn::AdaptiveMaxPool2d<T>(static_cast<std::size_t>(config.adaptive_grid));
    model.fc1 = nn::Dense<T>(config.flatten_size(), static_cast<std::size_t>(config.fc_sizes[0]));
    model.fc2 = nn::Dense<T>(static_cast<std::size_t>(config.fc_sizes[0]),
                             static_cast<std::size_t>(config.fc_sizes[1]));
    model.fc3 = nn::Dense<T>(static_cast<std::size_t>(config.fc_sizes[1]),
                             static_cast<std::size_t>(config.fc_sizes[2]));
    model.dropout = nn::Dropout<T>(config.dropout_rate);

    Rng rng(derive_seed(config.seed, 0x696e6974ULL));  // "init"
    for (auto& layer : model.conv) layer.init(rng);
    model.fc1.init(rng);
    model.fc2.init(rng);
    model.fc3.init(rng);
    return model;
}

template <typename T>
std::size_t count_params(AttnCnnModel<T>& model) {
    std::size_t total = 0;
    for (nn::Tensor<T>* p : model.params()) total += p->size();
    return total;
}

template <typename T>
nn::Tensor<T> image_to_tensor(const GadfImage& image) {
    nn::Tensor<T> t({static_cast<std::size_t>(kEegChannels), image.size, image.size});
    for (std::size_t i = 0; i < image.data.size(); ++i) t.data[i] = static_cast<T>(image.data[i]);
    return t;
}

}  // namespace gafatt

#endif  // GAFATT_MODEL_HPP
