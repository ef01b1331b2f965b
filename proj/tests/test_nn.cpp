#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gafatt/nn/adam.hpp"
#include "gafatt/nn/grad_check.hpp"
#include "gafatt/nn/layers.hpp"
#include "gafatt/nn/loss.hpp"
#include "gafatt/nn/tensor.hpp"
#include "gafatt/rng.hpp"

using namespace gafatt;
using nn::Mode;
using nn::Tensor;

namespace {

Tensor<double> random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Fixed projection so scalar losses see every output coordinate.
std::vector<double> projection(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> r(n);
    for (auto& v : r) v = rng.uniform(-1.0, 1.0);
    return r;
}

double dot(const Tensor<double>& t, const std::vector<double>& r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) sum += t.data[i] * r[i];
    return sum;
}

Tensor<double> from_projection(const nn::Shape& shape, const std::vector<double>& r) {
    Tensor<double> g(shape);
    g.data.assign(r.begin(), r.end());
    return g;
}

}  // namespace

TEST_CASE("conv2d forward: all-ones 3x3, no padding") {
    nn::Conv2d<double> conv(1, 1, 3, 0);
    std::fill(conv.weight.data.begin(), conv.weight.data.end(), 1.0);
    Tensor<double> input({1, 3, 3});
    std::fill(input.data.begin(), input.data.end(), 1.0);
    const auto out = conv.forward(input);
    REQUIRE(out.shape == nn::Shape{1, 1, 1});
    REQUIRE(out.data[0] == 9.0);
}

TEST_CASE("conv2d forward: delta kernel with same padding is the identity") {
    nn::Conv2d<double> conv(2, 2, 3, 1);
    // kernel[co][ci][1][1] = (co == ci)
    conv.weight.data.assign(conv.weight.size(), 0.0);
    for (std::size_t co = 0; co < 2; ++co) conv.weight.data[(co * 2 + co) * 9 + 4] = 1.0;
    Rng rng(3);
    const auto input = random_tensor({2, 5, 6}, rng);
    const auto out = conv.forward(input);
    REQUIRE(out.shape == input.shape);
    for (std::size_t i = 0; i < input.size(); ++i)
        REQUIRE(out.data[i] == Catch::Approx(input.data[i]).margin(1e-15));
}

TEST_CASE("conv2d same-padding path agrees with valid convolution on a padded input") {
    Rng rng(43);
    nn::Conv2d<double> same(2, 3, 3, 1);
    same.init(rng);
    nn::Conv2d<double> valid(2, 3, 3, 0);
    valid.weight.data = same.weight.data;
    valid.bias.data = same.bias.data;

    const auto input = random_tensor({2, 5, 6}, rng);
    Tensor<double> padded({2, 7, 8});
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 5; ++y)
            for (std::size_t x = 0; x < 6; ++x)
                padded.data[(c * 7 + y + 1) * 8 + x + 1] = input.data[(c * 5 + y) * 6 + x];

    const auto out_same = same.forward(input);
    const auto out_valid = valid.forward(padded);
    REQUIRE(out_same.shape == out_valid.shape);
    for (std::size_t i = 0; i < out_same.size(); ++i)
        REQUIRE(out_same.data[i] == Catch::Approx(out_valid.data[i]).margin(1e-12));

    // Gradients agree too: same upstream, compare weight/bias grads and the
    // interior of the padded input gradient.
    const auto r = projection(out_same.size(), 17);
    same.weight.zero_grad();
    same.bias.zero_grad();
    valid.weight.zero_grad();
    valid.bias.zero_grad();
    const auto gin_same = same.backward(from_projection(out_same.shape, r));
    const auto gin_valid = valid.backward(from_projection(out_valid.shape, r));
    for (std::size_t i = 0; i < same.weight.grad.size(); ++i)
        REQUIRE(same.weight.grad[i] == Catch::Approx(valid.weight.grad[i]).margin(1e-12));
    for (std::size_t i = 0; i < same.bias.grad.size(); ++i)
        REQUIRE(same.bias.grad[i] == Catch::Approx(valid.bias.grad[i]).margin(1e-12));
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 5; ++y)
            for (std::size_t x = 0; x < 6; ++x)
                REQUIRE(gin_same.data[(c * 5 + y) * 6 + x] ==
                        Catch::Approx(gin_valid.data[(c * 7 + y + 1) * 8 + x + 1]).margin(1e-12));
}

TEST_CASE("conv2d rejects a channel mismatch") {
    nn::Conv2d<double> conv(3, 4);
    Tensor<double> wrong({2, 5, 5});
    REQUIRE_THROWS_MATCHES(conv.forward(wrong), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::shape;
                           }));
}

TEST_CASE("conv2d gradients match central finite differences") {
    Rng rng(5);
    nn::Conv2d<double> conv(2, 3, 3, 1);
    conv.init(rng);
    Tensor<double> input = random_tensor({2, 6, 7}, rng);
    input.ensure_grad();
    const auto r = projection(3 * 6 * 7, 99);

    auto loss_fn = [&] { return dot(conv.forward(input), r); };
    loss_fn();
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    const auto grad_in = conv.backward(from_projection({3, 6, 7}, r));
    input.grad = grad_in.data;

    std::vector<Tensor<double>*> params = {&input, &conv.weight, &conv.bias};
    const double err = nn::grad_check(params, loss_fn, 1e-3);
    REQUIRE(err < 1e-4);
}

TEST_CASE("relu forward/backward anchors") {
    nn::Relu<double> relu;
    Tensor<double> input({3});
    input.data = {-1.0, 0.0, 2.0};
    const auto out = relu.forward(input);
    REQUIRE(out.data == std::vector<double>{0.0, 0.0, 2.0});

    Tensor<double> gout({3});
    gout.data = {5.0, 5.0, 5.0};
    REQUIRE(relu.backward(gout).data == std::vector<double>{0.0, 0.0, 5.0});
}

TEST_CASE("relu gradient check away from the kink") {
    Rng rng(7);
    nn::Relu<double> relu;
    Tensor<double> input({40});
    for (auto& v : input.data) {
        do {
            v = rng.uniform(-1.0, 1.0);
        } while (std::abs(v) < 1e-2);
    }
    input.ensure_grad();
    const auto r = projection(40, 55);
    auto loss_fn = [&] { return dot(relu.forward(input), r); };
    loss_fn();
    input.grad = relu.backward(from_projection({40}, r)).data;
    std::vector<Tensor<double>*> params = {&input};
    REQUIRE(nn::grad_check(params, loss_fn, 1e-3) < 1e-6);
}

TEST_CASE("maxpool2d anchors and error paths") {
    nn::MaxPool2d<double> pool;
    Tensor<double> a({1, 2, 2});
    a.data = {1.0, 2.0, 3.0, 4.0};
    const auto pooled = pool.forward(a);
    REQUIRE(pooled.shape == nn::Shape{1, 1, 1});
    REQUIRE(pooled.data[0] == 4.0);

    Rng rng(9);
    const auto odd = random_tensor({3, 5, 5}, rng);
    REQUIRE(pool.forward(odd).shape == nn::Shape{3, 2, 2});

    Tensor<double> thin({1, 1, 4});
    REQUIRE_THROWS_MATCHES(pool.forward(thin), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::shape;
                           }));
}

TEST_CASE("maxpool2d routes tied gradients to the first row-major element") {
    nn::MaxPool2d<double> pool;
    Tensor<double> equal({1, 2, 2});
    equal.data = {7.0, 7.0, 7.0, 7.0};
    pool.forward(equal);
    Tensor<double> gout({1, 1, 1});
    gout.data = {1.0};
    const auto gin = pool.backward(gout);
    REQUIRE(gin.data == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("adaptive_maxpool2d quadrants, identity, and uneven bins") {
    nn::AdaptiveMaxPool2d<double> pool(2);
    Tensor<double> input({1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) input.data[i] = static_cast<double>(i);
    const auto out = pool.forward(input);
    REQUIRE(out.data == std::vector<double>{5.0, 7.0, 13.0, 15.0});

    // H = W = S is the identity.
    nn::AdaptiveMaxPool2d<double> same(3);
    Rng rng(11);
    const auto square = random_tensor({2, 3, 3}, rng);
    REQUIRE(same.forward(square).data == square.data);

    // H=6, S=4: row bins {0,1}, {1,2}, {3,4}, {4,5}.
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_lo(0, 6, 4) == 0);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_hi(0, 6, 4) == 2);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_lo(1, 6, 4) == 1);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_hi(1, 6, 4) == 3);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_lo(2, 6, 4) == 3);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_hi(2, 6, 4) == 5);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_lo(3, 6, 4) == 4);
    REQUIRE(nn::AdaptiveMaxPool2d<double>::bin_hi(3, 6, 4) == 6);

    nn::AdaptiveMaxPool2d<double> four(4);
    Tensor<double> six({1, 6, 6});
    for (std::size_t i = 0; i < 36; ++i) six.data[i] = static_cast<double>(i);
    const auto pooled = four.forward(six);
    // With increasing values the bin max is its bottom-right corner.
    REQUIRE(pooled.data[0] == 6.0 + 1.0);    // rows {0,1} x cols {0,1}
    REQUIRE(pooled.data[15] == 5.0 * 6 + 5);  // rows {4,5} x cols {4,5}
}

TEST_CASE("dense anchors, shapes, and gradient check") {
    nn::Dense<double> identity(3, 3);
    identity.weight.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    Tensor<double> input({3});
    input.data = {4.0, -2.0, 0.5};
    REQUIRE(identity.forward(input).data == input.data);

    nn::Dense<double> layer(128, 16);
    REQUIRE(layer.weight.shape == nn::Shape{16, 128});

    Tensor<double> wrong({5});
    REQUIRE_THROWS_AS(layer.forward(wrong), Error);

    Rng rng(13);
    nn::Dense<double> dense(10, 4);
    dense.init(rng);
    Tensor<double> x = random_tensor({10}, rng);
    x.ensure_grad();
    const auto r = projection(4, 77);
    auto loss_fn = [&] { return dot(dense.forward(x), r); };
    loss_fn();
    dense.weight.zero_grad();
    dense.bias.zero_grad();
    x.grad = dense.backward(from_projection({4}, r)).data;
    std::vector<Tensor<double>*> params = {&x, &dense.weight, &dense.bias};
    REQUIRE(nn::grad_check(params, loss_fn, 1e-3) < 1e-6);
}

TEST_CASE("dropout: identity cases and error") {
    Rng rng(17);
    Tensor<double> input({64});
    for (auto& v : input.data) v = rng.uniform(-1.0, 1.0);

    nn::Dropout<double> off(0.0);
    REQUIRE(off.forward(input, Mode::train, &rng).data == input.data);
    REQUIRE(off.forward(input, Mode::eval, nullptr).data == input.data);

    nn::Dropout<double> half(0.5);
    REQUIRE(half.forward(input, Mode::eval, nullptr).data == input.data);

    REQUIRE_THROWS_MATCHES(nn::Dropout<double>(1.0), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::config;
                           }));
    REQUIRE_THROWS_AS(nn::Dropout<double>(-0.1), Error);
}

TEST_CASE("dropout: survivor statistics and mask-consistent backward") {
    const std::size_t n = 100000;
    Tensor<double> ones({n});
    std::fill(ones.data.begin(), ones.data.end(), 1.0);
    Rng rng(19);
    nn::Dropout<double> half(0.5);
    const auto out = half.forward(ones, Mode::train, &rng);

    std::size_t survivors = 0;
    double sum = 0.0;
    for (double v : out.data) {
        if (v != 0.0) {
            ++survivors;
            REQUIRE(v == 2.0);
        }
        sum += v;
    }
    const double sigma = std::sqrt(0.25 * static_cast<double>(n));
    REQUIRE(std::abs(static_cast<double>(survivors) - 0.5 * n) <= 3.0 * sigma);
    REQUIRE(std::abs(sum / static_cast<double>(n) - 1.0) <= 0.02);

    Tensor<double> gout({n});
    std::fill(gout.data.begin(), gout.data.end(), 1.0);
    const auto gin = half.backward(gout);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(gin.data[i] == out.data[i]);
}

TEST_CASE("mse loss values and gradients") {
    const std::vector<double> p1 = {3.0}, t1 = {5.0};
    REQUIRE(nn::mse_loss<double>(p1, t1) == 4.0);

    const std::vector<double> p2 = {1.0, -2.0, 0.5};
    REQUIRE(nn::mse_loss<double>(p2, p2) == 0.0);
    for (double g : nn::mse_loss_grad<double>(p2, p2)) REQUIRE(g == 0.0);

    const std::vector<double> p3 = {0.0, 4.0}, t3 = {0.0, 0.0};
    REQUIRE(nn::mse_loss<double>(p3, t3) == 8.0);
    REQUIRE(nn::mse_loss_grad<double>(p3, t3) == std::vector<double>{0.0, 4.0});

    const std::vector<double> short_t = {1.0};
    REQUIRE_THROWS_AS(nn::mse_loss<double>(p3, short_t), Error);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor<double> w({4});
    w.data = {1.0, -2.0, 3.0, 0.5};
    w.ensure_grad();
    std::vector<Tensor<double>*> params = {&w};
    nn::AdamState<double> state(params, 0.1);
    const auto before = w.data;
    nn::adam_step<double>(params, state);
    REQUIRE(w.data == before);
    REQUIRE(state.t == 1);
}

TEST_CASE("adam: bias-corrected first step is about -lr * sign(g)") {
    for (double g : {0.3, -1.7, 42.0}) {
        Tensor<double> w({1});
        w.data = {1.0};
        w.ensure_grad();
        w.grad = {g};
        std::vector<Tensor<double>*> params = {&w};
        const double lr = 0.05;
        nn::AdamState<double> state(params, lr);
        nn::adam_step<double>(params, state);
        const double update = w.data[0] - 1.0;
        const double expected = -lr * (g > 0 ? 1.0 : -1.0);
        REQUIRE(std::abs(update - expected) <= lr * state.config.epsilon / std::abs(g) + 1e-15);
    }
}

TEST_CASE("adam: identical calls from identical state give identical results") {
    Rng rng(23);
    auto make = [&](Rng r) {
        Tensor<double> w({8});
        for (auto& v : w.data) v = r.uniform(-1.0, 1.0);
        w.ensure_grad();
        for (auto& g : w.grad) g = r.uniform(-1.0, 1.0);
        return w;
    };
    Tensor<double> w1 = make(rng.derive(1));
    Tensor<double> w2 = make(rng.derive(1));
    std::vector<Tensor<double>*> p1 = {&w1}, p2 = {&w2};
    nn::AdamState<double> s1(p1, 0.01), s2(p2, 0.01);
    nn::adam_step<double>(p1, s1);
    nn::adam_step<double>(p2, s2);
    REQUIRE(w1.data == w2.data);
    REQUIRE(s1.m == s2.m);
    REQUIRE(s1.v == s2.v);
}

TEST_CASE("adam with zero betas and huge epsilon reduces to scaled gradient descent") {
    // Weights start at zero so the post-step value IS the update, free of
    // cancellation against the old weight.
    Tensor<double> w({6});
    w.ensure_grad();
    w.grad = {0.5, -1.5, 2.0, -3.0, 0.25, 4.0};
    std::vector<Tensor<double>*> params = {&w};
    nn::AdamState<double> state(params, 1.0, {.beta1 = 0.0, .beta2 = 0.0, .epsilon = 1e12});
    const auto grads = w.grad;
    nn::adam_step<double>(params, state);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double expected = -grads[i] / 1e12;
        REQUIRE(std::abs(w.data[i] - expected) <= std::abs(expected) * 1e-9);
    }
}

TEST_CASE("adam monotonically reduces a fixed quadratic for 50 steps") {
    Rng rng(29);
    Tensor<double> w({20});
    std::fill(w.data.begin(), w.data.end(), 0.0);
    w.ensure_grad();
    std::vector<double> c(20);
    for (auto& v : c) v = rng.uniform(1.0, 2.0);

    auto loss = [&] {
        double sum = 0.0;
        for (std::size_t i = 0; i < 20; ++i) sum += (w.data[i] - c[i]) * (w.data[i] - c[i]);
        return sum;
    };
    std::vector<Tensor<double>*> params = {&w};
    nn::AdamState<double> state(params, 1e-2);
    double previous = loss();
    for (int step = 0; step < 50; ++step) {
        for (std::size_t i = 0; i < 20; ++i) w.grad[i] = 2.0 * (w.data[i] - c[i]);
        nn::adam_step<double>(params, state);
        const double now = loss();
        REQUIRE(now <= previous);
        previous = now;
    }
}

TEST_CASE("lr_schedule anchors") {
    REQUIRE(nn::lr_schedule(0, 0.0025, 0.9) == 0.0025);
    REQUIRE(std::abs(nn::lr_schedule(2, 0.002, 0.9) - 0.00162) <= 1e-12);
    REQUIRE(nn::lr_schedule(17, 0.0025, 1.0) == 0.0025);
}

TEST_CASE("grad_check: exact on a pure linear layer") {
    // Magnitudes are kept in [0.5, 1.5] so no gradient is small enough for
    // cancellation noise to dominate the relative error.
    Rng rng(31);
    auto bounded = [&] { return rng.uniform(0.5, 1.5) * (rng.uniform01() < 0.5 ? -1.0 : 1.0); };
    nn::Dense<double> dense(6, 3);
    for (auto& w : dense.weight.data) w = bounded();
    for (auto& b : dense.bias.data) b = bounded();
    Tensor<double> x({6});
    for (auto& v : x.data) v = bounded();
    std::vector<double> r(3);
    for (auto& v : r) v = bounded();

    auto loss_fn = [&] { return dot(dense.forward(x), r); };
    loss_fn();
    dense.weight.zero_grad();
    dense.bias.zero_grad();
    dense.backward(from_projection({3}, r));
    std::vector<Tensor<double>*> params = {&dense.weight, &dense.bias};
    REQUIRE(nn::grad_check(params, loss_fn, 0.5) < 1e-10);
}

TEST_CASE("grad_check: conv-relu-adaptive-dense chain under 1e-4") {
    Rng rng(37);
    nn::Conv2d<double> conv(3, 4, 3, 1);
    conv.init(rng);
    nn::Relu<double> relu;
    nn::AdaptiveMaxPool2d<double> pool(3);
    nn::Dense<double> dense(4 * 3 * 3, 1);
    dense.init(rng);
    Tensor<double> input = random_tensor({3, 5, 6}, rng);

    auto loss_fn = [&] {
        auto x = relu.forward(conv.forward(input));
        x = pool.forward(x);
        x.shape = {4 * 3 * 3};
        return dense.forward(x).data[0];
    };
    // The seed keeps every pre-activation away from the ReLU kink, so the
    // h = 1e-3 probes stay on one linear piece.
    {
        const auto pre = conv.forward(input);
        double closest = 1e9;
        for (double v : pre.data) closest = std::min(closest, std::abs(v));
        REQUIRE(closest > 5e-3);
    }
    loss_fn();
    for (auto* p : {&conv.weight, &conv.bias, &dense.weight, &dense.bias}) p->zero_grad();
    Tensor<double> gout({1});
    gout.data = {1.0};
    auto g = dense.backward(gout);
    g.shape = {4, 3, 3};
    conv.backward(relu.backward(pool.backward(g)));

    std::vector<Tensor<double>*> params = {&conv.weight, &conv.bias, &dense.weight, &dense.bias};
    REQUIRE(nn::grad_check(params, loss_fn, 1e-3) < 1e-4);
}

TEST_CASE("grad_check: a single sign flip is detected above 1e-2") {
    Rng rng(41);
    nn::Conv2d<double> conv(2, 3, 3, 1);
    conv.init(rng);
    nn::Dense<double> dense(3 * 4 * 4, 1);
    dense.init(rng);
    nn::AdaptiveMaxPool2d<double> pool(4);
    Tensor<double> input = random_tensor({2, 6, 6}, rng);

    auto loss_fn = [&] {
        auto x = pool.forward(conv.forward(input));
        x.shape = {3 * 4 * 4};
        return dense.forward(x).data[0];
    };
    loss_fn();
    for (auto* p : {&conv.weight, &conv.bias, &dense.weight, &dense.bias}) p->zero_grad();
    Tensor<double> gout({1});
    gout.data = {1.0};
    auto g = dense.backward(gout);
    g.shape = {3, 4, 4};
    conv.backward(pool.backward(g));

    // Corrupt one substantial component of the analytic gradient.
    std::size_t victim = 0;
    for (std::size_t i = 0; i < dense.weight.grad.size(); ++i)
        if (std::abs(dense.weight.grad[i]) > std::abs(dense.weight.grad[victim])) victim = i;
    REQUIRE(std::abs(dense.weight.grad[victim]) > 1e-3);
    dense.weight.grad[victim] = -dense.weight.grad[victim];

    std::vector<Tensor<double>*> params = {&conv.weight, &conv.bias, &dense.weight, &dense.bias};
    REQUIRE(nn::grad_check(params, loss_fn, 1e-3) > 1e-2);
}

TEST_CASE("grad_check rejects a non-deterministic fragment") {
    Tensor<double> w({2});
    w.ensure_grad();
    std::vector<Tensor<double>*> params = {&w};
    int calls = 0;
    auto noisy = [&] { return static_cast<double>(++calls); };
    REQUIRE_THROWS_MATCHES(nn::grad_check(params, noisy, 1e-3), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::check;
                           }));
}
