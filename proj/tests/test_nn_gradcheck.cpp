/*
 * mrsr : anisotropic super-resolution toolkit for MR slice images
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrsr/model.hpp"
#include "mrsr/nn.hpp"
#include "mrsr/rng.hpp"

using namespace mrsr;

namespace {

using DTensor = TensorT<double>;

DTensor random_dtensor(std::vector<int> dims, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    DTensor t(std::move(dims));
    Rng rng(seed);
    for (auto& v : t.storage()) v = lo + (hi - lo) * rng.uniform();
    return t;
}

double dot(const DTensor& a, const DTensor& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.storage().size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

// Central-difference check of the analytic gradients for a scalar loss
// L(x) = <forward(x), r> with a fixed random projection r. Perturbs every
// input coordinate and, through the ParamRef list, every parameter
// coordinate (strided down to at most `max_probes` per tensor so the big
// end-to-end models stay cheap).
struct GradCheck {
    std::function<DTensor(const DTensor&)> fwd; // train-mode forward
    std::function<DTensor(const DTensor&)> bwd; // backward of the projection
    std::function<std::vector<ParamRef<double>>()> params;
    std::function<void()> zero_grad;
    double h = 1e-5;
    double rtol = 1e-4;
    double atol = 1e-7;
    size_t max_probes = 6;

    void run(const DTensor& x0, uint64_t proj_seed) {
        DTensor x = x0;
        const DTensor y0 = fwd(x);
        const DTensor r = random_dtensor(y0.dims(), proj_seed);

        zero_grad();
        fwd(x);
        const DTensor dx = bwd(r);
        REQUIRE(dx.dims() == x.dims());

        auto check_one = [&](double analytic, double* slot, const std::string& what) {
            const double saved = *slot;
            *slot = saved + h;
            const double lp = dot(fwd(x), r);
            *slot = saved - h;
            const double lm = dot(fwd(x), r);
            *slot = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double err = std::abs(numeric - analytic);
            const double tol = atol + rtol * std::max(std::abs(numeric), std::abs(analytic));
            INFO(what, ": analytic=", analytic, " numeric=", numeric);
            CHECK(err <= tol);
        };

        for (size_t i = 0; i < x.storage().size(); ++i)
            check_one(dx.data()[i], &x.data()[i], "input[" + std::to_string(i) + "]");

        for (auto& p : params()) {
            if (p.grad == nullptr) continue; // running stats carry no gradient
            const size_t n = p.value->storage().size();
            const size_t stride = std::max<size_t>(1, n / max_probes);
            for (size_t i = 0; i < n; i += stride)
                check_one(p.grad->data()[i], &p.value->data()[i],
                          p.name + "[" + std::to_string(i) + "]");
        }
    }
};

template <typename Layer>
GradCheck layer_check(Layer& layer) {
    GradCheck gc;
    gc.fwd = [&layer](const DTensor& x) { return layer.forward(x, true); };
    gc.bwd = [&layer](const DTensor& r) { return layer.backward(r); };
    gc.params = [&layer]() {
        std::vector<ParamRef<double>> out;
        layer.collect(out);
        return out;
    };
    gc.zero_grad = [&layer]() {
        std::vector<ParamRef<double>> out;
        layer.collect(out);
        for (auto& p : out)
            if (p.grad) p.grad->fill(0.0);
    };
    return gc;
}

template <typename Layer>
GradCheck stateless_check(Layer& layer) {
    GradCheck gc;
    gc.fwd = [&layer](const DTensor& x) { return layer.forward(x, true); };
    gc.bwd = [&layer](const DTensor& r) { return layer.backward(r); };
    gc.params = []() { return std::vector<ParamRef<double>>{}; };
    gc.zero_grad = []() {};
    return gc;
}

} // namespace

TEST_SUITE("gradcheck") {

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(3u);
    SUBCASE("stride 1 with padding") {
        Conv2d<double> conv("c", 3, 4, 3, 1, 1);
        conv.init(rng);
        auto gc = layer_check(conv);
        gc.max_probes = 24;
        gc.run(random_dtensor({2, 3, 5, 4}, 11u), 101u);
    }
    SUBCASE("stride 2 without padding") {
        Conv2d<double> conv("c", 2, 3, 3, 2, 0);
        conv.init(rng);
        auto gc = layer_check(conv);
        gc.max_probes = 24;
        gc.run(random_dtensor({2, 2, 7, 7}, 12u), 102u);
    }
    SUBCASE("9x9 kernel with padding 4") {
        Conv2d<double> conv("c", 1, 2, 9, 1, 4);
        conv.init(rng);
        auto gc = layer_check(conv);
        gc.max_probes = 12;
        gc.run(random_dtensor({1, 1, 6, 5}, 13u), 103u);
    }
}

TEST_CASE("batchnorm gradients match finite differences") {
    BatchNorm2d<double> bn("bn", 3);
    auto gc = layer_check(bn);
    gc.max_probes = 3;
    // Batch statistics couple every element, so widen the tolerance floor a
    // touch for the cancellation in the variance term.
    gc.rtol = 3e-4;
    gc.run(random_dtensor({3, 3, 4, 4}, 21u), 201u);
}

TEST_CASE("prelu gradients match finite differences") {
    PReLU<double> act("a");
    // Keep samples away from the kink at zero where the derivative jumps.
    DTensor x = random_dtensor({2, 3, 4, 4}, 31u);
    for (auto& v : x.storage())
        if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
    auto gc = layer_check(act);
    gc.run(x, 301u);
}

TEST_CASE("leaky relu and relu gradients match finite differences") {
    auto nudge = [](DTensor x) {
        for (auto& v : x.storage())
            if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
        return x;
    };
    LeakyReLU<double> leaky(0.2);
    auto gc = stateless_check(leaky);
    gc.run(nudge(random_dtensor({2, 2, 3, 3}, 41u)), 401u);

    ReLU<double> relu;
    auto gc2 = stateless_check(relu);
    gc2.run(nudge(random_dtensor({2, 2, 3, 3}, 42u)), 402u);
}

TEST_CASE("tanh01 and sigmoid gradients match finite differences") {
    Tanh01<double> tanh01;
    auto gc = stateless_check(tanh01);
    gc.run(random_dtensor({2, 1, 3, 3}, 51u, -2.0, 2.0), 501u);

    Sigmoid<double> sigmoid;
    auto gc2 = stateless_check(sigmoid);
    gc2.run(random_dtensor({4, 1}, 52u, -2.0, 2.0), 502u);
}

TEST_CASE("dense gradients match finite differences") {
    Rng rng(6u);
    Dense<double> fc("fc", 5, 3);
    fc.init(rng);
    auto gc = layer_check(fc);
    gc.max_probes = 15;
    gc.run(random_dtensor({4, 5}, 61u), 601u);
}

TEST_CASE("maxpool gradients match finite differences") {
    MaxPool2d<double> pool(2);
    auto gc = stateless_check(pool);
    // Ties between pooled elements would make the loss non-differentiable;
    // random continuous values avoid them almost surely.
    gc.run(random_dtensor({2, 2, 4, 6}, 71u), 701u);
}

TEST_CASE("pixel shuffle gradients match finite differences") {
    PixelShuffle<double> shuffle(2, 1);
    auto gc = stateless_check(shuffle);
    gc.run(random_dtensor({2, 4, 3, 3}, 81u), 801u);
}

TEST_CASE("generator end to end gradients match finite differences") {
    GeneratorConfig cfg;
    cfg.channels = 3;
    cfg.residual_blocks = 1;
    cfg.stages = stages_for_factor(2, 1);
    GeneratorT<double> g(cfg, 91u);

    GradCheck gc;
    gc.fwd = [&g](const DTensor& x) { return g.forward(x, true); };
    gc.bwd = [&g](const DTensor& r) { return g.backward(r); };
    gc.params = [&g]() { return g.parameters(); };
    gc.zero_grad = [&g]() { g.zero_grad(); };
    gc.max_probes = 4;
    gc.rtol = 3e-4;
    gc.run(random_dtensor({1, 1, 4, 4}, 92u, 0.0, 1.0), 901u);
}

TEST_CASE("discriminator end to end gradients match finite differences") {
    DiscriminatorConfig cfg;
    cfg.channels = 2;
    cfg.in_h = 16;
    cfg.in_w = 16;
    DiscriminatorT<double> d(cfg, 93u);

    GradCheck gc;
    gc.fwd = [&d](const DTensor& x) { return d.forward(x, true); };
    gc.bwd = [&d](const DTensor& r) { return d.backward(r); };
    gc.params = [&d]() { return d.parameters(); };
    gc.zero_grad = [&d]() { d.zero_grad(); };
    gc.max_probes = 3;
    gc.rtol = 3e-4;
    // Two samples so the batch norms see per-channel variance.
    gc.run(random_dtensor({2, 1, 16, 16}, 94u, 0.0, 1.0), 902u);
}

TEST_CASE("frozen conv still propagates input gradients") {
    Rng rng(8u);
    Conv2d<double> conv("c", 2, 3, 3, 1, 1);
    conv.init(rng);

    const DTensor x = random_dtensor({1, 2, 4, 4}, 95u);
    const DTensor r = random_dtensor({1, 3, 4, 4}, 96u);

    conv.forward(x, true);
    const DTensor dx_normal = conv.backward(r);

    conv.set_frozen(true);
    conv.forward(x, true);
    const DTensor dx_frozen = conv.backward(r);

    REQUIRE(dx_frozen.dims() == dx_normal.dims());
    for (size_t i = 0; i < dx_normal.storage().size(); ++i)
        CHECK(dx_frozen.data()[i] == doctest::Approx(dx_normal.data()[i]).epsilon(1e-12));
}

} // TEST_SUITE
