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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrsr/errors.hpp"
#include "mrsr/nn.hpp"

namespace mrsr {

// One sub-pixel stage; rh and rw may differ, which is what makes the
// generator anisotropy-capable.
struct UpscaleStage {
    int rh = 2;
    int rw = 2;
};

struct GeneratorConfig {
    int channels = 64;
    int residual_blocks = 16;
    std::vector<UpscaleStage> stages;

    int factor_h() const {
        int f = 1;
        for (const auto& s : stages) f *= s.rh;
        return f;
    }
    int factor_w() const {
        int f = 1;
        for (const auto& s : stages) f *= s.rw;
        return f;
    }

    void validate() const {
        if (channels < 1) throw ConfigError("generator channels must be >= 1");
        if (residual_blocks < 1) throw ConfigError("generator residual_blocks must be >= 1");
        for (const auto& s : stages)
            if (s.rh < 1 || s.rw < 1) throw ConfigError("upscale stage rates must be >= 1");
        auto ok = [](int f) { return f == 1 || f == 2 || f == 4 || f == 8; };
        if (!ok(factor_h()) || !ok(factor_w()))
            throw ConfigError("total upscale factor must be 1, 2, 4 or 8 per axis, got " +
                              std::to_string(factor_h()) + "x" + std::to_string(factor_w()));
    }
};

// Decomposes a per-axis factor pair into x2 stages, e.g. (8,1) becomes
// three (2,1) stages and (4,4) two (2,2) stages.
inline std::vector<UpscaleStage> stages_for_factor(int factor_h, int factor_w) {
    auto log2_of = [](int f, const char* axis) {
        switch (f) {
            case 1: return 0;
            case 2: return 1;
            case 4: return 2;
            case 8: return 3;
            default:
                throw ConfigError(std::string("upscale factor along ") + axis +
                                  " must be 1, 2, 4 or 8, got " + std::to_string(f));
        }
    };
    const int nh = log2_of(factor_h, "h");
    const int nw = log2_of(factor_w, "w");
    std::vector<UpscaleStage> stages;
    for (int i = 0; i < std::max(nh, nw); ++i)
        stages.push_back({i < nh ? 2 : 1, i < nw ? 2 : 1});
    return stages;
}

inline int64_t conv_params(int in_c, int out_c, int k) {
    return static_cast<int64_t>(out_c) * in_c * k * k + out_c;
}

inline int64_t generator_parameter_count(const GeneratorConfig& cfg) {
    const int64_t c = cfg.channels;
    int64_t total = conv_params(1, cfg.channels, 9) + 1; // head conv + PReLU
    total += cfg.residual_blocks * (2 * conv_params(cfg.channels, cfg.channels, 3) + 2 * (2 * c) + 1);
    total += conv_params(cfg.channels, cfg.channels, 3) + 2 * c; // mid conv + BN
    for (const auto& s : cfg.stages)
        total += conv_params(cfg.channels, cfg.channels * s.rh * s.rw, 3) + 1;
    total += conv_params(cfg.channels, 1, 9); // tail conv
    return total;
}

// SRResNet-style generator: 9x9 head, residual blocks with a local skip,
// a global skip around the block stack, sub-pixel upscale stages, 9x9 tail,
// and a shifted-tanh output that stays inside [0,1].
template <typename T>
class GeneratorT {
public:
    GeneratorT() = default;

    GeneratorT(GeneratorConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        const int c = cfg_.channels;
        Rng rng(seed);

        head_conv_ = Conv2d<T>("head.conv", 1, c, 9, 1, 4);
        head_act_ = PReLU<T>("head.act");
        for (int i = 0; i < cfg_.residual_blocks; ++i) {
            const std::string p = "res" + std::to_string(i);
            blocks_.push_back({Conv2d<T>(p + ".conv1", c, c, 3, 1, 1),
                               BatchNorm2d<T>(p + ".bn1", c),
                               PReLU<T>(p + ".act"),
                               Conv2d<T>(p + ".conv2", c, c, 3, 1, 1),
                               BatchNorm2d<T>(p + ".bn2", c)});
        }
        mid_conv_ = Conv2d<T>("mid.conv", c, c, 3, 1, 1);
        mid_bn_ = BatchNorm2d<T>("mid.bn", c);
        for (size_t i = 0; i < cfg_.stages.size(); ++i) {
            const auto& s = cfg_.stages[i];
            const std::string p = "up" + std::to_string(i);
            stages_.push_back({Conv2d<T>(p + ".conv", c, c * s.rh * s.rw, 3, 1, 1),
                               PixelShuffle<T>(s.rh, s.rw),
                               PReLU<T>(p + ".act")});
        }
        tail_conv_ = Conv2d<T>("tail.conv", c, 1, 9, 1, 4);

        head_conv_.init(rng);
        for (auto& b : blocks_) {
            b.conv1.init(rng);
            b.conv2.init(rng);
        }
        mid_conv_.init(rng);
        for (auto& s : stages_) s.conv.init(rng);
        tail_conv_.init(rng);
    }

    const GeneratorConfig& config() const { return cfg_; }

    TensorT<T> forward(const TensorT<T>& x, bool train = false) {
        if (x.ndim() != 4 || x.dim(1) != 1)
            throw ShapeError("generator expects (n,1,h,w) input, got " + x.shape_str());
        TensorT<T> a0 = head_act_.forward(head_conv_.forward(x, train), train);
        TensorT<T> a = a0;
        for (auto& b : blocks_) {
            TensorT<T> r = b.conv1.forward(a, train);
            r = b.bn1.forward(r, train);
            r = b.act.forward(r, train);
            r = b.conv2.forward(r, train);
            r = b.bn2.forward(r, train);
            r.add_(a);
            a = std::move(r);
        }
        TensorT<T> f = mid_bn_.forward(mid_conv_.forward(a, train), train);
        f.add_(a0);
        for (auto& s : stages_) {
            f = s.conv.forward(f, train);
            f = s.shuffle.forward(f, train);
            f = s.act.forward(f, train);
        }
        return out_.forward(tail_conv_.forward(f, train), train);
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> d = tail_conv_.backward(out_.backward(dy));
        for (auto it = stages_.rbegin(); it != stages_.rend(); ++it)
            d = it->conv.backward(it->shuffle.backward(it->act.backward(d)));
        TensorT<T> d_skip = d; // global skip feeds the head activation directly
        d = mid_conv_.backward(mid_bn_.backward(d));
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
            TensorT<T> dr = it->bn2.backward(d);
            dr = it->conv2.backward(dr);
            dr = it->act.backward(dr);
            dr = it->bn1.backward(dr);
            dr = it->conv1.backward(dr);
            d.add_(dr);
        }
        d.add_(d_skip);
        return head_conv_.backward(head_act_.backward(d));
    }

    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        head_conv_.collect(out);
        head_act_.collect(out);
        for (auto& b : blocks_) {
            b.conv1.collect(out);
            b.bn1.collect(out);
            b.act.collect(out);
            b.conv2.collect(out);
            b.bn2.collect(out);
        }
        mid_conv_.collect(out);
        mid_bn_.collect(out);
        for (auto& s : stages_) {
            s.conv.collect(out);
            s.act.collect(out);
        }
        tail_conv_.collect(out);
        return out;
    }

    void zero_grad() {
        for (auto& p : parameters())
            if (p.grad) p.grad->fill(T(0));
    }

    int64_t param_count() {
        int64_t total = 0;
        for (auto& p : parameters())
            if (p.grad) total += p.value->numel();
        return total;
    }

private:
    struct ResBlock {
        Conv2d<T> conv1;
        BatchNorm2d<T> bn1;
        PReLU<T> act;
        Conv2d<T> conv2;
        BatchNorm2d<T> bn2;
    };
    struct Stage {
        Conv2d<T> conv;
        PixelShuffle<T> shuffle;
        PReLU<T> act;
    };

    GeneratorConfig cfg_;
    Conv2d<T> head_conv_;
    PReLU<T> head_act_;
    std::vector<ResBlock> blocks_;
    Conv2d<T> mid_conv_;
    BatchNorm2d<T> mid_bn_;
    std::vector<Stage> stages_;
    Conv2d<T> tail_conv_;
    Tanh01<T> out_;
};

struct DiscriminatorConfig {
    int channels = 64;
    int in_h = 224;
    int in_w = 224;

    void validate() const {
        if (channels < 1) throw ConfigError("discriminator channels must be >= 1");
        if (in_h < 16 || in_w < 16)
            throw ConfigError("discriminator input must be at least 16x16");
        if (in_h % 16 != 0 || in_w % 16 != 0)
            throw ConfigError("discriminator input dims must be multiples of 16, got " +
                              std::to_string(in_h) + "x" + std::to_string(in_w));
    }
};

inline int64_t discriminator_parameter_count(const DiscriminatorConfig& cfg) {
    const int64_t c = cfg.channels;
    int64_t total = conv_params(1, cfg.channels, 3);
    const int chans[8] = {1, 1, 2, 2, 4, 4, 8, 8};
    for (int i = 1; i < 8; ++i) {
        const int in_c = cfg.channels * chans[i - 1];
        const int out_c = cfg.channels * chans[i];
        total += conv_params(in_c, out_c, 3) + 2 * out_c;
    }
    const int64_t flat = 8 * c * (cfg.in_h / 16) * (cfg.in_w / 16);
    total += flat * 16 * c + 16 * c;
    total += 16 * c + 1;
    return total;
}

// Eight 3x3 conv blocks with stride pattern 1,2,1,2,... and doubling widths,
// then two dense layers ending in a single probability.
template <typename T>
class DiscriminatorT {
public:
    DiscriminatorT() = default;

    DiscriminatorT(DiscriminatorConfig cfg, uint64_t seed) : cfg_(cfg) {
        cfg_.validate();
        const int c = cfg_.channels;
        Rng rng(seed);

        const int widths[8] = {c, c, 2 * c, 2 * c, 4 * c, 4 * c, 8 * c, 8 * c};
        int in_c = 1;
        for (int i = 0; i < 8; ++i) {
            const int stride = (i % 2 == 0) ? 1 : 2;
            const std::string p = "d" + std::to_string(i);
            convs_[i] = Conv2d<T>(p + ".conv", in_c, widths[i], 3, stride, 1);
            if (i > 0) bns_[i] = BatchNorm2d<T>(p + ".bn", widths[i]);
            acts_[i] = LeakyReLU<T>(0.2);
            in_c = widths[i];
        }
        flat_dim_ = 8 * c * (cfg_.in_h / 16) * (cfg_.in_w / 16);
        fc1_ = Dense<T>("fc1", static_cast<int>(flat_dim_), 16 * c);
        fc1_act_ = LeakyReLU<T>(0.2);
        fc2_ = Dense<T>("fc2", 16 * c, 1);

        for (auto& conv : convs_) conv.init(rng);
        fc1_.init(rng);
        fc2_.init(rng);
    }

    const DiscriminatorConfig& config() const { return cfg_; }

    TensorT<T> forward(const TensorT<T>& x, bool train = false) {
        if (x.ndim() != 4 || x.dim(1) != 1 || x.dim(2) != cfg_.in_h || x.dim(3) != cfg_.in_w)
            throw ShapeError("discriminator expects (n,1," + std::to_string(cfg_.in_h) + "," +
                             std::to_string(cfg_.in_w) + ") input, got " + x.shape_str());
        TensorT<T> a = x;
        for (int i = 0; i < 8; ++i) {
            a = convs_[i].forward(a, train);
            if (i > 0) a = bns_[i].forward(a, train);
            a = acts_[i].forward(a, train);
        }
        conv_out_dims_ = a.dims();
        a = a.reshaped({a.dim(0), static_cast<int>(flat_dim_)});
        a = fc1_act_.forward(fc1_.forward(a, train), train);
        return sigmoid_.forward(fc2_.forward(a, train), train);
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> d = fc2_.backward(sigmoid_.backward(dy));
        d = fc1_.backward(fc1_act_.backward(d));
        d = d.reshaped(conv_out_dims_);
        for (int i = 7; i >= 0; --i) {
            d = acts_[i].backward(d);
            if (i > 0) d = bns_[i].backward(d);
            d = convs_[i].backward(d);
        }
        return d;
    }

    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        for (int i = 0; i < 8; ++i) {
            convs_[i].collect(out);
            if (i > 0) bns_[i].collect(out);
        }
        fc1_.collect(out);
        fc2_.collect(out);
        return out;
    }

    void zero_grad() {
        for (auto& p : parameters())
            if (p.grad) p.grad->fill(T(0));
    }

    int64_t param_count() {
        int64_t total = 0;
        for (auto& p : parameters())
            if (p.grad) total += p.value->numel();
        return total;
    }

private:
    DiscriminatorConfig cfg_;
    Conv2d<T> convs_[8];
    BatchNorm2d<T> bns_[8];
    LeakyReLU<T> acts_[8];
    int64_t flat_dim_ = 0;
    Dense<T> fc1_;
    LeakyReLU<T> fc1_act_;
    Dense<T> fc2_;
    Sigmoid<T> sigmoid_;
    std::vector<int> conv_out_dims_;
};

using Generator = GeneratorT<float>;
using Discriminator = DiscriminatorT<float>;

} // namespace mrsr
