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
#include <utility>
#include <vector>

#include "mrsr/errors.hpp"
#include "mrsr/nn.hpp"

namespace mrsr {

// Architecture of a frozen conv feature stack used by the content loss.
// Layers up to and including `tap` are executed; with the tap on a conv
// layer the features are taken before that conv's activation.

struct FeatureLayerSpec {
    enum class Kind { kConv, kRelu, kMaxPool };
    Kind kind = Kind::kConv;
    int in_c = 0;
    int out_c = 0;
    int k = 3;
    int pad = 1;
};

struct FeatureArch {
    std::vector<FeatureLayerSpec> layers;
    int tap = 0;
    int in_channels = 3;
    std::vector<double> mean;
    std::vector<double> std_dev;

    void validate() const;
};

struct FeatureWeights {
    FeatureArch arch;
    // One (W, b) pair per conv layer, in layer order. W is flattened
    // (out_c, in_c, k, k) row-major.
    std::vector<std::pair<std::vector<float>, std::vector<float>>> conv_params;
};

std::vector<unsigned char> serialize_features(const FeatureWeights& fw);
FeatureWeights deserialize_features(const unsigned char* data, size_t size);
void save_features(const std::string& path, const FeatureWeights& fw);
FeatureWeights load_features(const std::string& path);

uint64_t fnv1a64(const void* data, size_t size);
std::string fnv1a64_hex(const void* data, size_t size);

// VGG19 feature layout with the tap on the last conv, pre-activation,
// and ImageNet channel statistics. Weights come from a separate export.
FeatureArch vgg19_feature_arch();

// Small seeded random extractor for tests and the toy profile.
FeatureWeights make_synthetic_features(uint64_t seed);

template <typename T>
class FeatureExtractorT {
public:
    FeatureExtractorT() = default;

    explicit FeatureExtractorT(const FeatureWeights& fw) : arch_(fw.arch) {
        arch_.validate();
        const auto bytes = serialize_features(fw);
        hash_ = fnv1a64_hex(bytes.data(), bytes.size());

        size_t ci = 0;
        for (int i = 0; i <= arch_.tap; ++i) {
            const auto& spec = arch_.layers[static_cast<size_t>(i)];
            switch (spec.kind) {
                case FeatureLayerSpec::Kind::kConv: {
                    Conv2d<T> conv("feat" + std::to_string(i), spec.in_c, spec.out_c, spec.k, 1, spec.pad);
                    const auto& [wv, bv] = fw.conv_params.at(ci++);
                    auto& w = conv.weight();
                    auto& b = conv.bias();
                    for (int64_t j = 0; j < w.numel(); ++j) w[j] = static_cast<T>(wv[static_cast<size_t>(j)]);
                    for (int64_t j = 0; j < b.numel(); ++j) b[j] = static_cast<T>(bv[static_cast<size_t>(j)]);
                    conv.set_frozen(true);
                    convs_.push_back(std::move(conv));
                    break;
                }
                case FeatureLayerSpec::Kind::kRelu:
                    relus_.emplace_back();
                    break;
                case FeatureLayerSpec::Kind::kMaxPool:
                    pools_.emplace_back(spec.k);
                    break;
            }
        }
    }

    const FeatureArch& arch() const { return arch_; }
    const std::string& weights_hash() const { return hash_; }

    // Smallest input that still yields a 1x1 tap response.
    std::pair<int, int> min_input() const {
        int need = 1;
        for (int i = arch_.tap; i >= 0; --i) {
            const auto& spec = arch_.layers[static_cast<size_t>(i)];
            if (spec.kind == FeatureLayerSpec::Kind::kConv)
                need = need + spec.k - 1 - 2 * spec.pad;
            else if (spec.kind == FeatureLayerSpec::Kind::kMaxPool)
                need = need * spec.k;
            need = std::max(need, 1);
        }
        return {need, need};
    }

    // Input is a grayscale batch in [0,1]; it is replicated across the
    // extractor's channels and normalized with the stored statistics.
    TensorT<T> forward(const TensorT<T>& gray, bool keep_ctx) {
        if (gray.ndim() != 4 || gray.dim(1) != 1)
            throw ShapeError("feature extractor expects (n,1,h,w) input, got " + gray.shape_str());
        const auto [mh, mw] = min_input();
        if (gray.dim(2) < mh || gray.dim(3) < mw)
            throw ShapeError("feature extractor input " + std::to_string(gray.dim(2)) + "x" +
                             std::to_string(gray.dim(3)) + " is below the minimum " +
                             std::to_string(mh) + "x" + std::to_string(mw));

        const int n = gray.dim(0), h = gray.dim(2), w = gray.dim(3);
        const int cc = arch_.in_channels;
        TensorT<T> x({n, cc, h, w});
        const int64_t hw = static_cast<int64_t>(h) * w;
        for (int s = 0; s < n; ++s) {
            const T* src = gray.data() + s * hw;
            for (int c = 0; c < cc; ++c) {
                const T mu = static_cast<T>(arch_.mean[static_cast<size_t>(c)]);
                const T inv_sd = static_cast<T>(1.0 / arch_.std_dev[static_cast<size_t>(c)]);
                T* dst = x.data() + (static_cast<int64_t>(s) * cc + c) * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] = (src[i] - mu) * inv_sd;
            }
        }

        size_t ci = 0, ri = 0, pi = 0;
        for (int i = 0; i <= arch_.tap; ++i) {
            switch (arch_.layers[static_cast<size_t>(i)].kind) {
                case FeatureLayerSpec::Kind::kConv: x = convs_[ci++].forward(x, keep_ctx); break;
                case FeatureLayerSpec::Kind::kRelu: x = relus_[ri++].forward(x, keep_ctx); break;
                case FeatureLayerSpec::Kind::kMaxPool: x = pools_[pi++].forward(x, keep_ctx); break;
            }
        }
        return x;
    }

    // Propagates a tap-feature gradient back to the grayscale input.
    TensorT<T> backward_to_input(const TensorT<T>& d_feat) {
        TensorT<T> d = d_feat;
        size_t ci = convs_.size(), ri = relus_.size(), pi = pools_.size();
        for (int i = arch_.tap; i >= 0; --i) {
            switch (arch_.layers[static_cast<size_t>(i)].kind) {
                case FeatureLayerSpec::Kind::kConv: d = convs_[--ci].backward(d); break;
                case FeatureLayerSpec::Kind::kRelu: d = relus_[--ri].backward(d); break;
                case FeatureLayerSpec::Kind::kMaxPool: d = pools_[--pi].backward(d); break;
            }
        }
        const int n = d.dim(0), h = d.dim(2), w = d.dim(3);
        const int cc = arch_.in_channels;
        TensorT<T> dg({n, 1, h, w});
        const int64_t hw = static_cast<int64_t>(h) * w;
        for (int s = 0; s < n; ++s) {
            T* dst = dg.data() + s * hw;
            for (int c = 0; c < cc; ++c) {
                const T inv_sd = static_cast<T>(1.0 / arch_.std_dev[static_cast<size_t>(c)]);
                const T* src = d.data() + (static_cast<int64_t>(s) * cc + c) * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] += src[i] * inv_sd;
            }
        }
        return dg;
    }

    // Hash of the current weights, for asserting the stack stays frozen.
    std::string hash_now() {
        FeatureWeights fw;
        fw.arch = arch_;
        size_t ci = 0;
        for (int i = 0; i <= arch_.tap; ++i) {
            if (arch_.layers[static_cast<size_t>(i)].kind != FeatureLayerSpec::Kind::kConv) continue;
            auto& conv = convs_[ci++];
            std::vector<float> wv(static_cast<size_t>(conv.weight().numel()));
            std::vector<float> bv(static_cast<size_t>(conv.bias().numel()));
            for (size_t j = 0; j < wv.size(); ++j) wv[j] = static_cast<float>(conv.weight()[static_cast<int64_t>(j)]);
            for (size_t j = 0; j < bv.size(); ++j) bv[j] = static_cast<float>(conv.bias()[static_cast<int64_t>(j)]);
            fw.conv_params.emplace_back(std::move(wv), std::move(bv));
        }
        const auto bytes = serialize_features(fw);
        return fnv1a64_hex(bytes.data(), bytes.size());
    }

private:
    FeatureArch arch_;
    std::string hash_;
    std::vector<Conv2d<T>> convs_;
    std::vector<ReLU<T>> relus_;
    std::vector<MaxPool2d<T>> pools_;
};

using FeatureExtractor = FeatureExtractorT<float>;

} // namespace mrsr
