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

#include "mrsr/features.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mrsr/rng.hpp"

namespace mrsr {

using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'M', 'R', 'F', 'E', '1'};

void append_u32(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void append_floats(std::vector<unsigned char>& out, const std::vector<float>& v) {
    const size_t at = out.size();
    out.resize(at + v.size() * sizeof(float));
    std::memcpy(out.data() + at, v.data(), v.size() * sizeof(float));
}

json arch_to_json(const FeatureArch& arch) {
    json layers = json::array();
    for (const auto& l : arch.layers) {
        switch (l.kind) {
            case FeatureLayerSpec::Kind::kConv:
                layers.push_back({{"type", "conv"}, {"in", l.in_c}, {"out", l.out_c}, {"k", l.k}, {"pad", l.pad}});
                break;
            case FeatureLayerSpec::Kind::kRelu:
                layers.push_back({{"type", "relu"}});
                break;
            case FeatureLayerSpec::Kind::kMaxPool:
                layers.push_back({{"type", "maxpool"}, {"k", l.k}});
                break;
        }
    }
    return json{{"layers", layers},
                {"tap", arch.tap},
                {"in_channels", arch.in_channels},
                {"mean", arch.mean},
                {"std", arch.std_dev}};
}

FeatureArch arch_from_json(const json& j) {
    FeatureArch arch;
    for (const auto& jl : j.at("layers")) {
        FeatureLayerSpec l;
        const std::string type = jl.at("type").get<std::string>();
        if (type == "conv") {
            l.kind = FeatureLayerSpec::Kind::kConv;
            l.in_c = jl.at("in").get<int>();
            l.out_c = jl.at("out").get<int>();
            l.k = jl.at("k").get<int>();
            l.pad = jl.at("pad").get<int>();
        } else if (type == "relu") {
            l.kind = FeatureLayerSpec::Kind::kRelu;
        } else if (type == "maxpool") {
            l.kind = FeatureLayerSpec::Kind::kMaxPool;
            l.k = jl.at("k").get<int>();
        } else {
            throw IngestError("unknown feature layer type '" + type + "'");
        }
        arch.layers.push_back(l);
    }
    arch.tap = j.at("tap").get<int>();
    arch.in_channels = j.at("in_channels").get<int>();
    arch.mean = j.at("mean").get<std::vector<double>>();
    arch.std_dev = j.at("std").get<std::vector<double>>();
    return arch;
}

} // namespace

void FeatureArch::validate() const {
    if (layers.empty()) throw ConfigError("feature arch has no layers");
    if (tap < 0 || tap >= static_cast<int>(layers.size()))
        throw ConfigError("feature tap " + std::to_string(tap) + " out of range");
    if (in_channels < 1) throw ConfigError("feature in_channels must be >= 1");
    if (mean.size() != static_cast<size_t>(in_channels) || std_dev.size() != static_cast<size_t>(in_channels))
        throw ConfigError("feature mean/std length must match in_channels");
    for (double s : std_dev)
        if (!(s > 0.0)) throw ConfigError("feature std entries must be positive");
    int cur = in_channels;
    for (const auto& l : layers) {
        if (l.kind == FeatureLayerSpec::Kind::kConv) {
            if (l.in_c != cur)
                throw ConfigError("feature conv expects " + std::to_string(l.in_c) +
                                  " input channels but gets " + std::to_string(cur));
            if (l.out_c < 1 || l.k < 1 || l.pad < 0) throw ConfigError("bad feature conv geometry");
            cur = l.out_c;
        } else if (l.kind == FeatureLayerSpec::Kind::kMaxPool && l.k < 1) {
            throw ConfigError("bad feature maxpool size");
        }
    }
}

std::vector<unsigned char> serialize_features(const FeatureWeights& fw) {
    const std::string header = arch_to_json(fw.arch).dump();
    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
    append_u32(out, static_cast<uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    for (const auto& [w, b] : fw.conv_params) {
        append_floats(out, w);
        append_floats(out, b);
    }
    return out;
}

FeatureWeights deserialize_features(const unsigned char* data, size_t size) {
    if (size < sizeof(kMagic) + 4 || std::memcmp(data, kMagic, sizeof(kMagic)) != 0)
        throw IngestError("not a feature weights blob (bad magic)");
    uint32_t header_len = 0;
    std::memcpy(&header_len, data + sizeof(kMagic), 4);
    size_t at = sizeof(kMagic) + 4;
    if (at + header_len > size) throw IngestError("feature weights header truncated");

    FeatureWeights fw;
    try {
        fw.arch = arch_from_json(json::parse(data + at, data + at + header_len));
    } catch (const json::exception& e) {
        throw IngestError(std::string("feature weights header is not valid JSON: ") + e.what());
    }
    fw.arch.validate();
    at += header_len;

    for (const auto& l : fw.arch.layers) {
        if (l.kind != FeatureLayerSpec::Kind::kConv) continue;
        const size_t wn = static_cast<size_t>(l.out_c) * l.in_c * l.k * l.k;
        const size_t bn = static_cast<size_t>(l.out_c);
        if (at + (wn + bn) * sizeof(float) > size)
            throw IngestError("feature weights payload truncated");
        std::vector<float> w(wn), b(bn);
        std::memcpy(w.data(), data + at, wn * sizeof(float));
        at += wn * sizeof(float);
        std::memcpy(b.data(), data + at, bn * sizeof(float));
        at += bn * sizeof(float);
        fw.conv_params.emplace_back(std::move(w), std::move(b));
    }
    if (at != size) throw IngestError("feature weights file has trailing bytes");
    return fw;
}

void save_features(const std::string& path, const FeatureWeights& fw) {
    const auto bytes = serialize_features(fw);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestError("short write to '" + path + "'");
}

FeatureWeights load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open feature weights '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_features(bytes.data(), bytes.size());
}

uint64_t fnv1a64(const void* data, size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const void* data, size_t size) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(data, size);
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

FeatureArch vgg19_feature_arch() {
    FeatureArch arch;
    arch.in_channels = 3;
    arch.mean = {0.485, 0.456, 0.406};
    arch.std_dev = {0.229, 0.224, 0.225};

    const int plan[5] = {2, 2, 4, 4, 4};
    const int widths[5] = {64, 128, 256, 512, 512};
    int in_c = 3;
    for (int block = 0; block < 5; ++block) {
        for (int i = 0; i < plan[block]; ++i) {
            FeatureLayerSpec conv;
            conv.kind = FeatureLayerSpec::Kind::kConv;
            conv.in_c = in_c;
            conv.out_c = widths[block];
            conv.k = 3;
            conv.pad = 1;
            arch.layers.push_back(conv);
            in_c = widths[block];
            // The last conv of the last block is the tap; its activation
            // and the final pool are not part of the stack.
            if (block == 4 && i == plan[block] - 1) break;
            FeatureLayerSpec relu;
            relu.kind = FeatureLayerSpec::Kind::kRelu;
            arch.layers.push_back(relu);
        }
        if (block < 4) {
            FeatureLayerSpec pool;
            pool.kind = FeatureLayerSpec::Kind::kMaxPool;
            pool.k = 2;
            arch.layers.push_back(pool);
        }
    }
    arch.tap = static_cast<int>(arch.layers.size()) - 1;
    return arch;
}

FeatureWeights make_synthetic_features(uint64_t seed) {
    FeatureWeights fw;
    auto& arch = fw.arch;
    arch.in_channels = 3;
    arch.mean = {0.5, 0.5, 0.5};
    arch.std_dev = {0.25, 0.25, 0.25};

    auto conv = [](int in_c, int out_c) {
        FeatureLayerSpec l;
        l.kind = FeatureLayerSpec::Kind::kConv;
        l.in_c = in_c;
        l.out_c = out_c;
        return l;
    };
    FeatureLayerSpec relu;
    relu.kind = FeatureLayerSpec::Kind::kRelu;
    FeatureLayerSpec pool;
    pool.kind = FeatureLayerSpec::Kind::kMaxPool;
    pool.k = 2;

    arch.layers = {conv(3, 8), relu, pool, conv(8, 16), relu, conv(16, 16)};
    arch.tap = static_cast<int>(arch.layers.size()) - 1;

    Rng rng(seed);
    for (const auto& l : arch.layers) {
        if (l.kind != FeatureLayerSpec::Kind::kConv) continue;
        const size_t wn = static_cast<size_t>(l.out_c) * l.in_c * l.k * l.k;
        const double stddev = std::sqrt(2.0 / (static_cast<double>(l.in_c) * l.k * l.k));
        std::vector<float> w(wn);
        for (auto& v : w) v = static_cast<float>(rng.normal() * stddev);
        std::vector<float> b(static_cast<size_t>(l.out_c), 0.0f);
        fw.conv_params.emplace_back(std::move(w), std::move(b));
    }
    return fw;
}

} // namespace mrsr
