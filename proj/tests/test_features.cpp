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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrsr/features.hpp"
#include "mrsr/rng.hpp"

namespace fs = std::filesystem;
using namespace mrsr;

namespace {

Tensor random_gray(int n, int h, int w, uint64_t seed) {
    Tensor t({n, 1, h, w});
    Rng rng(seed);
    for (auto& v : t.storage()) v = static_cast<float>(rng.uniform());
    return t;
}

// Two-channel single 1x1 conv stack with per-channel passthrough weights,
// chosen so normalization and channel mixing are hand checkable.
FeatureWeights passthrough_features() {
    FeatureWeights fw;
    fw.arch.in_channels = 2;
    fw.arch.mean = {0.25, 0.5};
    fw.arch.std_dev = {0.5, 0.25};
    FeatureLayerSpec conv;
    conv.kind = FeatureLayerSpec::Kind::kConv;
    conv.in_c = 2;
    conv.out_c = 2;
    conv.k = 1;
    conv.pad = 0;
    fw.arch.layers = {conv};
    fw.arch.tap = 0;
    // W is (out_c, in_c, 1, 1) row-major: out0 reads ch0, out1 reads ch1.
    fw.conv_params = {{{1.0f, 0.0f, 0.0f, 1.0f}, {0.0f, 0.0f}}};
    return fw;
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("", 0) == 14695981039346656037ull);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
    CHECK(fnv1a64_hex("a", 1) == "af63dc4c8601ec8c");
}

TEST_CASE("feature weights serialize round trip") {
    const FeatureWeights fw = make_synthetic_features(7u);
    const auto bytes = serialize_features(fw);
    const FeatureWeights back = deserialize_features(bytes.data(), bytes.size());

    CHECK(back.arch.tap == fw.arch.tap);
    CHECK(back.arch.in_channels == fw.arch.in_channels);
    CHECK(back.arch.mean == fw.arch.mean);
    CHECK(back.arch.std_dev == fw.arch.std_dev);
    REQUIRE(back.arch.layers.size() == fw.arch.layers.size());
    for (size_t i = 0; i < fw.arch.layers.size(); ++i) {
        CHECK(back.arch.layers[i].kind == fw.arch.layers[i].kind);
        CHECK(back.arch.layers[i].in_c == fw.arch.layers[i].in_c);
        CHECK(back.arch.layers[i].out_c == fw.arch.layers[i].out_c);
        CHECK(back.arch.layers[i].k == fw.arch.layers[i].k);
        CHECK(back.arch.layers[i].pad == fw.arch.layers[i].pad);
    }
    REQUIRE(back.conv_params.size() == fw.conv_params.size());
    for (size_t i = 0; i < fw.conv_params.size(); ++i) {
        CHECK(back.conv_params[i].first == fw.conv_params[i].first);
        CHECK(back.conv_params[i].second == fw.conv_params[i].second);
    }

    // Identical bytes hash identically; a reserialization agrees.
    const auto bytes2 = serialize_features(back);
    CHECK(bytes2 == bytes);
    CHECK(fnv1a64_hex(bytes.data(), bytes.size()) == fnv1a64_hex(bytes2.data(), bytes2.size()));
}

TEST_CASE("different seeds produce different weights and hashes") {
    const auto a = serialize_features(make_synthetic_features(7u));
    const auto b = serialize_features(make_synthetic_features(8u));
    CHECK(a != b);
    CHECK(fnv1a64_hex(a.data(), a.size()) != fnv1a64_hex(b.data(), b.size()));

    const auto a2 = serialize_features(make_synthetic_features(7u));
    CHECK(a == a2);
}

TEST_CASE("corrupted feature blobs are rejected") {
    const FeatureWeights fw = make_synthetic_features(3u);
    auto bytes = serialize_features(fw);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(deserialize_features(bytes.data(), bytes.size()), IngestError);
    }
    SUBCASE("truncated payload") {
        CHECK_THROWS_AS(deserialize_features(bytes.data(), bytes.size() - 5), IngestError);
    }
    SUBCASE("trailing bytes") {
        bytes.push_back(0);
        CHECK_THROWS_AS(deserialize_features(bytes.data(), bytes.size()), IngestError);
    }
    SUBCASE("header json mangled") {
        bytes[12] = 0xff;
        CHECK_THROWS_AS(deserialize_features(bytes.data(), bytes.size()), IngestError);
    }
}

TEST_CASE("feature files round trip on disk") {
    const fs::path dir = fs::temp_directory_path() / "mrsr_test_features";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path path = dir / "feat.mrfe";

    const FeatureWeights fw = make_synthetic_features(5u);
    save_features(path.string(), fw);
    const FeatureWeights back = load_features(path.string());
    CHECK(serialize_features(back) == serialize_features(fw));

    CHECK_THROWS_AS(load_features((dir / "absent.mrfe").string()), IngestError);
    fs::remove_all(dir);
}

TEST_CASE("feature arch validation rejects inconsistent stacks") {
    FeatureArch arch = make_synthetic_features(1u).arch;
    CHECK_NOTHROW(arch.validate());

    FeatureArch bad = arch;
    bad.tap = static_cast<int>(bad.layers.size());
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = arch;
    bad.layers.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = arch;
    bad.std_dev[0] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = arch;
    bad.mean.pop_back();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = arch;
    for (auto& l : bad.layers)
        if (l.kind == FeatureLayerSpec::Kind::kConv) {
            l.in_c += 1;
            break;
        }
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("vgg19 arch has the expected stack layout") {
    const FeatureArch arch = vgg19_feature_arch();
    CHECK_NOTHROW(arch.validate());
    CHECK(arch.in_channels == 3);
    REQUIRE(arch.mean.size() == 3);
    CHECK(arch.mean[0] == doctest::Approx(0.485).epsilon(1e-9));
    CHECK(arch.std_dev[2] == doctest::Approx(0.225).epsilon(1e-9));

    int convs = 0, relus = 0, pools = 0;
    for (const auto& l : arch.layers) {
        switch (l.kind) {
            case FeatureLayerSpec::Kind::kConv: ++convs; break;
            case FeatureLayerSpec::Kind::kRelu: ++relus; break;
            case FeatureLayerSpec::Kind::kMaxPool: ++pools; break;
        }
    }
    CHECK(convs == 16);
    CHECK(pools == 4);

    // The tap sits on the deepest conv, before its activation.
    REQUIRE(arch.tap < static_cast<int>(arch.layers.size()));
    CHECK(arch.layers[static_cast<size_t>(arch.tap)].kind == FeatureLayerSpec::Kind::kConv);
    CHECK(arch.layers[static_cast<size_t>(arch.tap)].out_c == 512);
    for (int i = arch.tap + 1; i < static_cast<int>(arch.layers.size()); ++i)
        FAIL("no layers may follow the tap, found index ", i);

    // Four halvings before the tap give a 16 pixel minimum input.
    int widths = 1;
    for (const auto& l : arch.layers)
        if (l.kind == FeatureLayerSpec::Kind::kMaxPool) widths *= l.k;
    CHECK(widths == 16);

    // Channel plan doubles through the blocks: 64, 128, 256, 512, 512.
    CHECK(arch.layers.front().kind == FeatureLayerSpec::Kind::kConv);
    CHECK(arch.layers.front().in_c == 3);
    CHECK(arch.layers.front().out_c == 64);
}

TEST_CASE("extractor replicates gray input and normalizes per channel") {
    FeatureExtractorT<float> features(passthrough_features());
    CHECK(features.min_input() == std::pair<int, int>(1, 1));

    const Tensor x = random_gray(2, 3, 4, 9u);
    FeatureExtractorT<float> f2(passthrough_features());
    Tensor y = f2.forward(x, false);
    REQUIRE(y.dims() == std::vector<int>({2, 2, 3, 4}));
    for (int n = 0; n < 2; ++n)
        for (int yy = 0; yy < 3; ++yy)
            for (int xx = 0; xx < 4; ++xx) {
                const float v = x.at(n, 0, yy, xx);
                CHECK(y.at(n, 0, yy, xx) == doctest::Approx((v - 0.25f) / 0.5f).epsilon(1e-6));
                CHECK(y.at(n, 1, yy, xx) == doctest::Approx((v - 0.5f) / 0.25f).epsilon(1e-6));
            }
}

TEST_CASE("backward_to_input combines channel gradients through the scaling") {
    FeatureExtractorT<float> features(passthrough_features());
    const Tensor x = random_gray(1, 2, 2, 10u);
    features.forward(x, true);

    Tensor d({1, 2, 2, 2});
    for (auto& v : d.storage()) v = 1.0f;
    const Tensor dg = features.backward_to_input(d);
    REQUIRE(dg.dims() == std::vector<int>({1, 1, 2, 2}));
    // d_gray = d_ch0 / std0 + d_ch1 / std1 = 1/0.5 + 1/0.25 = 6.
    for (float v : dg.storage()) CHECK(v == doctest::Approx(6.0f).epsilon(1e-6));
}

TEST_CASE("extractor enforces its minimum input size") {
    const FeatureWeights fw = make_synthetic_features(7u);
    FeatureExtractorT<float> features(fw);
    const auto [mh, mw] = features.min_input();
    CHECK(mh == 2);
    CHECK(mw == 2);

    CHECK_NOTHROW(features.forward(random_gray(1, mh, mw, 11u), false));
    CHECK_THROWS_AS(features.forward(random_gray(1, mh - 1, mw, 12u), false), ShapeError);

    const Tensor color({1, 3, 8, 8});
    CHECK_THROWS_AS(features.forward(color, false), ShapeError);
}

TEST_CASE("weights stay frozen through forward and backward passes") {
    const FeatureWeights fw = make_synthetic_features(7u);
    FeatureExtractorT<float> features(fw);
    const std::string h0 = features.weights_hash();
    CHECK(features.hash_now() == h0);

    const Tensor x = random_gray(2, 6, 6, 13u);
    Tensor feat = features.forward(x, true);
    Tensor d(feat.dims());
    Rng rng(14u);
    for (auto& v : d.storage()) v = static_cast<float>(rng.normal());
    features.backward_to_input(d);

    CHECK(features.hash_now() == h0);

    // A second extractor from the same weights reports the same hash.
    FeatureExtractorT<float> again(fw);
    CHECK(again.weights_hash() == h0);
}

TEST_CASE("synthetic extractor responds to its input") {
    FeatureExtractorT<float> features(make_synthetic_features(7u));
    const Tensor a = random_gray(1, 8, 8, 15u);
    Tensor b = a;
    b.at(0, 0, 4, 4) += 0.5f;

    const Tensor fa = features.forward(a, false);
    const Tensor fb = features.forward(b, false);
    REQUIRE(fa.dims() == fb.dims());
    bool any_diff = false;
    for (size_t i = 0; i < fa.storage().size(); ++i)
        if (fa.storage()[i] != fb.storage()[i]) any_diff = true;
    CHECK(any_diff);
}

} // TEST_SUITE
