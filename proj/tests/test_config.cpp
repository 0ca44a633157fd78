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

#include <filesystem>
#include <fstream>
#include <string>

#include "mrsr/config.hpp"

namespace fs = std::filesystem;
using namespace mrsr;

TEST_SUITE("config") {

TEST_CASE("experiment names round trip") {
    for (ExperimentKind k : {ExperimentKind::kIso4, ExperimentKind::kIso8, ExperimentKind::kAniso8})
        CHECK(experiment_from_string(to_string(k)) == k);
    CHECK(std::string(to_string(ExperimentKind::kIso4)) == "iso4");
    CHECK(std::string(to_string(ExperimentKind::kIso8)) == "iso8");
    CHECK(std::string(to_string(ExperimentKind::kAniso8)) == "aniso8");
    CHECK_THROWS_AS(experiment_from_string("iso16"), ConfigError);
}

TEST_CASE("finalize derives factors and stages per experiment") {
    SUBCASE("iso4") {
        ExperimentConfig cfg = default_experiment_config();
        cfg.experiment = ExperimentKind::kIso4;
        cfg.finalize();
        CHECK(cfg.degradation.factor_h == 4);
        CHECK(cfg.degradation.factor_w == 4);
        CHECK(cfg.generator.factor_h() == 4);
        CHECK(cfg.generator.factor_w() == 4);
        CHECK(cfg.generator.stages.size() == 2);
    }
    SUBCASE("iso8") {
        ExperimentConfig cfg = default_experiment_config();
        cfg.experiment = ExperimentKind::kIso8;
        cfg.finalize();
        CHECK(cfg.degradation.factor_h == 8);
        CHECK(cfg.degradation.factor_w == 8);
        CHECK(cfg.generator.stages.size() == 3);
    }
    SUBCASE("aniso8") {
        ExperimentConfig cfg = default_experiment_config();
        cfg.experiment = ExperimentKind::kAniso8;
        cfg.finalize();
        CHECK(cfg.degradation.factor_h == 8);
        CHECK(cfg.degradation.factor_w == 1);
        REQUIRE(cfg.generator.stages.size() == 3);
        for (const auto& s : cfg.generator.stages) {
            CHECK(s.rh == 2);
            CHECK(s.rw == 1);
        }
    }
}

TEST_CASE("finalize aligns the discriminator input with the training crop") {
    ExperimentConfig cfg = default_experiment_config();
    apply_profile(cfg, "toy");
    cfg.finalize();
    CHECK(cfg.discriminator.in_h == cfg.train.hr_crop_h);
    CHECK(cfg.discriminator.in_w == cfg.train.hr_crop_w);
    CHECK(cfg.train.seed == cfg.seed);
}

TEST_CASE("explicit factors that contradict the experiment are rejected") {
    ExperimentConfig cfg = default_experiment_config();
    cfg.experiment = ExperimentKind::kIso4;
    cfg.degradation.factor_h = 8;
    CHECK_THROWS_AS(cfg.finalize(), ConfigError);

    cfg = default_experiment_config();
    cfg.experiment = ExperimentKind::kAniso8;
    cfg.degradation.factor_w = 8;
    CHECK_THROWS_AS(cfg.finalize(), ConfigError);

    // Matching explicit factors pass.
    cfg = default_experiment_config();
    cfg.experiment = ExperimentKind::kAniso8;
    cfg.degradation.factor_h = 8;
    cfg.degradation.factor_w = 1;
    CHECK_NOTHROW(cfg.finalize());
}

TEST_CASE("explicit stages that contradict the experiment are rejected") {
    ExperimentConfig cfg = default_experiment_config();
    cfg.experiment = ExperimentKind::kIso4;
    cfg.generator.stages = stages_for_factor(8, 8);
    CHECK_THROWS_AS(cfg.finalize(), ConfigError);

    cfg = default_experiment_config();
    cfg.experiment = ExperimentKind::kIso4;
    cfg.generator.stages = stages_for_factor(4, 4);
    CHECK_NOTHROW(cfg.finalize());
}

TEST_CASE("profiles set their scale parameters") {
    ExperimentConfig toy = default_experiment_config();
    apply_profile(toy, "toy");
    CHECK(toy.generator.channels == 8);
    CHECK(toy.generator.residual_blocks == 2);
    CHECK(toy.train.batch_size == 4);
    CHECK(toy.train.hr_crop_h == 96);
    CHECK(toy.features.rfind("synthetic:", 0) == 0);

    ExperimentConfig paper = default_experiment_config();
    apply_profile(paper, "paper");
    CHECK(paper.generator.channels == 64);
    CHECK(paper.generator.residual_blocks == 16);
    CHECK(paper.train.batch_size == 16);
    CHECK(paper.train.pretrain_epochs == 20);
    CHECK(paper.train.adversarial_epochs == 50);
    CHECK(paper.train.lr == 1e-4);
    CHECK(paper.train.hr_crop_h == 224);

    ExperimentConfig bad = default_experiment_config();
    CHECK_THROWS_AS(apply_profile(bad, "huge"), ConfigError);
}

TEST_CASE("json overrides layer on top of the current config") {
    ExperimentConfig cfg = default_experiment_config();
    apply_profile(cfg, "toy");
    apply_config_json(cfg, R"({
        "experiment": "aniso8",
        "seed": 99,
        "generator": {"channels": 12},
        "train": {"batch_size": 2, "pretrain_epochs": 5},
        "degradation": {"antialias": false}
    })");

    CHECK(cfg.experiment == ExperimentKind::kAniso8);
    CHECK(cfg.seed == 99);
    CHECK(cfg.generator.channels == 12);
    // Untouched profile values survive.
    CHECK(cfg.generator.residual_blocks == 2);
    CHECK(cfg.train.batch_size == 2);
    CHECK(cfg.train.pretrain_epochs == 5);
    CHECK(cfg.train.adversarial_epochs == 4);
    CHECK(cfg.degradation.antialias == false);

    cfg.finalize();
    CHECK(cfg.degradation.factor_h == 8);
    CHECK(cfg.degradation.factor_w == 1);
}

TEST_CASE("unknown config keys are rejected at every level") {
    ExperimentConfig cfg = default_experiment_config();
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"experimnet": "iso4"})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"generator": {"depth": 3}})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"train": {"learning_rate": 0.1}})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(cfg, R"({"degradation": {"kernel": "box"}})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(cfg, "not json"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(cfg, "[1,2]"), ConfigError);

    try {
        apply_config_json(cfg, R"({"generator": {"depth": 3}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("generator.depth") != std::string::npos);
    }
}

TEST_CASE("config files apply like inline json") {
    const fs::path dir = fs::temp_directory_path() / "mrsr_test_config";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path path = dir / "exp.json";
    {
        std::ofstream out(path);
        out << R"({"experiment": "iso8", "train": {"hr_crop": 48}})";
    }

    ExperimentConfig cfg = default_experiment_config();
    apply_profile(cfg, "toy");
    apply_config_file(cfg, path.string());
    CHECK(cfg.experiment == ExperimentKind::kIso8);
    CHECK(cfg.train.hr_crop_h == 48);
    CHECK(cfg.train.hr_crop_w == 48);

    CHECK_THROWS_AS(apply_config_file(cfg, (dir / "absent.json").string()), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("resolve_features builds synthetic stacks or loads files") {
    const FeatureWeights synth = resolve_features("synthetic:7");
    CHECK(serialize_features(synth) == serialize_features(make_synthetic_features(7u)));

    const FeatureWeights other = resolve_features("synthetic:8");
    CHECK(serialize_features(other) != serialize_features(synth));

    CHECK_THROWS_AS(resolve_features("synthetic:notanumber"), ConfigError);
    CHECK_THROWS_AS(resolve_features(""), IngestError);
    CHECK_THROWS_AS(resolve_features("/nonexistent/path.mrfe"), IngestError);

    const fs::path dir = fs::temp_directory_path() / "mrsr_test_resolve";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path path = dir / "w.mrfe";
    save_features(path.string(), synth);
    const FeatureWeights loaded = resolve_features(path.string());
    CHECK(serialize_features(loaded) == serialize_features(synth));
    fs::remove_all(dir);
}

TEST_CASE("crop below the feature minimum still finalizes; training validates later") {
    // finalize() checks structural consistency only; the runtime pieces
    // (trainer, extractor) own their own constraints.
    ExperimentConfig cfg = default_experiment_config();
    apply_profile(cfg, "toy");
    apply_config_json(cfg, R"({"train": {"hr_crop": 32, "batch_size": 1}})");
    CHECK_NOTHROW(cfg.finalize());
    CHECK(cfg.discriminator.in_h == 32);
}

} // TEST_SUITE
