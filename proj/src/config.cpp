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

#include "mrsr/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace mrsr {

using nlohmann::json;

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::kIso4: return "iso4";
        case ExperimentKind::kIso8: return "iso8";
        case ExperimentKind::kAniso8: return "aniso8";
    }
    return "?";
}

ExperimentKind experiment_from_string(const std::string& s) {
    if (s == "iso4") return ExperimentKind::kIso4;
    if (s == "iso8") return ExperimentKind::kIso8;
    if (s == "aniso8") return ExperimentKind::kAniso8;
    throw ConfigError("unknown experiment '" + s + "' (expected iso4, iso8 or aniso8)");
}

ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    cfg.degradation.factor_h = 0; // derived from the experiment in finalize()
    cfg.degradation.factor_w = 0;
    return cfg;
}

void ExperimentConfig::finalize() {
    int fh = 0, fw = 0;
    switch (experiment) {
        case ExperimentKind::kIso4: fh = 4, fw = 4; break;
        case ExperimentKind::kIso8: fh = 8, fw = 8; break;
        case ExperimentKind::kAniso8: fh = 8, fw = 1; break;
    }
    if (degradation.factor_h != 0 && degradation.factor_h != fh)
        throw ConfigError(std::string("experiment ") + to_string(experiment) + " implies factor_h " +
                          std::to_string(fh) + ", config says " + std::to_string(degradation.factor_h));
    if (degradation.factor_w != 0 && degradation.factor_w != fw)
        throw ConfigError(std::string("experiment ") + to_string(experiment) + " implies factor_w " +
                          std::to_string(fw) + ", config says " + std::to_string(degradation.factor_w));
    degradation.factor_h = fh;
    degradation.factor_w = fw;

    if (generator.stages.empty()) {
        generator.stages = stages_for_factor(fh, fw);
    } else if (generator.factor_h() != fh || generator.factor_w() != fw) {
        throw ConfigError("generator stages give " + std::to_string(generator.factor_h()) + "x" +
                          std::to_string(generator.factor_w()) + ", experiment needs " +
                          std::to_string(fh) + "x" + std::to_string(fw));
    }

    discriminator.in_h = train.hr_crop_h;
    discriminator.in_w = train.hr_crop_w;
    train.seed = seed;

    degradation.validate();
    generator.validate();
    discriminator.validate();
    train.validate();
    if (features.empty()) throw ConfigError("features must name a weights file or synthetic:<seed>");
}

void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
    if (profile == "toy") {
        cfg.generator.channels = 8;
        cfg.generator.residual_blocks = 2;
        cfg.discriminator.channels = 8;
        cfg.train.batch_size = 4;
        cfg.train.pretrain_epochs = 30;
        cfg.train.adversarial_epochs = 4;
        cfg.train.lr = 2e-3;
        cfg.train.hr_crop_h = 96;
        cfg.train.hr_crop_w = 96;
        cfg.train.validation_batch = 4;
        cfg.train.divergence_threshold = 1e5;
        cfg.features = "synthetic:7";
    } else if (profile == "paper") {
        cfg.generator.channels = 64;
        cfg.generator.residual_blocks = 16;
        cfg.discriminator.channels = 64;
        cfg.train.batch_size = 16;
        cfg.train.pretrain_epochs = 20;
        cfg.train.adversarial_epochs = 50;
        cfg.train.lr = 1e-4;
        cfg.train.hr_crop_h = 224;
        cfg.train.hr_crop_w = 224;
        cfg.train.validation_batch = 16;
        cfg.features = "vgg19.mrfe";
    } else {
        throw ConfigError("unknown profile '" + profile + "' (expected toy or paper)");
    }
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("unknown config key '" + where + key + "'");
    }
}

} // namespace

void apply_config_json(ExperimentConfig& cfg, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        check_keys(j, {"experiment", "seed", "features", "output_dir", "generator", "discriminator",
                       "train", "degradation"},
                   "");
        if (j.contains("experiment")) cfg.experiment = experiment_from_string(j["experiment"].get<std::string>());
        if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
        if (j.contains("features")) cfg.features = j["features"].get<std::string>();
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

        if (j.contains("generator")) {
            const auto& g = j["generator"];
            check_keys(g, {"channels", "residual_blocks"}, "generator.");
            if (g.contains("channels")) cfg.generator.channels = g["channels"].get<int>();
            if (g.contains("residual_blocks")) cfg.generator.residual_blocks = g["residual_blocks"].get<int>();
        }
        if (j.contains("discriminator")) {
            const auto& d = j["discriminator"];
            check_keys(d, {"channels"}, "discriminator.");
            if (d.contains("channels")) cfg.discriminator.channels = d["channels"].get<int>();
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            check_keys(t,
                       {"batch_size", "pretrain_epochs", "adversarial_epochs", "lr", "beta1", "beta2",
                        "adam_eps", "content_weight", "adversarial_weight", "divergence_threshold",
                        "hr_crop", "hr_crop_h", "hr_crop_w", "validation_batch"},
                       "train.");
            if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
            if (t.contains("pretrain_epochs")) cfg.train.pretrain_epochs = t["pretrain_epochs"].get<int>();
            if (t.contains("adversarial_epochs"))
                cfg.train.adversarial_epochs = t["adversarial_epochs"].get<int>();
            if (t.contains("lr")) cfg.train.lr = t["lr"].get<double>();
            if (t.contains("beta1")) cfg.train.beta1 = t["beta1"].get<double>();
            if (t.contains("beta2")) cfg.train.beta2 = t["beta2"].get<double>();
            if (t.contains("adam_eps")) cfg.train.adam_eps = t["adam_eps"].get<double>();
            if (t.contains("content_weight")) cfg.train.perceptual.content = t["content_weight"].get<double>();
            if (t.contains("adversarial_weight"))
                cfg.train.perceptual.adversarial = t["adversarial_weight"].get<double>();
            if (t.contains("divergence_threshold"))
                cfg.train.divergence_threshold = t["divergence_threshold"].get<double>();
            if (t.contains("hr_crop")) {
                cfg.train.hr_crop_h = t["hr_crop"].get<int>();
                cfg.train.hr_crop_w = t["hr_crop"].get<int>();
            }
            if (t.contains("hr_crop_h")) cfg.train.hr_crop_h = t["hr_crop_h"].get<int>();
            if (t.contains("hr_crop_w")) cfg.train.hr_crop_w = t["hr_crop_w"].get<int>();
            if (t.contains("validation_batch")) cfg.train.validation_batch = t["validation_batch"].get<int>();
        }
        if (j.contains("degradation")) {
            const auto& d = j["degradation"];
            check_keys(d, {"antialias", "factor_h", "factor_w"}, "degradation.");
            if (d.contains("antialias")) cfg.degradation.antialias = d["antialias"].get<bool>();
            if (d.contains("factor_h")) cfg.degradation.factor_h = d["factor_h"].get<int>();
            if (d.contains("factor_w")) cfg.degradation.factor_w = d["factor_w"].get<int>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    apply_config_json(cfg, text);
}

FeatureWeights resolve_features(const std::string& spec) {
    const std::string prefix = "synthetic:";
    if (spec.rfind(prefix, 0) == 0) {
        try {
            return make_synthetic_features(std::stoull(spec.substr(prefix.size())));
        } catch (const std::logic_error&) {
            throw ConfigError("bad synthetic feature seed in '" + spec + "'");
        }
    }
    return load_features(spec);
}

} // namespace mrsr
