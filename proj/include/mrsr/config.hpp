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

#include <string>

#include "mrsr/degradation.hpp"
#include "mrsr/features.hpp"
#include "mrsr/model.hpp"
#include "mrsr/training.hpp"

namespace mrsr {

// The three training setups: in-plane x4, in-plane x8, and through-plane
// 8x1 on depth-first slices.
enum class ExperimentKind { kIso4, kIso8, kAniso8 };

const char* to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::kIso4;
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    TrainConfig train;
    DegradationSpec degradation; // factors 0 until finalize() derives them
    std::string features = "synthetic:7";
    std::string output_dir = "out";
    uint64_t seed = 0;

    // Derives the experiment-implied pieces (degradation factors,
    // generator stages, discriminator input) and validates the whole.
    // Explicit values that contradict the experiment raise ConfigError.
    void finalize();
};

ExperimentConfig default_experiment_config();

// Presets layered between the defaults and any config file.
// "toy" is a minutes-scale setup; "paper" is the full-size one.
void apply_profile(ExperimentConfig& cfg, const std::string& profile);

// Partial overrides from a JSON object; unknown keys raise ConfigError.
void apply_config_json(ExperimentConfig& cfg, const std::string& json_text);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);

// "synthetic:<seed>" or a weights file path.
FeatureWeights resolve_features(const std::string& spec);

} // namespace mrsr
