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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mrsr/image.hpp"

namespace mrsr {

// Seeded test volumes: a smooth background with hard-edged ellipsoids
// and boxes on top, so interpolation-based baselines visibly blur.
struct PhantomSpec {
    int h = 96;
    int w = 96;
    int d = 32;
    int structures = 14;
    uint64_t seed = 0;
    std::array<double, 3> spacing{0.7, 0.7, 3.0}; // (sh, sw, sd) mm
    std::string patient_id = "phantom000";
};

Volume make_phantom_volume(const PhantomSpec& spec);

// Volumes phantom000..phantomNNN with per-volume derived seeds.
std::vector<Volume> make_phantom_cohort(int count, uint64_t seed, int h, int w, int d);

} // namespace mrsr
