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

#include <filesystem>

#include "mrsr/image.hpp"

namespace mrsr {

// Portable volume file (.mrvol): magic "MRVOL1", a little-endian uint32
// header length, a JSON header {h, w, d, spacing, patient_id, plane}, then
// h*w*d float32 little-endian voxels in (z, y, x) order. Round trips are
// bit-exact.
void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume_file(const std::filesystem::path& path);

} // namespace mrsr
