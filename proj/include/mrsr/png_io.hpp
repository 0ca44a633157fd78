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

// 8-bit grayscale PNG view of a [0,1] image. Lossy; used for figure export
// and CLI image input, never for training data storage.
void save_png(const SliceImage& img, const std::filesystem::path& path);

// Reads 8- or 16-bit grayscale PNG (color inputs are rejected) into [0,1].
SliceImage load_png(const std::filesystem::path& path);

} // namespace mrsr
