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
#include <utility>

#include "mrsr/image.hpp"

namespace mrsr {

enum class ResampleKernel { kBicubic };
enum class BoundaryMode { kReplicate, kReflect };

// Synthetic LR generation: integer per-axis downscale factors. Isotropic iff
// factor_h == factor_w.
struct DegradationSpec {
    int factor_h = 4;
    int factor_w = 4;
    ResampleKernel kernel = ResampleKernel::kBicubic;
    bool antialias = true;

    void validate() const {
        if (factor_h < 1 || factor_w < 1)
            throw ConfigError("DegradationSpec: factors must be >= 1");
    }
    bool isotropic() const { return factor_h == factor_w; }
};

// Kernel constant and boundary handling, exposed so baselines reproduce
// bit-exact across runs.
struct ResampleParams {
    double kernel_a = -0.5; // Keys cubic parameter
    BoundaryMode boundary = BoundaryMode::kReplicate;
};

// Separable bicubic reduction by the spec's integer factors. With
// antialias=true the kernel support is widened by the factor. Output is
// clamped to [0,1]; factors (1,1) return the input bit-exactly.
SliceImage downsample(const SliceImage& img, const DegradationSpec& spec,
                      const ResampleParams& params = {});

// Separable bicubic magnification; the non-learned baseline.
SliceImage bicubic_upsample(const SliceImage& img, int factor_h, int factor_w,
                            const ResampleParams& params = {});

// Pixel-replication magnification. Display helper for LR panels in image
// grids; not a baseline.
SliceImage nearest_upsample(const SliceImage& img, int factor_h, int factor_w);

// (lr, hr) training pair: hr is the input, lr its degraded version.
std::pair<SliceImage, SliceImage> make_pair(const SliceImage& img, const DegradationSpec& spec,
                                            const ResampleParams& params = {});

BoundaryMode boundary_mode_from_string(const std::string& s);
const char* to_string(BoundaryMode m);

} // namespace mrsr
