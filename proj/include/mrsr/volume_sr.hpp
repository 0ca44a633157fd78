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

#include <functional>

#include "mrsr/dataset.hpp"
#include "mrsr/image.hpp"
#include "mrsr/model.hpp"

namespace mrsr {

// Slice-level reconstruction function: receives a depth-first slice
// (depth along the image rows) and must magnify the row axis by the
// planned factor while keeping the column count.
using SliceSrFn = std::function<SliceImage(const SliceImage&)>;

struct VolumeSRPlan {
    int depth_factor = 8;
    bool fuse_both_axes = true;

    void validate() const;
};

// Runs the slice function over every through-plane slice along one axis
// and restacks the results into a volume with depth_factor times the
// slices. Depth spacing shrinks by the same factor.
Volume superresolve_stack(const Volume& lr, ThroughAxis axis, int depth_factor,
                          const SliceSrFn& sr);

// Voxel-wise mean of two reconstructions of the same volume.
Volume fuse_volumes(const Volume& a, const Volume& b);

// Full reconstruction: one or both through-plane axes, fused.
Volume reconstruct_volume(const Volume& lr, const VolumeSRPlan& plan, const SliceSrFn& sr);

// Non-learned baseline: bicubic interpolation along depth only.
Volume upsample_depth_bicubic(const Volume& lr, int factor);

// Wraps a generator as a slice function. The generator's row upscale
// must equal the planned depth factor and its column upscale must be 1;
// slices pass through at their native size.
SliceSrFn make_generator_slice_fn(Generator& g);

// Bicubic stand-in with the same calling convention.
SliceSrFn make_bicubic_slice_fn(int factor);

} // namespace mrsr
