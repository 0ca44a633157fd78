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

#include "mrsr/volume_sr.hpp"

#include <cmath>

#include "mrsr/degradation.hpp"
#include "mrsr/errors.hpp"
#include "mrsr/slice_tensor.hpp"

namespace mrsr {

void VolumeSRPlan::validate() const {
    if (depth_factor != 1 && depth_factor != 2 && depth_factor != 4 && depth_factor != 8)
        throw PlanError("depth_factor must be 1, 2, 4 or 8, got " + std::to_string(depth_factor));
}

Volume superresolve_stack(const Volume& lr, ThroughAxis axis, int depth_factor,
                          const SliceSrFn& sr) {
    lr.validate();
    if (depth_factor < 1) throw PlanError("depth_factor must be >= 1");

    const auto slices = extract_throughplane_slices(lr, axis);
    std::vector<SliceImage> out;
    out.reserve(slices.size());
    for (const auto& slice : slices) {
        // Slice is (first_axis x depth); hand the function a depth-first
        // view so it magnifies depth along the rows.
        const SliceImage fed = transpose(slice);
        SliceImage up = sr(fed);
        if (up.h != fed.h * depth_factor || up.w != fed.w)
            throw PlanError("slice function returned " + std::to_string(up.h) + "x" +
                            std::to_string(up.w) + " for a " + std::to_string(fed.h) + "x" +
                            std::to_string(fed.w) + " input with depth_factor " +
                            std::to_string(depth_factor));
        out.push_back(transpose(up));
    }
    Volume v = stack_throughplane_slices(out, axis, lr);
    v.spacing[2] = lr.spacing[2] / depth_factor;
    v.validate();
    return v;
}

Volume fuse_volumes(const Volume& a, const Volume& b) {
    if (a.h != b.h || a.w != b.w || a.d != b.d)
        throw FuseError("cannot fuse " + std::to_string(a.h) + "x" + std::to_string(a.w) + "x" +
                        std::to_string(a.d) + " with " + std::to_string(b.h) + "x" +
                        std::to_string(b.w) + "x" + std::to_string(b.d));
    const double tol = 1e-9;
    for (int i = 0; i < 3; ++i)
        if (std::abs(a.spacing[static_cast<size_t>(i)] - b.spacing[static_cast<size_t>(i)]) > tol)
            throw FuseError("cannot fuse volumes with different voxel spacing");
    Volume v = a;
    for (size_t i = 0; i < v.voxels.size(); ++i)
        v.voxels[i] = 0.5f * (a.voxels[i] + b.voxels[i]);
    return v;
}

Volume reconstruct_volume(const Volume& lr, const VolumeSRPlan& plan, const SliceSrFn& sr) {
    plan.validate();
    Volume a = superresolve_stack(lr, ThroughAxis::kHxD, plan.depth_factor, sr);
    if (!plan.fuse_both_axes) return a;
    Volume b = superresolve_stack(lr, ThroughAxis::kWxD, plan.depth_factor, sr);
    return fuse_volumes(a, b);
}

Volume upsample_depth_bicubic(const Volume& lr, int factor) {
    if (factor == 1) return lr;
    return superresolve_stack(lr, ThroughAxis::kHxD, factor, make_bicubic_slice_fn(factor));
}

SliceSrFn make_generator_slice_fn(Generator& g) {
    const auto& cfg = g.config();
    if (cfg.factor_w() != 1)
        throw PlanError("through-plane reconstruction needs a generator with column factor 1, got " +
                        std::to_string(cfg.factor_h()) + "x" + std::to_string(cfg.factor_w()));
    return [&g](const SliceImage& lr) {
        const Tensor sr = g.forward(to_tensor(lr), false);
        return to_slice(sr, lr.provenance);
    };
}

SliceSrFn make_bicubic_slice_fn(int factor) {
    return [factor](const SliceImage& lr) { return bicubic_upsample(lr, factor, 1); };
}

} // namespace mrsr
