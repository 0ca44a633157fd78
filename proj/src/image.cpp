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

#include "mrsr/image.hpp"

#include <cmath>

namespace mrsr {

const char* to_string(AcquisitionPlane p) {
    switch (p) {
        case AcquisitionPlane::kAxial: return "axial";
        case AcquisitionPlane::kSagittal: return "sagittal";
        case AcquisitionPlane::kCoronal: return "coronal";
    }
    return "axial";
}

AcquisitionPlane acquisition_plane_from_string(const std::string& s) {
    if (s == "axial") return AcquisitionPlane::kAxial;
    if (s == "sagittal") return AcquisitionPlane::kSagittal;
    if (s == "coronal") return AcquisitionPlane::kCoronal;
    throw IngestError("unknown acquisition plane: " + s);
}

const char* to_string(SlicePlane p) {
    switch (p) {
        case SlicePlane::kInPlane: return "in_plane";
        case SlicePlane::kThroughHxD: return "through_hxd";
        case SlicePlane::kThroughWxD: return "through_wxd";
    }
    return "in_plane";
}

SlicePlane slice_plane_from_string(const std::string& s) {
    if (s == "in_plane") return SlicePlane::kInPlane;
    if (s == "through_hxd") return SlicePlane::kThroughHxD;
    if (s == "through_wxd") return SlicePlane::kThroughWxD;
    throw IngestError("unknown slice plane: " + s);
}

SliceImage transpose(const SliceImage& img) {
    SliceImage out(img.w, img.h);
    out.provenance = img.provenance;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            out.at(x, y) = img.at(y, x);
    return out;
}

void Volume::validate() const {
    if (h < 1 || w < 1 || d < 1)
        throw ShapeError("Volume: dims must be >= 1");
    if (voxels.size() != static_cast<size_t>(h) * w * d)
        throw ShapeError("Volume: voxel count does not match dims");
    for (double s : spacing)
        if (!(s > 0.0))
            throw ShapeError("Volume: spacing values must be > 0");
    for (float v : voxels)
        if (!std::isfinite(v))
            throw ShapeError("Volume: non-finite voxel intensity");
}

} // namespace mrsr
