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

#include "mrsr/errors.hpp"

namespace mrsr {

enum class AcquisitionPlane { kAxial, kSagittal, kCoronal };

const char* to_string(AcquisitionPlane p);
AcquisitionPlane acquisition_plane_from_string(const std::string& s);

// Which cut of a volume a slice came from. Through-plane slices keep the
// coarse depth axis as their second (width-like) image dimension.
enum class SlicePlane { kInPlane, kThroughHxD, kThroughWxD };

const char* to_string(SlicePlane p);
SlicePlane slice_plane_from_string(const std::string& s);

struct SliceProvenance {
    std::string volume_id;
    SlicePlane plane = SlicePlane::kInPlane;
    int index = 0;
};

// 2D grayscale image with pixels in [0,1], row-major.
struct SliceImage {
    int h = 0;
    int w = 0;
    std::vector<float> pixels;
    SliceProvenance provenance;

    SliceImage() = default;
    SliceImage(int h_, int w_) : h(h_), w(w_), pixels(static_cast<size_t>(h_) * w_, 0.0f) {
        if (h_ < 1 || w_ < 1) throw ShapeError("SliceImage: dims must be >= 1");
    }

    float& at(int y, int x) { return pixels[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return pixels[static_cast<size_t>(y) * w + x]; }
    size_t size() const { return pixels.size(); }
};

SliceImage transpose(const SliceImage& img);

// 3D scalar grid with per-axis physical spacing in millimeters. Voxels are
// stored slice-contiguous: voxel(y, x, z) lives at ((z * H) + y) * W + x.
struct Volume {
    int h = 0;
    int w = 0;
    int d = 0;
    std::array<double, 3> spacing = {1.0, 1.0, 1.0}; // (sh, sw, sd) mm
    std::string patient_id;
    AcquisitionPlane plane = AcquisitionPlane::kAxial;
    std::vector<float> voxels;

    Volume() = default;
    Volume(int h_, int w_, int d_) : h(h_), w(w_), d(d_),
        voxels(static_cast<size_t>(h_) * w_ * d_, 0.0f) {
        if (h_ < 1 || w_ < 1 || d_ < 1) throw ShapeError("Volume: dims must be >= 1");
    }

    float& at(int y, int x, int z) {
        return voxels[(static_cast<size_t>(z) * h + y) * w + x];
    }
    float at(int y, int x, int z) const {
        return voxels[(static_cast<size_t>(z) * h + y) * w + x];
    }
    size_t size() const { return voxels.size(); }

    void validate() const;
};

} // namespace mrsr
