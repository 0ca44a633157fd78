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

#include "mrsr/image.hpp"
#include "mrsr/tensor.hpp"

namespace mrsr {

inline Tensor to_tensor(const SliceImage& img) {
    Tensor t({1, 1, img.h, img.w});
    std::copy(img.pixels.begin(), img.pixels.end(), t.data());
    return t;
}

inline SliceImage to_slice(const Tensor& t, SliceProvenance provenance = {}) {
    if (t.ndim() != 4 || t.dim(0) != 1 || t.dim(1) != 1)
        throw ShapeError("expected a (1,1,h,w) tensor, got " + t.shape_str());
    SliceImage img;
    img.h = t.dim(2);
    img.w = t.dim(3);
    img.pixels.assign(t.data(), t.data() + t.numel());
    img.provenance = std::move(provenance);
    return img;
}

} // namespace mrsr
