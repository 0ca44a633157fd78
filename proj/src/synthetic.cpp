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

#include "mrsr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mrsr/errors.hpp"
#include "mrsr/rng.hpp"

namespace mrsr {

namespace {

struct Ellipsoid {
    double cy, cx, cz, ry, rx, rz, value;
};

struct Box {
    int y0, y1, x0, x1, z0, z1;
    double value;
};

} // namespace

Volume make_phantom_volume(const PhantomSpec& spec) {
    if (spec.h < 4 || spec.w < 4 || spec.d < 2)
        throw ShapeError("phantom dims too small: " + std::to_string(spec.h) + "x" +
                         std::to_string(spec.w) + "x" + std::to_string(spec.d));
    Rng rng(spec.seed);

    std::vector<Ellipsoid> ellipsoids;
    std::vector<Box> boxes;
    for (int i = 0; i < spec.structures; ++i) {
        if (i % 2 == 0) {
            Ellipsoid e;
            e.cy = rng.uniform() * spec.h;
            e.cx = rng.uniform() * spec.w;
            e.cz = rng.uniform() * spec.d;
            e.ry = spec.h * (0.06 + 0.14 * rng.uniform());
            e.rx = spec.w * (0.06 + 0.14 * rng.uniform());
            e.rz = std::max(1.0, spec.d * (0.08 + 0.2 * rng.uniform()));
            e.value = 0.25 + 0.7 * rng.uniform();
            ellipsoids.push_back(e);
        } else {
            Box b;
            const int sy = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(2, spec.h / 4))));
            const int sx = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(2, spec.w / 4))));
            const int sz = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, spec.d / 3))));
            b.y0 = static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, spec.h - sy))));
            b.x0 = static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, spec.w - sx))));
            b.z0 = static_cast<int>(rng.below(static_cast<uint64_t>(std::max(1, spec.d - sz))));
            b.y1 = b.y0 + sy;
            b.x1 = b.x0 + sx;
            b.z1 = b.z0 + sz;
            b.value = 0.25 + 0.7 * rng.uniform();
            boxes.push_back(b);
        }
    }

    // Background phases keep volumes with the same dims distinguishable.
    const double py = rng.uniform() * 6.28318530717958648;
    const double px = rng.uniform() * 6.28318530717958648;
    const double pz = rng.uniform() * 6.28318530717958648;

    Volume v(spec.h, spec.w, spec.d);
    v.spacing = spec.spacing;
    v.patient_id = spec.patient_id;
    v.plane = AcquisitionPlane::kAxial;

    for (int z = 0; z < spec.d; ++z) {
        for (int y = 0; y < spec.h; ++y) {
            for (int x = 0; x < spec.w; ++x) {
                double val = 0.22 + 0.1 * std::cos(2.0 * 3.14159265358979 * y / spec.h + py) +
                             0.08 * std::cos(2.0 * 3.14159265358979 * x / spec.w + px) +
                             0.06 * std::cos(2.0 * 3.14159265358979 * z / spec.d + pz);
                for (const auto& e : ellipsoids) {
                    const double dy = (y - e.cy) / e.ry;
                    const double dx = (x - e.cx) / e.rx;
                    const double dz = (z - e.cz) / e.rz;
                    if (dy * dy + dx * dx + dz * dz <= 1.0) val = e.value;
                }
                for (const auto& b : boxes) {
                    if (y >= b.y0 && y < b.y1 && x >= b.x0 && x < b.x1 && z >= b.z0 && z < b.z1)
                        val = b.value;
                }
                v.at(y, x, z) = static_cast<float>(std::min(1.0, std::max(0.0, val)));
            }
        }
    }
    return v;
}

std::vector<Volume> make_phantom_cohort(int count, uint64_t seed, int h, int w, int d) {
    std::vector<Volume> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        PhantomSpec spec;
        spec.h = h;
        spec.w = w;
        spec.d = d;
        spec.seed = seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(i + 1);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "phantom%03d", i);
        spec.patient_id = buf;
        out.push_back(make_phantom_volume(spec));
    }
    return out;
}

} // namespace mrsr
