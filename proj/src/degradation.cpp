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

#include "mrsr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mrsr {

namespace {

// Keys cubic kernel; a = -0.5 reproduces degree-1 polynomials exactly.
double cubic_kernel(double x, double a) {
    x = std::abs(x);
    if (x < 1.0)
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0)
        return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

int map_index(int i, int n, BoundaryMode mode) {
    if (i >= 0 && i < n) return i;
    if (mode == BoundaryMode::kReplicate)
        return std::clamp(i, 0, n - 1);
    // Half-sample symmetric reflection, applied until in range.
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

struct TapSet {
    int first = 0;               // absolute index of the first tap
    std::vector<double> weights; // normalized to sum 1
};

// Taps and weights for one output sample at input coordinate `center`.
// support_scale > 1 widens the kernel for anti-aliased reduction.
TapSet make_taps(double center, double support_scale, double a) {
    const double radius = 2.0 * support_scale;
    TapSet taps;
    taps.first = static_cast<int>(std::ceil(center - radius));
    const int last = static_cast<int>(std::floor(center + radius));
    taps.weights.resize(static_cast<size_t>(last - taps.first + 1));
    double sum = 0.0;
    for (int j = taps.first; j <= last; ++j) {
        const double w = cubic_kernel((static_cast<double>(j) - center) / support_scale, a);
        taps.weights[static_cast<size_t>(j - taps.first)] = w;
        sum += w;
    }
    for (auto& w : taps.weights) w /= sum;
    return taps;
}

// Resamples the rows (axis 0) of an h x w double grid to n_out rows.
std::vector<double> resample_rows(const std::vector<double>& src, int h, int w, int n_out,
                                  double support_scale, const ResampleParams& p) {
    std::vector<double> dst(static_cast<size_t>(n_out) * w, 0.0);
    const double ratio = static_cast<double>(h) / n_out;
    for (int i = 0; i < n_out; ++i) {
        const double center = (i + 0.5) * ratio - 0.5;
        const TapSet taps = make_taps(center, support_scale, p.kernel_a);
        double* out_row = dst.data() + static_cast<size_t>(i) * w;
        for (size_t t = 0; t < taps.weights.size(); ++t) {
            const int sy = map_index(taps.first + static_cast<int>(t), h, p.boundary);
            const double wgt = taps.weights[t];
            const double* in_row = src.data() + static_cast<size_t>(sy) * w;
            for (int x = 0; x < w; ++x)
                out_row[x] += wgt * in_row[x];
        }
    }
    return dst;
}

std::vector<double> resample_cols(const std::vector<double>& src, int h, int w, int n_out,
                                  double support_scale, const ResampleParams& p) {
    std::vector<double> dst(static_cast<size_t>(h) * n_out, 0.0);
    const double ratio = static_cast<double>(w) / n_out;
    for (int i = 0; i < n_out; ++i) {
        const double center = (i + 0.5) * ratio - 0.5;
        const TapSet taps = make_taps(center, support_scale, p.kernel_a);
        for (int y = 0; y < h; ++y) {
            const double* in_row = src.data() + static_cast<size_t>(y) * w;
            double acc = 0.0;
            for (size_t t = 0; t < taps.weights.size(); ++t)
                acc += taps.weights[t] * in_row[map_index(taps.first + static_cast<int>(t), w, p.boundary)];
            dst[static_cast<size_t>(y) * n_out + i] = acc;
        }
    }
    return dst;
}

std::vector<double> widen(const SliceImage& img) {
    std::vector<double> v(img.pixels.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(img.pixels[i]);
    return v;
}

SliceImage narrow_clamped(const std::vector<double>& v, int h, int w, const SliceProvenance& prov) {
    SliceImage img(h, w);
    img.provenance = prov;
    for (size_t i = 0; i < v.size(); ++i)
        img.pixels[i] = static_cast<float>(std::clamp(v[i], 0.0, 1.0));
    return img;
}

} // namespace

SliceImage downsample(const SliceImage& img, const DegradationSpec& spec,
                      const ResampleParams& params) {
    spec.validate();
    if (img.h % spec.factor_h != 0 || img.w % spec.factor_w != 0) {
        throw DegradeError("image " + std::to_string(img.h) + "x" + std::to_string(img.w) +
                           " not divisible by factors (" + std::to_string(spec.factor_h) + "," +
                           std::to_string(spec.factor_w) + "); crop_or_pad first");
    }
    if (spec.factor_h == 1 && spec.factor_w == 1)
        return img;

    std::vector<double> buf = widen(img);
    int h = img.h, w = img.w;
    if (spec.factor_h > 1) {
        const double scale = spec.antialias ? static_cast<double>(spec.factor_h) : 1.0;
        buf = resample_rows(buf, h, w, h / spec.factor_h, scale, params);
        h /= spec.factor_h;
    }
    if (spec.factor_w > 1) {
        const double scale = spec.antialias ? static_cast<double>(spec.factor_w) : 1.0;
        buf = resample_cols(buf, h, w, w / spec.factor_w, scale, params);
        w /= spec.factor_w;
    }
    return narrow_clamped(buf, h, w, img.provenance);
}

SliceImage bicubic_upsample(const SliceImage& img, int factor_h, int factor_w,
                            const ResampleParams& params) {
    if (factor_h < 1 || factor_w < 1)
        throw ConfigError("bicubic_upsample: factors must be >= 1");
    if (factor_h == 1 && factor_w == 1)
        return img;

    std::vector<double> buf = widen(img);
    int h = img.h, w = img.w;
    if (factor_h > 1) {
        buf = resample_rows(buf, h, w, h * factor_h, 1.0, params);
        h *= factor_h;
    }
    if (factor_w > 1) {
        buf = resample_cols(buf, h, w, w * factor_w, 1.0, params);
        w *= factor_w;
    }
    return narrow_clamped(buf, h, w, img.provenance);
}

SliceImage nearest_upsample(const SliceImage& img, int factor_h, int factor_w) {
    if (factor_h < 1 || factor_w < 1)
        throw ConfigError("nearest_upsample: factors must be >= 1");
    SliceImage out(img.h * factor_h, img.w * factor_w);
    out.provenance = img.provenance;
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.at(y, x) = img.at(y / factor_h, x / factor_w);
    return out;
}

std::pair<SliceImage, SliceImage> make_pair(const SliceImage& img, const DegradationSpec& spec,
                                            const ResampleParams& params) {
    return {downsample(img, spec, params), img};
}

BoundaryMode boundary_mode_from_string(const std::string& s) {
    if (s == "replicate") return BoundaryMode::kReplicate;
    if (s == "reflect") return BoundaryMode::kReflect;
    throw ConfigError("unknown boundary mode: " + s);
}

const char* to_string(BoundaryMode m) {
    return m == BoundaryMode::kReplicate ? "replicate" : "reflect";
}

} // namespace mrsr
