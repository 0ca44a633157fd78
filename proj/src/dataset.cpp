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

#include "mrsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "mrsr/dicom.hpp"
#include "mrsr/rng.hpp"
#include "mrsr/volume_io.hpp"

namespace mrsr {

Volume load_volume(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path))
        return read_dicom_series(path);
    if (fs::is_regular_file(path))
        return load_volume_file(path);
    throw IngestError("no such volume source: " + path.string());
}

Volume normalize_intensity(const Volume& v) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float x : v.voxels) {
        if (!std::isfinite(x))
            throw NormalizeError("non-finite intensity in volume '" + v.patient_id + "'");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    Volume out = v;
    if (hi > lo) {
        const float scale = 1.0f / (hi - lo);
        for (auto& x : out.voxels) x = (x - lo) * scale;
    } else {
        std::fill(out.voxels.begin(), out.voxels.end(), 0.0f);
    }
    return out;
}

DatasetSplit split_patients(const std::vector<PatientRecord>& manifest, const SplitSpec& spec) {
    std::map<std::string, std::vector<std::string>> by_dataset;
    for (const auto& rec : manifest)
        by_dataset[rec.dataset].push_back(rec.patient_id);

    std::map<std::string, int> counts;
    for (const auto& [dataset, count] : spec.train_counts) {
        if (count < 0) throw SplitError("negative train count for dataset '" + dataset + "'");
        counts[dataset] += count;
    }
    for (const auto& [dataset, count] : counts) {
        const auto it = by_dataset.find(dataset);
        const int avail = it == by_dataset.end() ? 0 : static_cast<int>(it->second.size());
        if (count > avail) {
            throw SplitError("requested " + std::to_string(count) + " training patients from '" +
                             dataset + "' but only " + std::to_string(avail) + " available");
        }
    }

    Rng rng(spec.seed);
    DatasetSplit split;
    // Iterate datasets in lexicographic order so the RNG stream is stable.
    for (auto& [dataset, ids] : by_dataset) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        rng.shuffle(ids);
        const auto it = counts.find(dataset);
        const size_t take = it == counts.end() ? 0 : static_cast<size_t>(it->second);
        for (size_t i = 0; i < ids.size(); ++i) {
            if (i < take)
                split.train_patients.insert(ids[i]);
            else
                split.test_patients.insert(ids[i]);
        }
    }
    return split;
}

std::vector<SliceImage> extract_inplane_slices(const Volume& v) {
    std::vector<SliceImage> out;
    out.reserve(static_cast<size_t>(v.d));
    for (int z = 0; z < v.d; ++z) {
        SliceImage img(v.h, v.w);
        img.provenance = {v.patient_id, SlicePlane::kInPlane, z};
        // In-plane slices are contiguous in the voxel layout.
        const float* src = v.voxels.data() + static_cast<size_t>(z) * v.h * v.w;
        std::copy(src, src + static_cast<size_t>(v.h) * v.w, img.pixels.begin());
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<SliceImage> extract_throughplane_slices(const Volume& v, ThroughAxis axis) {
    std::vector<SliceImage> out;
    if (axis == ThroughAxis::kHxD) {
        out.reserve(static_cast<size_t>(v.w));
        for (int x = 0; x < v.w; ++x) {
            SliceImage img(v.h, v.d);
            img.provenance = {v.patient_id, SlicePlane::kThroughHxD, x};
            for (int y = 0; y < v.h; ++y)
                for (int z = 0; z < v.d; ++z)
                    img.at(y, z) = v.at(y, x, z);
            out.push_back(std::move(img));
        }
    } else {
        out.reserve(static_cast<size_t>(v.h));
        for (int y = 0; y < v.h; ++y) {
            SliceImage img(v.w, v.d);
            img.provenance = {v.patient_id, SlicePlane::kThroughWxD, y};
            for (int x = 0; x < v.w; ++x)
                for (int z = 0; z < v.d; ++z)
                    img.at(x, z) = v.at(y, x, z);
            out.push_back(std::move(img));
        }
    }
    return out;
}

Volume stack_throughplane_slices(const std::vector<SliceImage>& slices, ThroughAxis axis,
                                 const Volume& like) {
    if (slices.empty()) throw ShapeError("stack_throughplane_slices: no slices");
    const int d = slices.front().w;

    Volume v;
    if (axis == ThroughAxis::kHxD) {
        const int h = slices.front().h;
        const int w = static_cast<int>(slices.size());
        v = Volume(h, w, d);
        for (int x = 0; x < w; ++x) {
            const auto& img = slices[static_cast<size_t>(x)];
            if (img.h != h || img.w != d)
                throw ShapeError("stack_throughplane_slices: inconsistent slice shapes");
            for (int y = 0; y < h; ++y)
                for (int z = 0; z < d; ++z)
                    v.at(y, x, z) = img.at(y, z);
        }
    } else {
        const int w = slices.front().h;
        const int h = static_cast<int>(slices.size());
        v = Volume(h, w, d);
        for (int y = 0; y < h; ++y) {
            const auto& img = slices[static_cast<size_t>(y)];
            if (img.h != w || img.w != d)
                throw ShapeError("stack_throughplane_slices: inconsistent slice shapes");
            for (int x = 0; x < w; ++x)
                for (int z = 0; z < d; ++z)
                    v.at(y, x, z) = img.at(x, z);
        }
    }
    v.spacing = like.spacing;
    v.patient_id = like.patient_id;
    v.plane = like.plane;
    return v;
}

SliceImage crop_or_pad(const SliceImage& img, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1)
        throw ShapeError("crop_or_pad: target dims must be >= 1");
    SliceImage out(target_h, target_w);
    out.provenance = img.provenance;
    // Signed offsets: positive = crop that many source rows, negative = pad.
    const int off_y = (img.h - target_h) / 2;
    const int off_x = (img.w - target_w) / 2;
    for (int y = 0; y < target_h; ++y) {
        const int sy = y + off_y;
        if (sy < 0 || sy >= img.h) continue; // zero padding
        for (int x = 0; x < target_w; ++x) {
            const int sx = x + off_x;
            if (sx < 0 || sx >= img.w) continue;
            out.at(y, x) = img.at(sy, sx);
        }
    }
    return out;
}

void save_manifest(const std::vector<SliceRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot open manifest for write: " + path.string());
    for (const auto& r : records) {
        nlohmann::json j = {
            {"path", r.path},
            {"patient_id", r.patient_id},
            {"plane", to_string(r.plane)},
            {"index", r.index},
            {"h", r.h},
            {"w", r.w},
        };
        out << j.dump() << '\n';
    }
    if (!out) throw IngestError("manifest write failed: " + path.string());
}

std::vector<SliceRecord> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest: " + path.string());
    std::vector<SliceRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            SliceRecord r;
            r.path = j.at("path").get<std::string>();
            r.patient_id = j.at("patient_id").get<std::string>();
            r.plane = slice_plane_from_string(j.at("plane").get<std::string>());
            r.index = j.at("index").get<int>();
            r.h = j.at("h").get<int>();
            r.w = j.at("w").get<int>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("bad manifest line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

SliceImage load_slice(const SliceRecord& rec) {
    const Volume v = load_volume(rec.path);
    std::vector<SliceImage> slices;
    switch (rec.plane) {
        case SlicePlane::kInPlane: slices = extract_inplane_slices(v); break;
        case SlicePlane::kThroughHxD: slices = extract_throughplane_slices(v, ThroughAxis::kHxD); break;
        case SlicePlane::kThroughWxD: slices = extract_throughplane_slices(v, ThroughAxis::kWxD); break;
    }
    if (rec.index < 0 || rec.index >= static_cast<int>(slices.size()))
        throw IngestError("slice index out of range for " + rec.path);
    return slices[static_cast<size_t>(rec.index)];
}

} // namespace mrsr
