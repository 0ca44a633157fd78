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
#include <set>
#include <string>
#include <vector>

#include "mrsr/image.hpp"

namespace mrsr {

// Loads a DICOM series directory or a portable .mrvol file. Intensities are
// the raw stored values; spacing and patient metadata come from the headers.
Volume load_volume(const std::filesystem::path& path);

// Per-volume min-max scaling to [0,1]. A constant volume maps to all zeros.
Volume normalize_intensity(const Volume& v);

struct DatasetSplit {
    std::set<std::string> train_patients;
    std::set<std::string> test_patients;
};

struct PatientRecord {
    std::string patient_id;
    std::string dataset; // e.g. which archive collection the patient came from
};

struct SplitSpec {
    // dataset tag -> number of patients assigned to the training set
    std::vector<std::pair<std::string, int>> train_counts;
    uint64_t seed = 0;
};

// Patient-level split: per dataset tag, IDs are sorted lexicographically,
// shuffled with the seeded generator, and the first `count` go to training.
// Deterministic for a fixed (manifest, seed).
DatasetSplit split_patients(const std::vector<PatientRecord>& manifest, const SplitSpec& spec);

// D slices of H x W, provenance plane=in_plane, index in [0, D).
std::vector<SliceImage> extract_inplane_slices(const Volume& v);

enum class ThroughAxis { kHxD, kWxD };

// kHxD: W slices of H x D indexed by width; kWxD: H slices of W x D indexed
// by height. Depth is always the second image dimension.
std::vector<SliceImage> extract_throughplane_slices(const Volume& v, ThroughAxis axis);

// Inverse of extract_throughplane_slices; exact by construction.
Volume stack_throughplane_slices(const std::vector<SliceImage>& slices, ThroughAxis axis,
                                 const Volume& like);

// Center crop when larger, symmetric zero-pad when smaller. Odd remainders
// put the extra row/column at the bottom/right.
SliceImage crop_or_pad(const SliceImage& img, int target_h, int target_w);

// One line of the dataset manifest.
struct SliceRecord {
    std::string path; // source volume file
    std::string patient_id;
    SlicePlane plane = SlicePlane::kInPlane;
    int index = 0;
    int h = 0;
    int w = 0;
};

void save_manifest(const std::vector<SliceRecord>& records, const std::filesystem::path& path);
std::vector<SliceRecord> load_manifest(const std::filesystem::path& path);

// Reads the slice a manifest record points at.
SliceImage load_slice(const SliceRecord& rec);

} // namespace mrsr
