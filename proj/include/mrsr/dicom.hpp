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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrsr/image.hpp"

namespace mrsr {

// One parsed single-frame grayscale DICOM file. Only the attributes the
// ingestion pipeline needs are kept.
struct DicomSlice {
    int rows = 0;
    int cols = 0;
    std::string patient_id;
    std::optional<int> instance_number;
    std::optional<std::array<double, 3>> position;     // ImagePositionPatient
    std::optional<std::array<double, 6>> orientation;  // ImageOrientationPatient
    std::optional<std::array<double, 2>> pixel_spacing; // row, col (mm)
    std::optional<double> slice_thickness;
    std::optional<double> spacing_between_slices;
    std::vector<float> pixels; // raw stored values, row-major
};

// Reads an uncompressed little-endian (implicit or explicit VR) single-frame
// grayscale DICOM file. Compressed transfer syntaxes are rejected.
DicomSlice read_dicom_file(const std::filesystem::path& path);

// Stacks every DICOM file in a directory into a Volume. Slices are ordered by
// position along the slice normal when available, otherwise by instance
// number. Intensities are the raw stored values.
Volume read_dicom_series(const std::filesystem::path& dir);

} // namespace mrsr
