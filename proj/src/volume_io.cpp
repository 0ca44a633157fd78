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

#include "mrsr/volume_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace mrsr {

namespace {
constexpr char kMagic[6] = {'M', 'R', 'V', 'O', 'L', '1'};
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
    v.validate();
    nlohmann::json header = {
        {"h", v.h},
        {"w", v.w},
        {"d", v.d},
        {"spacing", {v.spacing[0], v.spacing[1], v.spacing[2]}},
        {"patient_id", v.patient_id},
        {"plane", to_string(v.plane)},
        {"dtype", "f32le"},
        {"order", "zyx"},
    };
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open for write: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const uint32_t len = static_cast<uint32_t>(hs.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(v.voxels.data()),
              static_cast<std::streamsize>(v.voxels.size() * sizeof(float)));
    if (!out) throw IngestError("write failed: " + path.string());
}

Volume load_volume_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open: " + path.string());

    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IngestError("not a portable volume file: " + path.string());

    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len == 0 || len > (1u << 20))
        throw IngestError("corrupt volume header: " + path.string());

    std::string hs(len, '\0');
    in.read(hs.data(), len);
    if (!in) throw IngestError("corrupt volume header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError("bad volume header json: " + std::string(e.what()));
    }

    Volume v;
    try {
        v.h = header.at("h").get<int>();
        v.w = header.at("w").get<int>();
        v.d = header.at("d").get<int>();
        const auto sp = header.at("spacing");
        v.spacing = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
        v.patient_id = header.value("patient_id", std::string());
        v.plane = acquisition_plane_from_string(header.value("plane", std::string("axial")));
        if (header.value("dtype", std::string("f32le")) != "f32le" ||
            header.value("order", std::string("zyx")) != "zyx")
            throw IngestError("unsupported volume encoding: " + path.string());
    } catch (const nlohmann::json::exception& e) {
        throw IngestError("bad volume header fields: " + std::string(e.what()));
    }
    if (v.h < 1 || v.w < 1 || v.d < 1)
        throw IngestError("volume dims out of range: " + path.string());

    v.voxels.resize(static_cast<size_t>(v.h) * v.w * v.d);
    in.read(reinterpret_cast<char*>(v.voxels.data()),
            static_cast<std::streamsize>(v.voxels.size() * sizeof(float)));
    if (!in) throw IngestError("truncated voxel data: " + path.string());
    if (in.peek() != std::char_traits<char>::eof())
        throw IngestError("trailing bytes after voxel data: " + path.string());
    v.validate();
    return v;
}

} // namespace mrsr
