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

#include "mrsr/dicom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mrsr {

namespace {

constexpr const char* kImplicitLE = "1.2.840.10008.1.2";
constexpr const char* kExplicitLE = "1.2.840.10008.1.2.1";

struct Cursor {
    const uint8_t* p = nullptr;
    size_t size = 0;
    size_t pos = 0;

    bool eof() const { return pos >= size; }
    size_t left() const { return size - pos; }

    void need(size_t n, const char* what) const {
        if (pos + n > size)
            throw IngestError(std::string("truncated DICOM stream reading ") + what);
    }
    uint16_t u16() {
        need(2, "u16");
        uint16_t v;
        std::memcpy(&v, p + pos, 2);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4, "u32");
        uint32_t v;
        std::memcpy(&v, p + pos, 4);
        pos += 4;
        return v;
    }
    std::string bytes(size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
    void skip(size_t n, const char* what) {
        need(n, what);
        pos += n;
    }
};

struct Element {
    uint16_t group = 0;
    uint16_t element = 0;
    std::string vr;      // empty in implicit mode
    uint32_t length = 0; // 0xFFFFFFFF means undefined
    size_t value_pos = 0;
};

bool has_long_length(const std::string& vr) {
    return vr == "OB" || vr == "OW" || vr == "OF" || vr == "OL" || vr == "OD" ||
           vr == "SQ" || vr == "UC" || vr == "UR" || vr == "UT" || vr == "UN";
}

// Reads one element header; leaves the cursor at the value bytes.
Element read_element(Cursor& c, bool explicit_vr) {
    Element e;
    e.group = c.u16();
    e.element = c.u16();

    // Item / delimiter tags never carry a VR.
    if (e.group == 0xFFFE) {
        e.length = c.u32();
        e.value_pos = c.pos;
        return e;
    }

    if (explicit_vr) {
        e.vr = c.bytes(2, "VR");
        if (has_long_length(e.vr)) {
            c.skip(2, "VR reserved");
            e.length = c.u32();
        } else {
            e.length = c.u16();
        }
    } else {
        e.length = c.u32();
    }
    e.value_pos = c.pos;
    return e;
}

void skip_sequence_undefined(Cursor& c, bool explicit_vr);

// Skips the value of the element just read, sequences included.
void skip_value(Cursor& c, const Element& e, bool explicit_vr) {
    if (e.length != 0xFFFFFFFFu) {
        c.skip(e.length, "element value");
        return;
    }
    // Undefined length: only legal for sequences and items of sequences.
    skip_sequence_undefined(c, explicit_vr);
}

void skip_sequence_undefined(Cursor& c, bool explicit_vr) {
    for (;;) {
        if (c.eof()) throw IngestError("unterminated DICOM sequence");
        Element item = read_element(c, explicit_vr);
        if (item.group == 0xFFFE && item.element == 0xE0DD) return; // sequence end
        if (item.group == 0xFFFE && item.element == 0xE000) {       // item
            if (item.length != 0xFFFFFFFFu) {
                c.skip(item.length, "sequence item");
            } else {
                // Undefined-length item: scan nested elements to its delimiter.
                for (;;) {
                    if (c.eof()) throw IngestError("unterminated DICOM item");
                    Element inner = read_element(c, explicit_vr);
                    if (inner.group == 0xFFFE && inner.element == 0xE00D) break;
                    skip_value(c, inner, explicit_vr);
                }
            }
            continue;
        }
        skip_value(c, item, explicit_vr);
    }
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\0')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\0')) --b;
    return s.substr(a, b - a);
}

std::vector<double> parse_ds(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, '\\')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw IngestError("bad decimal string in DICOM: '" + item + "'");
        }
    }
    return out;
}

uint16_t read_us(const Cursor& c, const Element& e) {
    if (e.length < 2) throw IngestError("short US value");
    uint16_t v;
    std::memcpy(&v, c.p + e.value_pos, 2);
    return v;
}

} // namespace

DicomSlice read_dicom_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open: " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 132 + 8 || std::memcmp(buf.data() + 128, "DICM", 4) != 0)
        throw IngestError("not a DICOM part-10 file: " + path.string());

    Cursor c{buf.data(), buf.size(), 132};

    // File meta group is always explicit VR little endian.
    std::string transfer_syntax;
    while (!c.eof()) {
        const size_t mark = c.pos;
        Element e = read_element(c, /*explicit_vr=*/true);
        if (e.group != 0x0002) {
            c.pos = mark;
            break;
        }
        if (e.element == 0x0010)
            transfer_syntax = trim(c.bytes(e.length, "transfer syntax"));
        else
            skip_value(c, e, true);
    }

    bool explicit_vr;
    if (transfer_syntax == kExplicitLE || transfer_syntax.empty())
        explicit_vr = true;
    else if (transfer_syntax == kImplicitLE)
        explicit_vr = false;
    else
        throw IngestError("unsupported transfer syntax '" + transfer_syntax + "' in " + path.string());

    DicomSlice s;
    int bits_allocated = 16;
    int pixel_representation = 0;
    int samples_per_pixel = 1;
    const uint8_t* pixel_data = nullptr;
    size_t pixel_bytes = 0;

    while (!c.eof()) {
        Element e = read_element(c, explicit_vr);
        const uint32_t tag = (static_cast<uint32_t>(e.group) << 16) | e.element;
        switch (tag) {
            case 0x00100020: s.patient_id = trim(c.bytes(e.length, "PatientID")); break;
            case 0x00200013: {
                const std::string v = trim(c.bytes(e.length, "InstanceNumber"));
                if (!v.empty()) s.instance_number = std::stoi(v);
                break;
            }
            case 0x00200032: {
                const auto v = parse_ds(c.bytes(e.length, "ImagePositionPatient"));
                if (v.size() == 3) s.position = {v[0], v[1], v[2]};
                break;
            }
            case 0x00200037: {
                const auto v = parse_ds(c.bytes(e.length, "ImageOrientationPatient"));
                if (v.size() == 6) s.orientation = {v[0], v[1], v[2], v[3], v[4], v[5]};
                break;
            }
            case 0x00280002: samples_per_pixel = read_us(c, e); skip_value(c, e, explicit_vr); break;
            case 0x00280010: s.rows = read_us(c, e); skip_value(c, e, explicit_vr); break;
            case 0x00280011: s.cols = read_us(c, e); skip_value(c, e, explicit_vr); break;
            case 0x00280030: {
                const auto v = parse_ds(c.bytes(e.length, "PixelSpacing"));
                if (v.size() == 2) s.pixel_spacing = {v[0], v[1]};
                break;
            }
            case 0x00180050: {
                const auto v = parse_ds(c.bytes(e.length, "SliceThickness"));
                if (!v.empty()) s.slice_thickness = v[0];
                break;
            }
            case 0x00180088: {
                const auto v = parse_ds(c.bytes(e.length, "SpacingBetweenSlices"));
                if (!v.empty()) s.spacing_between_slices = v[0];
                break;
            }
            case 0x00280100: bits_allocated = read_us(c, e); skip_value(c, e, explicit_vr); break;
            case 0x00280103: pixel_representation = read_us(c, e); skip_value(c, e, explicit_vr); break;
            case 0x7FE00010: {
                if (e.length == 0xFFFFFFFFu)
                    throw IngestError("encapsulated pixel data is not supported: " + path.string());
                c.need(e.length, "PixelData");
                pixel_data = c.p + e.value_pos;
                pixel_bytes = e.length;
                c.skip(e.length, "PixelData");
                break;
            }
            default: skip_value(c, e, explicit_vr); break;
        }
    }

    if (s.rows < 1 || s.cols < 1)
        throw IngestError("missing Rows/Columns in " + path.string());
    if (samples_per_pixel != 1)
        throw IngestError("only single-sample (grayscale) DICOM is supported: " + path.string());
    if (!pixel_data)
        throw IngestError("missing PixelData in " + path.string());

    const size_t n = static_cast<size_t>(s.rows) * s.cols;
    s.pixels.resize(n);
    if (bits_allocated == 16) {
        if (pixel_bytes < n * 2) throw IngestError("short PixelData in " + path.string());
        if (pixel_representation == 0) {
            for (size_t i = 0; i < n; ++i) {
                uint16_t v;
                std::memcpy(&v, pixel_data + 2 * i, 2);
                s.pixels[i] = static_cast<float>(v);
            }
        } else {
            for (size_t i = 0; i < n; ++i) {
                int16_t v;
                std::memcpy(&v, pixel_data + 2 * i, 2);
                s.pixels[i] = static_cast<float>(v);
            }
        }
    } else if (bits_allocated == 8) {
        if (pixel_bytes < n) throw IngestError("short PixelData in " + path.string());
        for (size_t i = 0; i < n; ++i)
            s.pixels[i] = static_cast<float>(pixel_data[i]);
    } else {
        throw IngestError("unsupported BitsAllocated in " + path.string());
    }
    return s;
}

Volume read_dicom_series(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw IngestError("empty DICOM series directory: " + dir.string());

    std::vector<DicomSlice> slices;
    slices.reserve(files.size());
    for (const auto& f : files)
        slices.push_back(read_dicom_file(f));

    const int rows = slices.front().rows;
    const int cols = slices.front().cols;
    for (size_t i = 0; i < slices.size(); ++i) {
        if (slices[i].rows != rows || slices[i].cols != cols) {
            std::ostringstream os;
            os << "inconsistent slice dimensions in " << dir.string() << ": "
               << rows << "x" << cols << " vs " << slices[i].rows << "x" << slices[i].cols;
            throw IngestError(os.str());
        }
    }

    // Order along the slice normal when positions exist, else by instance
    // number, else by filename (the load order above).
    const auto& ori = slices.front().orientation;
    std::array<double, 3> normal = {0.0, 0.0, 1.0};
    if (ori) {
        const auto& o = *ori;
        normal = {o[1] * o[5] - o[2] * o[4],
                  o[2] * o[3] - o[0] * o[5],
                  o[0] * o[4] - o[1] * o[3]};
    }
    const bool all_pos = std::all_of(slices.begin(), slices.end(),
                                     [](const DicomSlice& s) { return s.position.has_value(); });
    const bool all_inst = std::all_of(slices.begin(), slices.end(),
                                      [](const DicomSlice& s) { return s.instance_number.has_value(); });
    std::vector<size_t> order(slices.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (all_pos) {
        auto proj = [&](size_t i) {
            const auto& p = *slices[i].position;
            return p[0] * normal[0] + p[1] * normal[1] + p[2] * normal[2];
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return proj(a) < proj(b); });
    } else if (all_inst) {
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return *slices[a].instance_number < *slices[b].instance_number;
        });
    }

    Volume v(rows, cols, static_cast<int>(slices.size()));
    v.patient_id = slices.front().patient_id;

    if (slices.front().pixel_spacing) {
        v.spacing[0] = (*slices.front().pixel_spacing)[0];
        v.spacing[1] = (*slices.front().pixel_spacing)[1];
    }
    if (slices.front().spacing_between_slices)
        v.spacing[2] = *slices.front().spacing_between_slices;
    else if (slices.front().slice_thickness)
        v.spacing[2] = *slices.front().slice_thickness;

    if (ori) {
        // Dominant component of the slice normal picks the acquisition plane.
        const double ax = std::abs(normal[0]), ay = std::abs(normal[1]), az = std::abs(normal[2]);
        if (az >= ax && az >= ay)
            v.plane = AcquisitionPlane::kAxial;
        else if (ax >= ay)
            v.plane = AcquisitionPlane::kSagittal;
        else
            v.plane = AcquisitionPlane::kCoronal;
    }

    for (size_t zi = 0; zi < order.size(); ++zi) {
        const auto& s = slices[order[zi]];
        std::copy(s.pixels.begin(), s.pixels.end(),
                  v.voxels.begin() + static_cast<std::ptrdiff_t>(zi * s.pixels.size()));
    }
    v.validate();
    return v;
}

} // namespace mrsr
