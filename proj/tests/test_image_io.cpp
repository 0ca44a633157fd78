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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mrsr/dataset.hpp"
#include "mrsr/image.hpp"
#include "mrsr/png_io.hpp"
#include "mrsr/rng.hpp"
#include "mrsr/volume_io.hpp"

namespace fs = std::filesystem;
using namespace mrsr;

namespace {

fs::path temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("mrsr_test_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Volume random_volume(int h, int w, int d, uint64_t seed) {
    Volume v(h, w, d);
    Rng rng(seed);
    for (auto& x : v.voxels) x = static_cast<float>(rng.uniform());
    v.spacing = {0.7, 0.8, 3.0};
    v.patient_id = "case_017";
    v.plane = AcquisitionPlane::kSagittal;
    return v;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_SUITE("image_io") {

TEST_CASE("volume file round trip is bit exact") {
    const fs::path dir = temp_dir("vol_roundtrip");
    const Volume v = random_volume(9, 7, 5, 21u);
    const fs::path path = dir / "v.mrvol";
    save_volume(v, path);

    const Volume r = load_volume_file(path);
    CHECK(r.h == v.h);
    CHECK(r.w == v.w);
    CHECK(r.d == v.d);
    CHECK(r.spacing == v.spacing);
    CHECK(r.patient_id == v.patient_id);
    CHECK(r.plane == v.plane);
    REQUIRE(r.voxels.size() == v.voxels.size());
    for (size_t i = 0; i < v.voxels.size(); ++i) CHECK(r.voxels[i] == v.voxels[i]);
    fs::remove_all(dir);
}

TEST_CASE("volume loader rejects corrupted files") {
    const fs::path dir = temp_dir("vol_corrupt");
    const Volume v = random_volume(4, 4, 3, 3u);
    const fs::path path = dir / "v.mrvol";
    save_volume(v, path);
    const std::vector<char> good = read_bytes(path);

    SUBCASE("bad magic") {
        std::vector<char> bad = good;
        bad[0] = 'X';
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_volume_file(path), IngestError);
    }
    SUBCASE("truncated voxel payload") {
        std::vector<char> bad(good.begin(), good.end() - 9);
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_volume_file(path), IngestError);
    }
    SUBCASE("trailing garbage") {
        std::vector<char> bad = good;
        bad.push_back('\0');
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_volume_file(path), IngestError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_volume_file(dir / "absent.mrvol"), IngestError);
    }
    fs::remove_all(dir);
}

TEST_CASE("png round trip quantizes to 8 bits") {
    const fs::path dir = temp_dir("png_roundtrip");
    SliceImage img(5, 6);
    Rng rng(11u);
    for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
    img.at(0, 0) = 0.0f;
    img.at(0, 1) = 1.0f;

    const fs::path path = dir / "img.png";
    save_png(img, path);
    const SliceImage r = load_png(path);

    REQUIRE(r.h == img.h);
    REQUIRE(r.w == img.w);
    CHECK(r.at(0, 0) == 0.0f);
    CHECK(r.at(0, 1) == 1.0f);
    for (size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(std::abs(r.pixels[i] - img.pixels[i]) <= 0.5f / 255.0f + 1e-6f);
    fs::remove_all(dir);
}

TEST_CASE("png loader rejects missing files") {
    const fs::path dir = temp_dir("png_missing");
    CHECK_THROWS_AS(load_png(dir / "absent.png"), IngestError);
    fs::remove_all(dir);
}

TEST_CASE("transpose swaps axes and is an involution") {
    SliceImage img(3, 5);
    Rng rng(5u);
    for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
    img.provenance = {"vol", SlicePlane::kThroughHxD, 4};

    const SliceImage t = transpose(img);
    REQUIRE(t.h == 5);
    REQUIRE(t.w == 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) CHECK(t.at(x, y) == img.at(y, x));
    CHECK(t.provenance.volume_id == "vol");
    CHECK(t.provenance.index == 4);

    const SliceImage tt = transpose(t);
    REQUIRE(tt.h == img.h);
    REQUIRE(tt.w == img.w);
    for (size_t i = 0; i < img.pixels.size(); ++i) CHECK(tt.pixels[i] == img.pixels[i]);
}

TEST_CASE("in plane extraction matches direct indexing") {
    const Volume v = random_volume(4, 5, 3, 9u);
    const auto slices = extract_inplane_slices(v);
    REQUIRE(slices.size() == 3);
    for (int z = 0; z < v.d; ++z) {
        const auto& s = slices[static_cast<size_t>(z)];
        REQUIRE(s.h == v.h);
        REQUIRE(s.w == v.w);
        CHECK(s.provenance.plane == SlicePlane::kInPlane);
        CHECK(s.provenance.index == z);
        CHECK(s.provenance.volume_id == v.patient_id);
        for (int y = 0; y < v.h; ++y)
            for (int x = 0; x < v.w; ++x) CHECK(s.at(y, x) == v.at(y, x, z));
    }
}

TEST_CASE("through plane extraction keeps depth as the second dimension") {
    const Volume v = random_volume(4, 5, 3, 13u);

    const auto hxd = extract_throughplane_slices(v, ThroughAxis::kHxD);
    REQUIRE(hxd.size() == 5);
    for (int x = 0; x < v.w; ++x) {
        const auto& s = hxd[static_cast<size_t>(x)];
        REQUIRE(s.h == v.h);
        REQUIRE(s.w == v.d);
        CHECK(s.provenance.plane == SlicePlane::kThroughHxD);
        CHECK(s.provenance.index == x);
        for (int y = 0; y < v.h; ++y)
            for (int z = 0; z < v.d; ++z) CHECK(s.at(y, z) == v.at(y, x, z));
    }

    const auto wxd = extract_throughplane_slices(v, ThroughAxis::kWxD);
    REQUIRE(wxd.size() == 4);
    for (int y = 0; y < v.h; ++y) {
        const auto& s = wxd[static_cast<size_t>(y)];
        REQUIRE(s.h == v.w);
        REQUIRE(s.w == v.d);
        CHECK(s.provenance.plane == SlicePlane::kThroughWxD);
        CHECK(s.provenance.index == y);
        for (int x = 0; x < v.w; ++x)
            for (int z = 0; z < v.d; ++z) CHECK(s.at(x, z) == v.at(y, x, z));
    }
}

TEST_CASE("stacking inverts through plane extraction") {
    const Volume v = random_volume(6, 4, 5, 29u);
    for (ThroughAxis axis : {ThroughAxis::kHxD, ThroughAxis::kWxD}) {
        const auto slices = extract_throughplane_slices(v, axis);
        const Volume r = stack_throughplane_slices(slices, axis, v);
        REQUIRE(r.h == v.h);
        REQUIRE(r.w == v.w);
        REQUIRE(r.d == v.d);
        CHECK(r.spacing == v.spacing);
        CHECK(r.patient_id == v.patient_id);
        for (size_t i = 0; i < v.voxels.size(); ++i) CHECK(r.voxels[i] == v.voxels[i]);
    }
}

TEST_CASE("stacking validates slice shapes") {
    const Volume v = random_volume(4, 4, 3, 31u);
    auto slices = extract_throughplane_slices(v, ThroughAxis::kHxD);
    slices[1] = SliceImage(5, 3);
    CHECK_THROWS_AS(stack_throughplane_slices(slices, ThroughAxis::kHxD, v), ShapeError);
    CHECK_THROWS_AS(stack_throughplane_slices({}, ThroughAxis::kHxD, v), ShapeError);
}

TEST_CASE("crop_or_pad center crops larger images") {
    SliceImage img(300, 300);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            img.at(y, x) = static_cast<float>((y * 300 + x) % 97) / 97.0f;

    const SliceImage c = crop_or_pad(img, 224, 100);
    REQUIRE(c.h == 224);
    REQUIRE(c.w == 100);
    const int off_y = (300 - 224) / 2;
    const int off_x = (300 - 100) / 2;
    CHECK(off_x == 100);
    for (int y = 0; y < c.h; ++y)
        for (int x = 0; x < c.w; ++x) CHECK(c.at(y, x) == img.at(y + off_y, x + off_x));
}

TEST_CASE("crop_or_pad zero pads smaller images symmetrically") {
    SliceImage img(100, 224);
    for (auto& p : img.pixels) p = 0.5f;

    const SliceImage c = crop_or_pad(img, 224, 224);
    REQUIRE(c.h == 224);
    REQUIRE(c.w == 224);
    const int off = (224 - 100) / 2;
    CHECK(off == 62);
    for (int y = 0; y < c.h; ++y)
        for (int x = 0; x < c.w; ++x) {
            const bool inside = y >= off && y < off + 100;
            CHECK(c.at(y, x) == (inside ? 0.5f : 0.0f));
        }
}

TEST_CASE("crop_or_pad puts odd remainders at the bottom and right") {
    SliceImage img(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(y, x) = static_cast<float>(y * 4 + x) / 16.0f;

    // 4 -> 3: offset (4-3)/2 = 0, so rows 0..2 survive and row 3 is dropped.
    const SliceImage c = crop_or_pad(img, 3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(c.at(y, x) == img.at(y, x));

    // 4 -> 5: offset (4-5)/2 = -1 in integer division truncates toward zero,
    // so the single pad row/column lands at the bottom/right edge.
    const SliceImage p = crop_or_pad(img, 5, 5);
    const int off = (4 - 5) / 2;
    CHECK(off == 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(p.at(y, x) == img.at(y, x));
    for (int i = 0; i < 5; ++i) {
        CHECK(p.at(4, i) == 0.0f);
        CHECK(p.at(i, 4) == 0.0f);
    }

    const SliceImage same = crop_or_pad(img, 4, 4);
    for (size_t i = 0; i < img.pixels.size(); ++i) CHECK(same.pixels[i] == img.pixels[i]);

    CHECK_THROWS_AS(crop_or_pad(img, 0, 4), ShapeError);
}

TEST_CASE("manifest round trip preserves records") {
    const fs::path dir = temp_dir("manifest");
    std::vector<SliceRecord> records = {
        {"volumes/a.mrvol", "case_001", SlicePlane::kInPlane, 0, 224, 224},
        {"volumes/a.mrvol", "case_001", SlicePlane::kThroughHxD, 17, 224, 32},
        {"volumes/b.mrvol", "case_002", SlicePlane::kThroughWxD, 3, 192, 40},
    };
    const fs::path path = dir / "train_manifest.jsonl";
    save_manifest(records, path);

    const auto loaded = load_manifest(path);
    REQUIRE(loaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].path == records[i].path);
        CHECK(loaded[i].patient_id == records[i].patient_id);
        CHECK(loaded[i].plane == records[i].plane);
        CHECK(loaded[i].index == records[i].index);
        CHECK(loaded[i].h == records[i].h);
        CHECK(loaded[i].w == records[i].w);
    }
    CHECK_THROWS_AS(load_manifest(dir / "absent.jsonl"), IngestError);
    fs::remove_all(dir);
}

TEST_CASE("load_slice reads the recorded cut of the stored volume") {
    const fs::path dir = temp_dir("load_slice");
    Volume v = random_volume(6, 5, 4, 41u);
    const fs::path path = dir / "v.mrvol";
    save_volume(v, path);

    SliceRecord rec;
    rec.path = path.string();
    rec.patient_id = v.patient_id;
    rec.plane = SlicePlane::kThroughHxD;
    rec.index = 2;
    rec.h = v.h;
    rec.w = v.d;

    const SliceImage s = load_slice(rec);
    REQUIRE(s.h == v.h);
    REQUIRE(s.w == v.d);
    for (int y = 0; y < v.h; ++y)
        for (int z = 0; z < v.d; ++z) CHECK(s.at(y, z) == v.at(y, 2, z));

    rec.index = 99;
    CHECK_THROWS_AS(load_slice(rec), IngestError);
    fs::remove_all(dir);
}

TEST_CASE("slice plane names round trip") {
    for (SlicePlane p :
         {SlicePlane::kInPlane, SlicePlane::kThroughHxD, SlicePlane::kThroughWxD})
        CHECK(slice_plane_from_string(to_string(p)) == p);
    for (AcquisitionPlane p :
         {AcquisitionPlane::kAxial, AcquisitionPlane::kSagittal, AcquisitionPlane::kCoronal})
        CHECK(acquisition_plane_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(slice_plane_from_string("diagonal"), IngestError);
    CHECK_THROWS_AS(acquisition_plane_from_string("oblique"), IngestError);
}

} // TEST_SUITE
