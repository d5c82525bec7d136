// Copyright 2026 The pathsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "oracles.hpp"
#include "pathsynth/nifti.hpp"

using namespace pathsynth;

namespace {

// Minimal hand-rolled NIfTI-1 writer, independent of the library encoder.
struct RawHeader {
  bool big_endian = false;
  std::vector<std::int16_t> dims{2, 3, 4};
  std::int16_t datatype = 16;
  std::array<float, 3> pixdim{1.0f, 1.0f, 1.0f};
  float slope = 1.0f;
  float inter = 0.0f;
  std::int16_t sform_code = 0;
  std::array<std::array<float, 4>, 3> srow{};
  const char* magic = "n+1";
};

template <typename T>
void put(std::vector<std::uint8_t>& b, std::size_t off, T v, bool big) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if (big) std::reverse(raw, raw + sizeof(T));
  std::memcpy(b.data() + off, raw, sizeof(T));
}

std::vector<std::uint8_t> raw_nifti(const RawHeader& h, const std::vector<double>& values,
                                    std::size_t bpv) {
  std::vector<std::uint8_t> b(352 + values.size() * bpv, 0);
  const bool be = h.big_endian;
  put<std::int32_t>(b, 0, 348, be);
  put<std::int16_t>(b, 40, static_cast<std::int16_t>(h.dims.size()), be);
  for (std::size_t a = 0; a < h.dims.size(); ++a) put<std::int16_t>(b, 42 + 2 * a, h.dims[a], be);
  put<std::int16_t>(b, 70, h.datatype, be);
  for (int a = 0; a < 3; ++a) put<float>(b, 80 + 4 * a, h.pixdim[a], be);
  put<float>(b, 108, 352.0f, be);
  put<float>(b, 112, h.slope, be);
  put<float>(b, 116, h.inter, be);
  put<std::int16_t>(b, 254, h.sform_code, be);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) put<float>(b, 280 + 16 * r + 4 * c, h.srow[r][c], be);
  std::memcpy(b.data() + 344, h.magic, std::strlen(h.magic) + 1);
  for (std::size_t n = 0; n < values.size(); ++n) {
    const std::size_t off = 352 + n * bpv;
    switch (h.datatype) {
      case 2: b[off] = static_cast<std::uint8_t>(values[n]); break;
      case 4: put<std::int16_t>(b, off, static_cast<std::int16_t>(values[n]), be); break;
      case 8: put<std::int32_t>(b, off, static_cast<std::int32_t>(values[n]), be); break;
      case 16: put<float>(b, off, static_cast<float>(values[n]), be); break;
      case 64: put<double>(b, off, values[n], be); break;
      case 512: put<std::uint16_t>(b, off, static_cast<std::uint16_t>(values[n]), be); break;
      default: break;
    }
  }
  return b;
}

std::vector<double> ramp(std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) * scale;
  return v;
}

NiftiError::Kind kind_of(std::span<const std::uint8_t> bytes) {
  try {
    parse_nifti(bytes);
  } catch (const NiftiError& e) {
    return e.kind();
  }
  FAIL("expected NiftiError");
  return NiftiError::Kind::Io;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace

TEST_CASE("file round-trip for every supported datatype") {
  testing::TempDir tmp("nifti");
  Mat4 affine = identity_affine();
  affine[0] = {-0.5, 0.0, 0.0, 12.25};
  affine[1] = {0.0, 1.5, 0.125, -7.5};
  affine[2] = {0.0, 0.0, 2.0, 3.0};
  const Grid g({5, 4, 3}, {0.5, 1.5, 2.0}, affine);
  const std::pair<NiftiDatatype, float> types[] = {
      {NiftiDatatype::UInt8, 255.0f},  {NiftiDatatype::Int16, -300.0f},
      {NiftiDatatype::UInt16, 60000.0f}, {NiftiDatatype::Int32, -100000.0f},
      {NiftiDatatype::Float32, 0.3f},  {NiftiDatatype::Float64, 0.7f}};
  for (const auto& [dt, extreme] : types) {
    Volume v(g, 0.0f);
    for (std::int64_t n = 0; n < v.size(); ++n) v[n] = static_cast<float>(n % 50);
    if (dt == NiftiDatatype::Float32 || dt == NiftiDatatype::Float64) {
      v = testing::random_volume(g.dims, 5);
      v = Volume(g, v.storage());
    }
    v[7] = extreme;
    for (const char* ext : {".nii", ".nii.gz"}) {
      const auto path = tmp.path() / (std::string(to_string(dt)) + ext);
      write_nifti(v, path, dt);
      const NiftiImage back = read_nifti(path);
      CAPTURE(to_string(dt));
      CHECK(back.datatype == dt);
      CHECK(back.volume.grid() == g);
      CHECK(back.volume == v);
    }
    CHECK(nifti_datatype_from_string(to_string(dt)) == dt);
  }
  CHECK_THROWS(nifti_datatype_from_string("complex64"));
}

TEST_CASE("gzip output is deterministic") {
  const Volume v = testing::random_volume({8, 8, 8}, 3);
  const auto raw = encode_nifti(v, NiftiDatatype::Float32);
  CHECK(gzip_compress(raw) == gzip_compress(raw));
  CHECK(gzip_decompress(gzip_compress(raw)) == raw);
}

TEST_CASE("labels and probability maps") {
  testing::TempDir tmp("nifti_labels");
  const LabelVolume l = testing::random_labels({6, 6, 6}, 1);
  write_nifti(l, tmp.path() / "l.nii.gz", NiftiDatatype::Int16);
  CHECK(read_labels(tmp.path() / "l.nii.gz", l.table(), false) == l);
  LabelTable partial{{2, TissueClass::WhiteMatter}};
  CHECK_THROWS_AS(read_labels(tmp.path() / "l.nii.gz", partial, false), NiftiError);
  const LabelVolume relaxed = read_labels(tmp.path() / "l.nii.gz", partial, true);
  CHECK(relaxed.tissue_of(3) == TissueClass::Other);

  Volume frac(Grid({2, 2, 2}, {1.0, 1.0, 1.0}), 1.5f);
  write_nifti(frac, tmp.path() / "f.nii");
  CHECK_THROWS_AS(read_labels(tmp.path() / "f.nii", partial, true), NiftiError);
  CHECK_THROWS_AS(read_prob(tmp.path() / "f.nii"), NiftiError);
}

TEST_CASE("big-endian, 4D singleton and scaling") {
  RawHeader h;
  h.big_endian = true;
  h.dims = {2, 3, 4, 1};
  h.datatype = 4;
  h.pixdim = {0.5f, 2.0f, 3.0f};
  h.slope = 0.5f;
  h.inter = 1.0f;
  const auto bytes = raw_nifti(h, ramp(24), 2);
  const NiftiImage img = parse_nifti(bytes);
  CHECK(img.volume.dims() == Dims{2, 3, 4});
  CHECK(img.volume.grid().spacing == Vec3{0.5, 2.0, 3.0});
  CHECK(img.volume.grid().affine[1][1] == 2.0);
  for (std::int64_t n = 0; n < 24; ++n) CHECK(img.volume[n] == 0.5f * n + 1.0f);
}

TEST_CASE("sform takes precedence over pixdim") {
  RawHeader h;
  h.sform_code = 1;
  h.srow = {{{-1.0f, 0.0f, 0.0f, 10.0f}, {0.0f, 1.0f, 0.0f, -4.0f}, {0.0f, 0.0f, 1.0f, 2.5f}}};
  const NiftiImage img = parse_nifti(raw_nifti(h, ramp(24), 4));
  CHECK(img.volume.grid().affine[0][0] == -1.0);
  CHECK(img.volume.grid().affine[0][3] == 10.0);
  CHECK(img.volume.grid().affine[2][3] == 2.5);
}

TEST_CASE("malformed files raise the documented error kinds") {
  const auto good = raw_nifti(RawHeader{}, ramp(24), 4);
  CHECK_NOTHROW(parse_nifti(good));

  SUBCASE("truncated data") {
    std::vector<std::uint8_t> cut(good.begin(), good.end() - 5);
    CHECK(kind_of(cut) == NiftiError::Kind::Truncated);
    try {
      parse_nifti(cut);
    } catch (const NiftiError& e) {
      CHECK(std::string(e.what()).find("unexpected end of file at byte offset " +
                                       std::to_string(cut.size())) != std::string::npos);
    }
  }
  SUBCASE("truncated header") {
    std::vector<std::uint8_t> cut(good.begin(), good.begin() + 100);
    CHECK(kind_of(cut) == NiftiError::Kind::Truncated);
  }
  SUBCASE("bad magic") {
    RawHeader h;
    h.magic = "ni1";
    CHECK(kind_of(raw_nifti(h, ramp(24), 4)) == NiftiError::Kind::BadMagic);
  }
  SUBCASE("unsupported datatype") {
    RawHeader h;
    h.datatype = 128;  // RGB24
    CHECK(kind_of(raw_nifti(h, ramp(24), 3)) == NiftiError::Kind::UnsupportedDatatype);
  }
  SUBCASE("non-singleton fourth dimension") {
    RawHeader h;
    h.dims = {2, 3, 4, 2};
    CHECK(kind_of(raw_nifti(h, ramp(48), 4)) == NiftiError::Kind::BadDimensions);
  }
  SUBCASE("files") {
    testing::TempDir tmp("nifti_bad");
    std::vector<std::uint8_t> cut(good.begin(), good.end() - 5);
    write_bytes(tmp.path() / "cut.nii", cut);
    write_bytes(tmp.path() / "cut.nii.gz", gzip_compress(cut));
    auto gz = gzip_compress(good);
    gz.resize(gz.size() / 2);
    write_bytes(tmp.path() / "half.nii.gz", gz);
    for (const char* f : {"cut.nii", "cut.nii.gz", "half.nii.gz"}) {
      CAPTURE(f);
      try {
        read_nifti(tmp.path() / f);
        FAIL("expected throw");
      } catch (const NiftiError& e) {
        CHECK(e.kind() == NiftiError::Kind::Truncated);
      }
    }
    try {
      read_nifti(tmp.path() / "missing.nii");
      FAIL("expected throw");
    } catch (const NiftiError& e) {
      CHECK(e.kind() == NiftiError::Kind::Io);
    }
  }
}

TEST_CASE("values that do not fit the datatype are rejected") {
  Volume v(Grid({2, 2, 2}, {1.0, 1.0, 1.0}), 0.0f);
  v[0] = 256.0f;
  CHECK_THROWS_AS(encode_nifti(v, NiftiDatatype::UInt8), NiftiError);
  v[0] = -1.0f;
  CHECK_THROWS_AS(encode_nifti(v, NiftiDatatype::UInt16), NiftiError);
  v[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(encode_nifti(v, NiftiDatatype::Float32), NiftiError);
}
