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

#include "pathsynth/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <zlib.h>

namespace pathsynth {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

template <typename T>
T byteswap_value(T v) {
  std::array<std::uint8_t, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

// Reads little- or big-endian scalars out of a byte span with bounds checks.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}
  void set_swap(bool s) { swap_ = s; }

  template <typename T>
  T get(std::size_t offset) const {
    if (offset + sizeof(T) > bytes_.size()) {
      throw NiftiError(NiftiError::Kind::Truncated,
                       "unexpected end of file at byte offset " + std::to_string(bytes_.size()) +
                           " (needed " + std::to_string(offset + sizeof(T)) + ")");
    }
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    const bool host_little = std::endian::native == std::endian::little;
    return (swap_ == host_little) ? byteswap_value(v) : v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swap_;  // true: file is big-endian
};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  template <typename T>
  void put(std::size_t offset, T v) {
    if (std::endian::native != std::endian::little) v = byteswap_value(v);
    std::memcpy(out_.data() + offset, &v, sizeof(T));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

std::size_t bytes_per_voxel(NiftiDatatype t) {
  switch (t) {
    case NiftiDatatype::UInt8: return 1;
    case NiftiDatatype::Int16:
    case NiftiDatatype::UInt16: return 2;
    case NiftiDatatype::Int32:
    case NiftiDatatype::Float32: return 4;
    case NiftiDatatype::Float64: return 8;
  }
  return 0;
}

bool is_supported(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 64: case 512: return true;
    default: return false;
  }
}

Mat4 qform_affine(const Reader& r, const Vec3& pixdim, float qfac_raw) {
  double b = r.get<float>(256);
  double c = r.get<float>(260);
  double d = r.get<float>(264);
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    const double norm = std::sqrt(b * b + c * c + d * d);
    b /= norm;
    c /= norm;
    d /= norm;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double qfac = qfac_raw < 0.0f ? -1.0 : 1.0;
  const double rot[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}};
  const double scale[3] = {pixdim[0], pixdim[1], pixdim[2] * qfac};
  Mat4 m = identity_affine();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) m[row][col] = rot[row][col] * scale[col];
  }
  m[0][3] = r.get<float>(268);
  m[1][3] = r.get<float>(272);
  m[2][3] = r.get<float>(276);
  return m;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NiftiError(NiftiError::Kind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool ends_with_gz(const std::filesystem::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

template <typename T>
T checked_cast(double v) {
  if (!std::isfinite(v)) {
    throw NiftiError(NiftiError::Kind::OutOfRange, "non-finite value cannot be encoded");
  }
  if constexpr (std::is_integral_v<T>) {
    const double r = std::nearbyint(v);
    if (r < static_cast<double>(std::numeric_limits<T>::min()) ||
        r > static_cast<double>(std::numeric_limits<T>::max())) {
      throw NiftiError(NiftiError::Kind::OutOfRange,
                       "value " + std::to_string(v) + " out of range for datatype");
    }
    return static_cast<T>(r);
  } else {
    return static_cast<T>(v);
  }
}

}  // namespace

const char* to_string(NiftiDatatype t) {
  switch (t) {
    case NiftiDatatype::UInt8: return "uint8";
    case NiftiDatatype::Int16: return "int16";
    case NiftiDatatype::UInt16: return "uint16";
    case NiftiDatatype::Int32: return "int32";
    case NiftiDatatype::Float32: return "float32";
    case NiftiDatatype::Float64: return "float64";
  }
  return "unknown";
}

NiftiDatatype nifti_datatype_from_string(const std::string& name) {
  for (auto t : {NiftiDatatype::UInt8, NiftiDatatype::Int16, NiftiDatatype::UInt16,
                 NiftiDatatype::Int32, NiftiDatatype::Float32, NiftiDatatype::Float64}) {
    if (name == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown NIfTI datatype '" + name + "'");
}

NiftiImage parse_nifti(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw NiftiError(NiftiError::Kind::Truncated,
                     "unexpected end of file at byte offset " + std::to_string(bytes.size()) +
                         " (header needs 348 bytes)");
  }
  Reader r(bytes, false);
  auto ndim = r.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) {
    r.set_swap(true);
    ndim = r.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) {
      throw NiftiError(NiftiError::Kind::BadDimensions, "dim[0] out of range in either byte order");
    }
  }
  if (r.get<std::int32_t>(0) != 348) {
    throw NiftiError(NiftiError::Kind::BadMagic, "sizeof_hdr is not 348");
  }
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
    throw NiftiError(NiftiError::Kind::BadMagic, "magic number is not 'n+1' (single-file NIfTI-1)");
  }
  const auto code = r.get<std::int16_t>(70);
  if (!is_supported(code)) {
    throw NiftiError(NiftiError::Kind::UnsupportedDatatype,
                     "unsupported datatype code " + std::to_string(code));
  }
  const auto datatype = static_cast<NiftiDatatype>(code);

  std::vector<std::int64_t> dims;
  for (int a = 1; a <= ndim; ++a) dims.push_back(r.get<std::int16_t>(40 + 2 * a));
  while (dims.size() > 3 && dims.back() == 1) dims.pop_back();
  if (dims.size() != 3) {
    throw NiftiError(NiftiError::Kind::BadDimensions,
                     "expected 3 dimensions, found " + std::to_string(dims.size()));
  }
  for (auto d : dims) {
    if (d <= 0) throw NiftiError(NiftiError::Kind::BadDimensions, "non-positive dimension");
  }

  Vec3 spacing;
  for (int a = 0; a < 3; ++a) {
    const double p = std::abs(static_cast<double>(r.get<float>(80 + 4 * a)));
    spacing[a] = p > 0.0 && std::isfinite(p) ? p : 1.0;
  }
  Mat4 affine = diagonal_affine(spacing);
  if (r.get<std::int16_t>(254) > 0) {
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) affine[row][col] = r.get<float>(280 + 16 * row + 4 * col);
    }
  } else if (r.get<std::int16_t>(252) > 0) {
    affine = qform_affine(r, spacing, r.get<float>(76));
  }

  const auto vox_offset = static_cast<std::size_t>(r.get<float>(108));
  double slope = r.get<float>(112);
  double inter = r.get<float>(116);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;

  const Grid grid(Dims{dims[0], dims[1], dims[2]}, spacing, affine);
  const auto count = static_cast<std::size_t>(grid.voxel_count());
  const std::size_t bpv = bytes_per_voxel(datatype);
  const std::size_t end = vox_offset + count * bpv;
  if (end > bytes.size()) {
    throw NiftiError(NiftiError::Kind::Truncated,
                     "unexpected end of file at byte offset " + std::to_string(bytes.size()) +
                         " (voxel data ends at " + std::to_string(end) + ")");
  }

  Volume v(grid, 0.0f);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t off = vox_offset + n * bpv;
    double x = 0.0;
    switch (datatype) {
      case NiftiDatatype::UInt8: x = bytes[off]; break;
      case NiftiDatatype::Int16: x = r.get<std::int16_t>(off); break;
      case NiftiDatatype::UInt16: x = r.get<std::uint16_t>(off); break;
      case NiftiDatatype::Int32: x = r.get<std::int32_t>(off); break;
      case NiftiDatatype::Float32: x = r.get<float>(off); break;
      case NiftiDatatype::Float64: x = r.get<double>(off); break;
    }
    if (slope != 1.0 || inter != 0.0) x = x * slope + inter;
    if (!std::isfinite(x)) {
      throw NiftiError(NiftiError::Kind::OutOfRange,
                       "non-finite voxel value at byte offset " + std::to_string(off));
    }
    v[n] = static_cast<float>(x);
  }
  return {std::move(v), datatype};
}

std::vector<std::uint8_t> encode_nifti(const Volume& v, NiftiDatatype datatype) {
  const std::size_t bpv = bytes_per_voxel(datatype);
  const auto count = static_cast<std::size_t>(v.size());
  std::vector<std::uint8_t> out(kDataOffset + count * bpv, 0);
  Writer w(out);
  const Grid& g = v.grid();

  w.put<std::int32_t>(0, 348);
  out[38] = 'r';  // regular
  w.put<std::int16_t>(40, 3);
  for (int a = 0; a < 3; ++a) w.put<std::int16_t>(42 + 2 * a, static_cast<std::int16_t>(g.dims[a]));
  for (int a = 3; a < 7; ++a) w.put<std::int16_t>(42 + 2 * a, 1);
  w.put<std::int16_t>(70, static_cast<std::int16_t>(datatype));
  w.put<std::int16_t>(72, static_cast<std::int16_t>(8 * bpv));
  w.put<float>(76, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) w.put<float>(80 + 4 * a, static_cast<float>(g.spacing[a]));
  w.put<float>(108, static_cast<float>(kDataOffset));
  w.put<float>(112, 1.0f);  // scl_slope
  w.put<float>(116, 0.0f);  // scl_inter
  out[123] = 2 | 8;         // mm, sec
  w.put<std::int16_t>(252, 0);
  w.put<std::int16_t>(254, 1);  // scanner anatomical
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) {
      w.put<float>(280 + 16 * row + 4 * col, static_cast<float>(g.affine[row][col]));
    }
  }
  std::memcpy(out.data() + 344, "n+1\0", 4);

  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t off = kDataOffset + n * bpv;
    const double x = v[n];
    switch (datatype) {
      case NiftiDatatype::UInt8: out[off] = checked_cast<std::uint8_t>(x); break;
      case NiftiDatatype::Int16: w.put(off, checked_cast<std::int16_t>(x)); break;
      case NiftiDatatype::UInt16: w.put(off, checked_cast<std::uint16_t>(x)); break;
      case NiftiDatatype::Int32: w.put(off, checked_cast<std::int32_t>(x)); break;
      case NiftiDatatype::Float32: w.put(off, checked_cast<float>(x)); break;
      case NiftiDatatype::Float64: w.put(off, checked_cast<double>(x)); break;
    }
  }
  return out;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw NiftiError(NiftiError::Kind::Io, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw NiftiError(NiftiError::Kind::Io, "gzip compression failed");
  out.resize(produced);
  return out;
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw NiftiError(NiftiError::Kind::Io, "inflateInit2 failed");
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 18);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc == Z_BUF_ERROR || (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0)) break;
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw NiftiError(NiftiError::Kind::Io, "corrupt gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

NiftiImage read_nifti(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = gzip_decompress(bytes);
  try {
    return parse_nifti(bytes);
  } catch (const NiftiError& e) {
    throw NiftiError(e.kind(), path.string() + ": " + e.what());
  }
}

Volume read_volume(const std::filesystem::path& path) { return read_nifti(path).volume; }

LabelVolume read_labels(const std::filesystem::path& path, const LabelTable& table,
                        bool unknown_as_other) {
  const Volume v = read_volume(path);
  Image<std::int32_t> ids(v.grid(), 0);
  LabelTable full = table;
  for (std::int64_t n = 0; n < v.size(); ++n) {
    const float x = v[n];
    if (x != std::floor(x) || x < 0.0f || x > 2.0e9f) {
      throw NiftiError(NiftiError::Kind::OutOfRange,
                       path.string() + ": label map contains non-integral or negative value " +
                           std::to_string(x));
    }
    ids[n] = static_cast<std::int32_t>(x);
    if (unknown_as_other && !full.contains(ids[n])) {
      full[ids[n]] = ids[n] == 0 ? TissueClass::Background : TissueClass::Other;
    }
  }
  try {
    return LabelVolume(std::move(ids), std::move(full));
  } catch (const std::invalid_argument& e) {
    throw NiftiError(NiftiError::Kind::OutOfRange, path.string() + ": " + e.what());
  }
}

ProbVolume read_prob(const std::filesystem::path& path) {
  Volume v = read_volume(path);
  for (float x : v.data()) {
    if (!(x >= 0.0f && x <= 1.0f)) {
      throw NiftiError(NiftiError::Kind::OutOfRange,
                       path.string() + ": probability value " + std::to_string(x) +
                           " outside [0,1]");
    }
  }
  return ProbVolume(std::move(v));
}

void write_nifti(const Volume& v, const std::filesystem::path& path, NiftiDatatype datatype) {
  std::vector<std::uint8_t> bytes = encode_nifti(v, datatype);
  if (ends_with_gz(path)) bytes = gzip_compress(bytes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NiftiError(NiftiError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw NiftiError(NiftiError::Kind::Io, "write failed for " + path.string());
}

void write_nifti(const LabelVolume& v, const std::filesystem::path& path, NiftiDatatype datatype) {
  Volume as_float(v.grid(), 0.0f);
  const auto& ids = v.labels();
  for (std::int64_t n = 0; n < ids.size(); ++n) as_float[n] = static_cast<float>(ids[n]);
  write_nifti(as_float, path, datatype);
}

}  // namespace pathsynth
